import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dbmlab.measures import (
    EmpiricalMeasure,
    InitialConfiguration,
    MeasureSpec,
    config_from_dict,
    config_to_dict,
    insert_gap,
    kolmogorov_distance,
    measure_from_config,
    measure_to_config,
    points_from_csv,
    points_to_csv,
    quantiles,
    rigidity,
)


# ---------------------------------------------------------------- measure specs

def test_semicircle_density_at_origin():
    mu = MeasureSpec.semicircle(1.0)
    assert mu.density(0.0) == pytest.approx(1.0 / math.pi, abs=1e-14)
    # edge of support
    assert mu.density(2.0) == 0.0
    assert mu.density(2.1) == 0.0


def test_semicircle_cdf_symmetry_and_mass():
    mu = MeasureSpec.semicircle(0.7)
    edge = 2.0 * math.sqrt(0.7)
    assert mu.cdf(-edge) == pytest.approx(0.0, abs=1e-14)
    assert mu.cdf(0.0) == pytest.approx(0.5, abs=1e-14)
    assert mu.cdf(edge) == pytest.approx(1.0, abs=1e-14)


def test_power_density_value():
    # density (kappa+1)/(b-a) * |x-center|^kappa on [-1,1], kappa=2 -> 1.5 x^2
    mu = MeasureSpec.power(2.0, 0.0, (-1.0, 1.0))
    assert mu.density(0.5) == pytest.approx(0.375, abs=1e-15)
    assert mu.cdf(1.0) == pytest.approx(1.0, abs=1e-12)


def test_power_asymmetric_support_mass():
    mu = MeasureSpec.power(0.5, 0.25, (-1.0, 2.0))
    assert mu.cdf(2.0) == pytest.approx(1.0, abs=1e-12)
    assert mu.cdf(-1.0) == pytest.approx(0.0, abs=1e-14)
    xs = np.linspace(-1.0, 2.0, 2001)
    dens = mu.density(xs)
    assert np.all(dens >= 0.0)
    # quadrature mass check, trapezoid is fine at this resolution
    assert np.trapezoid(dens, xs) == pytest.approx(1.0, abs=2e-4)


def test_uniform_cdf():
    mu = MeasureSpec.uniform(-1.0, 3.0)
    assert mu.density(0.0) == pytest.approx(0.25)
    assert mu.cdf(1.0) == pytest.approx(0.5)


def test_piecewise_cdf_matches_antiderivative():
    # density 3/2 x^2 on [-1,1] expressed as a piecewise block
    mu = MeasureSpec.piecewise([((-1.0, 1.0), (0.0, 0.0, 1.5))])
    xs = np.linspace(-1.0, 1.0, 41)
    expected = 0.5 * (xs ** 3 + 1.0)
    assert np.allclose(mu.cdf(xs), expected, atol=1e-14)


def test_piecewise_disconnected_support():
    mu = MeasureSpec.piecewise([((-2.0, -1.0), (0.5,)), ((1.0, 2.0), (0.5,))])
    assert mu.cdf(0.0) == pytest.approx(0.5, abs=1e-14)
    assert mu.density(0.0) == 0.0
    assert mu.cdf(2.0) == pytest.approx(1.0, abs=1e-14)


def test_piecewise_wrong_mass_rejected():
    with pytest.raises(ValueError):
        MeasureSpec.piecewise([((-1.0, 1.0), (0.3,))])


def test_negative_density_rejected():
    with pytest.raises(ValueError):
        MeasureSpec.piecewise([((-1.0, 1.0), (0.5, 1.0))])  # negative at x=-1


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        MeasureSpec.semicircle(0.0)
    with pytest.raises(ValueError):
        MeasureSpec.uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        MeasureSpec.power(-0.5, 0.0, (-1.0, 1.0))


# ---------------------------------------------------------------- quantiles

def test_uniform_quantiles_frozen():
    mu = MeasureSpec.uniform(-1.0, 1.0)
    q = quantiles(mu, 4)
    assert np.allclose(q, [-0.75, -0.25, 0.25, 0.75], atol=1e-12)


def test_power_quantiles_closed_form():
    # CDF = (1 + sgn(x)|x|^{3/2})/2 for kappa=1/2 on [-1,1];
    # n=2 levels 1/4, 3/4 invert to -/+ 2^{-2/3}
    mu = MeasureSpec.power(0.5, 0.0, (-1.0, 1.0))
    q = quantiles(mu, 2)
    assert np.allclose(q, [-(2.0 ** (-2.0 / 3.0)), 2.0 ** (-2.0 / 3.0)], atol=1e-12)


def test_quantile_levels_hit_cdf():
    for mu in [
        MeasureSpec.semicircle(1.0),
        MeasureSpec.power(2.0, 0.0, (-1.0, 1.0)),
        MeasureSpec.uniform(0.0, 5.0),
    ]:
        n = 17
        q = quantiles(mu, n)
        levels = (np.arange(1, n + 1) - 0.5) / n
        assert np.all(np.diff(q) > 0)
        assert np.allclose(mu.cdf(q), levels, atol=1e-10)


def test_quantile_plateau_midpoint_and_flag():
    # Two separated uniform blobs; the median level falls inside the hole
    mu = MeasureSpec.piecewise([((-2.0, -1.0), (0.5,)), ((1.0, 2.0), (0.5,))])
    q, flags = quantiles(mu, 3, return_flags=True)
    assert q[1] == pytest.approx(0.0, abs=1e-12)  # midpoint of the hole
    assert flags[1]
    assert not flags[0] and not flags[2]


def test_quantile_warning_on_plateau():
    mu = MeasureSpec.piecewise([((-2.0, -1.0), (0.5,)), ((1.0, 2.0), (0.5,))])
    with pytest.warns(UserWarning):
        quantiles(mu, 3)


# ---------------------------------------------------------------- discrepancy stats

def test_rigidity_quantile_config_is_zero():
    mu = MeasureSpec.semicircle(1.0)
    pts = quantiles(mu, 32)
    assert rigidity(pts, mu) == pytest.approx(0.0, abs=1e-8)


def test_rigidity_equispaced_uniform_is_one():
    mu = MeasureSpec.uniform(-1.0, 1.0)
    for n in [8, 33, 100]:
        pts = np.linspace(-1.0, 1.0, n)
        assert rigidity(pts, mu) == pytest.approx(1.0, abs=1e-9)


def test_kolmogorov_quantile_config_exact():
    mu = MeasureSpec.uniform(-1.0, 1.0)
    n = 16
    pts = quantiles(mu, n)
    assert kolmogorov_distance(pts, mu) == pytest.approx(1.0 / 32.0, abs=1e-12)


def test_kolmogorov_shifted_points():
    # single atom at 0.5 against uniform[0,1]: sup|F_n - F| attained at the atom
    mu = MeasureSpec.uniform(0.0, 1.0)
    assert kolmogorov_distance(np.array([0.5]), mu) == pytest.approx(0.5, abs=1e-14)


# ---------------------------------------------------------------- gap insertion

def test_insert_gap_frozen_example():
    pts = np.array([-0.2, -0.05, 0.1, 0.4])
    out = insert_gap(pts, 0.0, 0.25)
    assert np.allclose(out, [-0.25, -0.25, 0.25, 0.4], atol=1e-15)


def test_insert_gap_center_tie_goes_left():
    out = insert_gap(np.array([0.3]), 0.3, 0.1)
    assert out[0] == pytest.approx(0.2, abs=1e-15)


def test_insert_gap_endpoints_untouched():
    pts = np.array([-0.25, 0.25])
    out = insert_gap(pts, 0.0, 0.25)
    assert np.allclose(out, pts)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=40),
    st.floats(-1.5, 1.5),
    st.floats(0.01, 1.0),
)
def test_insert_gap_properties(raw, x_star, delta):
    pts = np.sort(np.asarray(raw, dtype=float))
    out = insert_gap(pts, x_star, delta)
    assert out.shape == pts.shape
    assert np.all(np.diff(out) >= 0)  # order preserved
    inside = np.abs(out - x_star) < delta - 1e-12
    assert not inside.any()  # nothing strictly inside the gap
    again = insert_gap(out, x_star, delta)
    assert np.array_equal(out, again)  # idempotent


# ---------------------------------------------------------------- configurations

def test_configuration_quantile_generator_reproducible():
    mu = MeasureSpec.semicircle(1.0)
    cfg = InitialConfiguration.from_quantiles(mu, 25)
    cfg2 = config_from_dict(config_to_dict(cfg))
    assert np.array_equal(cfg.points, cfg2.points)  # bit exact


def test_configuration_equispaced():
    cfg = InitialConfiguration.equispaced(-1.0, 1.0, 5)
    assert np.allclose(cfg.points, [-1.0, -0.5, 0.0, 0.5, 1.0])


def test_configuration_gap_generator_roundtrip():
    cfg = InitialConfiguration.equispaced(-1.0, 1.0, 11).with_gap(0.0, 0.3)
    cfg2 = config_from_dict(config_to_dict(cfg))
    assert np.array_equal(cfg.points, cfg2.points)
    assert not np.any(np.abs(cfg.points) < 0.3 - 1e-12)


def test_configuration_explicit_roundtrip_json():
    pts = np.array([-1.0, 0.1234567890123456, 2.5])
    cfg = InitialConfiguration.explicit(pts)
    blob = json.dumps(config_to_dict(cfg))
    cfg2 = config_from_dict(json.loads(blob))
    assert np.array_equal(cfg.points, cfg2.points)


def test_empirical_measure_sorted_and_cdf():
    emp = EmpiricalMeasure(np.array([0.5, -0.5]))
    assert np.all(np.diff(emp.points) >= 0)
    assert emp.cdf(0.0) == pytest.approx(0.5)
    assert emp.cdf(-1.0) == 0.0
    assert emp.cdf(1.0) == 1.0


# ---------------------------------------------------------------- serialization

def test_measure_config_roundtrip():
    for mu in [
        MeasureSpec.semicircle(0.3),
        MeasureSpec.power(0.5, 0.1, (-1.0, 2.0)),
        MeasureSpec.uniform(-2.0, -1.0),
        MeasureSpec.piecewise([((-1.0, 0.0), (1.0,)), ((1.0, 2.0), (0.0,))]),
    ]:
        blob = json.dumps(measure_to_config(mu))
        back = measure_from_config(json.loads(blob))
        assert back == mu


def test_points_csv_roundtrip(tmp_path):
    pts = np.array([-1.0, 1.0 / 3.0, 0.1 + 0.2, 1e-17])
    path = tmp_path / "pts.csv"
    points_to_csv(pts, path)
    back = points_from_csv(path)
    assert np.array_equal(pts, back)  # 17 significant digits round-trips float64
