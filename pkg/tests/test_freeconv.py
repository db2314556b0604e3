import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dbmlab.errors import OutsideDomain, PrincipalValueRequired
from dbmlab.freeconv import (
    FreeConvolutionState,
    SaddlePair,
    Window,
    forward_map,
    gap_window,
    hilbert_transform,
    H_map,
    inverse_map,
    make_window,
    psi_t,
    saddle_points,
    second_moment_integral,
    stieltjes,
    t_critical,
    window_from_json,
    window_to_json,
    y_t,
)
from dbmlab.measures import (
    EmpiricalMeasure,
    InitialConfiguration,
    MeasureSpec,
    kolmogorov_distance,
)

UNIFORM = MeasureSpec.uniform(-1.0, 1.0)
SEMI = MeasureSpec.semicircle(1.0)


# ---------------------------------------------------------------- stieltjes

def test_stieltjes_two_atoms_at_i():
    emp = EmpiricalMeasure(np.array([-1.0, 1.0]))
    val = stieltjes(emp, 1j)
    assert val == pytest.approx(-0.5j, abs=1e-15)


def test_stieltjes_semicircle_closed_form():
    # (z - sqrt(z^2 - 4)) / 2 at z = 3
    assert stieltjes(SEMI, 3.0) == pytest.approx((3.0 - math.sqrt(5.0)) / 2.0, abs=1e-12)
    assert stieltjes(SEMI, -3.0) == pytest.approx(-(3.0 - math.sqrt(5.0)) / 2.0, abs=1e-12)


def test_stieltjes_uniform_log_ratio():
    z = 2.0 + 0.5j
    expected = 0.5 * (np.log(z + 1.0) - np.log(z - 1.0))
    assert stieltjes(UNIFORM, z) == pytest.approx(expected, abs=1e-13)


def test_stieltjes_herglotz_sign():
    for mu in [UNIFORM, SEMI, MeasureSpec.power(0.5, 0.0, (-1.0, 1.0))]:
        val = stieltjes(mu, 0.3 + 0.2j)
        assert val.imag < 0.0


def test_stieltjes_power_matches_adaptive_quad():
    from scipy.integrate import quad

    mu = MeasureSpec.power(0.5, 0.0, (-1.0, 1.0))
    z = 0.4 + 0.05j
    re, _ = quad(lambda s: mu.density(s) * ((z - s).real) / abs(z - s) ** 2, -1, 1, points=[0.0, 0.4], limit=200)
    im, _ = quad(lambda s: mu.density(s) * (-(z - s).imag) / abs(z - s) ** 2, -1, 1, points=[0.0, 0.4], limit=200)
    val = stieltjes(mu, z)
    assert val.real == pytest.approx(re, abs=1e-10)
    assert val.imag == pytest.approx(im, abs=1e-10)


def test_stieltjes_on_support_requires_pv():
    with pytest.raises(PrincipalValueRequired):
        stieltjes(UNIFORM, 0.5)
    with pytest.raises(PrincipalValueRequired):
        stieltjes(EmpiricalMeasure(np.array([0.0, 1.0])), 1.0)


def test_stieltjes_empirical_compensated_sum_scale():
    # 10^4 atoms; worst-case naive summation noise would exceed this bound
    pts = np.linspace(-1.0, 1.0, 10_000)
    val = stieltjes(EmpiricalMeasure(pts), 2.0)
    exact = np.sum(1.0 / (2.0 - pts)) / pts.size
    assert val == pytest.approx(exact, abs=1e-13)


# ---------------------------------------------------------------- hilbert transform

def test_hilbert_uniform_inside():
    assert hilbert_transform(UNIFORM, 0.5) == pytest.approx(0.5 * math.log(3.0), abs=1e-10)


def test_hilbert_uniform_outside():
    assert hilbert_transform(UNIFORM, 2.0) == pytest.approx(0.5 * math.log(3.0), abs=1e-10)


def test_hilbert_semicircle_inside():
    # principal value of the semicircle resolvent on support is x/2
    assert hilbert_transform(SEMI, 0.6) == pytest.approx(0.3, abs=1e-10)


def test_hilbert_symmetric_power_center_is_zero():
    mu = MeasureSpec.power(0.5, 0.0, (-1.0, 1.0))
    assert hilbert_transform(mu, 0.0) == pytest.approx(0.0, abs=1e-9)


def test_hilbert_piecewise_excision_matches_log_ratio():
    # uniform density expressed as a piecewise block exercises the
    # excision + Richardson route against the closed form
    mu = MeasureSpec.piecewise([((-1.0, 1.0), (0.5,))])
    assert hilbert_transform(mu, 0.5) == pytest.approx(0.5 * math.log(3.0), abs=1e-9)
    assert hilbert_transform(mu, -0.25) == pytest.approx(
        0.5 * math.log(0.75 / 1.25), abs=1e-9
    )


def test_hilbert_empirical_off_atoms():
    emp = EmpiricalMeasure(np.array([-1.0, 1.0]))
    assert hilbert_transform(emp, 0.5) == pytest.approx(
        0.5 * (1.0 / 1.5 + 1.0 / (-0.5)), abs=1e-14
    )
    with pytest.raises(ValueError):
        hilbert_transform(emp, 1.0)


# ---------------------------------------------------------------- second moment / t_critical

def test_second_moment_uniform_outside():
    # int ds / (2 (2-s)^2) over [-1,1] = 1/3
    assert second_moment_integral(UNIFORM, 2.0) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_t_critical_uniform():
    assert t_critical(UNIFORM, 2.0) == pytest.approx(3.0, abs=1e-8)
    assert t_critical(UNIFORM, 0.0) == 0.0
    assert t_critical(UNIFORM, 1.0) == 0.0  # endpoint, one-sided divergence


def test_t_critical_power_quadratic_center():
    mu = MeasureSpec.power(2.0, 0.0, (-1.0, 1.0))
    assert t_critical(mu, 0.0) == pytest.approx(1.0 / 3.0, abs=1e-8)
    assert t_critical(mu, 0.5) == 0.0  # positive density there


def test_t_critical_power_soft_exponent_is_zero():
    mu = MeasureSpec.power(0.5, 0.0, (-1.0, 1.0))
    assert t_critical(mu, 0.0) == 0.0  # kappa <= 1: divergent


def test_t_critical_semicircle_outside():
    expected = (5.0 + 3.0 * math.sqrt(5.0)) / 2.0  # 1 / (-G'(3))
    assert t_critical(SEMI, 3.0) == pytest.approx(expected, abs=1e-8)


def test_t_critical_piecewise_quartic_center():
    # density 2.5 x^4 on [-1,1]: int 2.5 x^2 dx = 5/3, t_cr = 0.6
    mu = MeasureSpec.piecewise([((-1.0, 1.0), (0.0, 0.0, 0.0, 0.0, 2.5))])
    assert t_critical(mu, 0.0) == pytest.approx(0.6, abs=1e-8)


# ---------------------------------------------------------------- subordination height

def test_y_t_semicircle_closed_form():
    # y_{t,sc}(0) = t / sqrt(1+t)
    assert y_t(SEMI, 1.0, 0.0) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)
    assert y_t(SEMI, 0.5, 0.0) == pytest.approx(0.5 / math.sqrt(1.5), abs=1e-10)


def test_y_t_single_atom():
    emp = EmpiricalMeasure(np.array([0.0]))
    assert y_t(emp, 1.0, 0.0) == pytest.approx(1.0, abs=1e-10)
    # off the atom: 1/((x)^2+y^2) = 1 at x=0.6 -> y = 0.8
    assert y_t(emp, 1.0, 0.6) == pytest.approx(0.8, abs=1e-10)


def test_y_t_zero_off_support():
    assert y_t(UNIFORM, 0.04, 1.5) == 0.0


def test_y_t_root_property():
    mu = MeasureSpec.power(0.5, 0.0, (-1.0, 1.0))
    t, x = 0.3, 0.2
    y = y_t(mu, t, x)
    assert 0.0 < y < math.sqrt(t)
    val = -(stieltjes(mu, x + 1j * y).imag) / y
    assert val == pytest.approx(1.0 / t, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(-1.5, 1.5))
def test_y_t_bounds_property(t, x):
    y = y_t(SEMI, t, x)
    assert 0.0 <= y <= math.sqrt(t) + 1e-12
    if abs(x) >= 2.0 + math.sqrt(t):
        assert y == 0.0


def test_y_t_grows_with_t():
    xs = [0.0, 0.5, 1.1]
    for x in xs:
        y1 = y_t(UNIFORM, 0.2, x)
        y2 = y_t(UNIFORM, 0.8, x)
        assert y2 > y1 - 1e-12


# ---------------------------------------------------------------- maps

def test_H_map_single_atom():
    emp = EmpiricalMeasure(np.array([0.0]))
    assert H_map(emp, 1.0, 1j) == pytest.approx(0.0, abs=1e-12)


def test_H_map_outside_domain():
    emp = EmpiricalMeasure(np.array([0.0]))
    with pytest.raises(OutsideDomain):
        H_map(emp, 1.0, 0.5j)  # graph height at 0 is 1


def test_forward_map_uniform_frozen():
    expected = 2.0 + 0.25 * 0.5 * math.log(3.0)
    assert forward_map(UNIFORM, 0.25, 2.0) == pytest.approx(expected, abs=1e-10)


def test_forward_map_moves_less_than_sqrt_t():
    for mu in [UNIFORM, SEMI]:
        for t in [0.1, 0.5, 1.0]:
            for x in [-1.2, 0.0, 0.7, 2.5]:
                assert abs(forward_map(mu, t, x) - x) <= math.sqrt(t) + 1e-10


def test_forward_map_is_increasing():
    xs = np.linspace(-2.5, 2.5, 41)
    vals = [forward_map(SEMI, 0.7, x) for x in xs]
    assert np.all(np.diff(vals) > 0)


def test_inverse_map_roundtrip():
    state = FreeConvolutionState(SEMI, 0.5)
    for x in [-1.5, -0.3, 0.0, 0.9, 2.2]:
        xi = state.forward(x)
        z = state.inverse(xi)
        assert z.real == pytest.approx(x, abs=1e-8)
        assert abs(state.H_raw(z) - xi) <= 1e-10 * max(1.0, abs(xi))


def test_inverse_map_wrapper():
    z = inverse_map(SEMI, 1.0, 0.0)
    assert z == pytest.approx(1j / math.sqrt(2.0), abs=1e-9)


def test_inverse_map_far_outside():
    # far beyond the support the map is near-identity; round trip must hold
    state = FreeConvolutionState(UNIFORM, 0.1)
    z = state.inverse(50.0)
    assert z.imag == 0.0
    assert abs(state.H_raw(z) - 50.0) <= 1e-10 * 50.0
    with pytest.raises(ValueError):
        state.inverse(float("nan"))


def test_psi_weak_continuity_small_t():
    # as t -> 0 the evolved density approaches the initial one
    assert psi_t(UNIFORM, 1e-4, 0.0) == pytest.approx(0.5, abs=1e-2)


# ---------------------------------------------------------------- psi

def test_psi_semicircle_at_center():
    assert psi_t(SEMI, 1.0, 0.0) == pytest.approx(1.0 / (math.pi * math.sqrt(2.0)), abs=1e-10)


def test_psi_semicircle_oracle_spot_checks():
    # free convolution of two semicircles is the semicircle with added variance
    t = 0.5
    target = MeasureSpec.semicircle(1.0 + t)
    state = FreeConvolutionState(SEMI, t)
    for xi in [-2.0, -0.7, 0.0, 0.4, 1.9]:
        assert state.psi(xi) == pytest.approx(target.density(xi), abs=1e-9)


def test_psi_zero_outside():
    assert psi_t(SEMI, 1.0, 4.0) == 0.0


def test_psi_parametric_identity():
    # psi_t(H(x + i y(x))) = y(x) / (pi t), the two routes must agree
    mu = MeasureSpec.power(0.5, 0.0, (-1.0, 1.0))
    state = FreeConvolutionState(mu, 0.4)
    for x in [-0.6, 0.0, 0.35]:
        y = state.y(x)
        assert y > 0
        xi = state.forward(x)
        assert state.psi(xi) == pytest.approx(y / (math.pi * 0.4), abs=1e-8)


# ---------------------------------------------------------------- proof-grade bounds

def test_resolvent_bound_on_graph():
    # |G(x + i y_t(x))| <= 1 / sqrt(t) on the closed subordination graph
    for mu in [UNIFORM, SEMI]:
        for t in [0.3, 1.0]:
            for x in np.linspace(-2.5, 2.5, 21):
                y = y_t(mu, t, x)
                z = x + 1j * max(y, 1e-14)
                if y == 0.0 and abs(mu.cdf(x) - 0.5) < 0.5 - 1e-12:
                    continue  # on-support real point, resolvent needs PV there
                val = stieltjes(mu, z) if y > 0 else stieltjes(mu, x)
                assert abs(val) <= 1.0 / math.sqrt(t) + 1e-9


def test_empirical_vs_limit_resolvent_comparison():
    # |G_n(x + i eps) - G(x + i eps)| <= pi * n * KS / (n * eps)
    n = 50
    cfg = InitialConfiguration.from_quantiles(UNIFORM, n)
    emp = cfg.empirical()
    ks = kolmogorov_distance(cfg.points, UNIFORM)
    m_tilde = n * ks
    for eps in [0.1, 0.01]:
        bound = math.pi * m_tilde / (n * eps)
        for x in [-0.9, -0.2, 0.0, 0.55, 1.3]:
            diff = abs(stieltjes(emp, x + 1j * eps) - stieltjes(UNIFORM, x + 1j * eps))
            assert diff <= bound + 1e-12


def test_graph_is_real_under_H():
    # Im H(x + i y_t(x)) vanishes along the graph
    state = FreeConvolutionState(SEMI, 0.8)
    for x in np.linspace(-2.2, 2.2, 23):
        y = state.y(x)
        if y == 0.0:
            continue
        val = state.H_raw(x + 1j * y)
        assert abs(val.imag) <= 1e-9


# ---------------------------------------------------------------- windows and saddles

def test_bulk_window_semicircle():
    w = make_window(SEMI, 1.0, 0.0)
    assert w.x_star_t == pytest.approx(0.0, abs=1e-10)
    assert w.c_t == pytest.approx(1.0 / (math.pi * math.sqrt(2.0)), abs=1e-10)
    assert w.epsilon is None


def test_window_consistency_with_psi():
    w = make_window(UNIFORM, 0.5, 0.2)
    assert psi_t(UNIFORM, 0.5, w.x_star_t) == pytest.approx(w.c_t, abs=1e-8)


def test_window_json_roundtrip():
    w = make_window(SEMI, 1.0, 0.1)
    w2 = window_from_json(window_to_json(w))
    assert w2 == w


def test_bulk_window_rejected_in_gap():
    emp = EmpiricalMeasure(np.array([-2.0, -1.5, 1.5, 2.0]))
    with pytest.raises(OutsideDomain):
        make_window(emp, 0.01, 0.0)


def test_gap_window():
    cfg = InitialConfiguration.equispaced(-1.0, 1.0, 40).with_gap(0.0, 0.3)
    t = 0.0009
    w = gap_window(cfg, t, 0.0, epsilon=0.03)
    assert w.c_t is None
    assert w.epsilon == 0.03
    g = stieltjes(cfg.empirical(), 0.0)
    assert g.imag == 0.0
    assert w.x_star_t == pytest.approx(t * g.real, abs=1e-10)
    blob = window_to_json(w)
    assert blob["c_t"] is None
    assert window_from_json(blob) == w


def test_gap_window_rejected_in_bulk():
    cfg = InitialConfiguration.equispaced(-1.0, 1.0, 40)
    with pytest.raises(OutsideDomain):
        gap_window(cfg, 0.5, 0.0, epsilon=0.1)


def test_saddle_single_atom_frozen():
    cfg = InitialConfiguration.explicit(np.array([0.0]))
    w = make_window(cfg.empirical(), 1.0, 0.0)
    pair = saddle_points(cfg, 1.0, w, 0.0, 0.0)
    assert pair.z == pytest.approx(1j, abs=1e-9)
    assert pair.w == pytest.approx(1j, abs=1e-9)
    assert pair.x0 == pytest.approx(0.0, abs=1e-9)
    assert pair.s == pytest.approx(1.0, abs=1e-9)
    assert pair.residual <= 1e-9


def test_saddle_residual_bulk():
    cfg = InitialConfiguration.from_quantiles(UNIFORM, 50)
    w = make_window(UNIFORM, 0.5, 0.0)
    pair = saddle_points(cfg, 0.5, w, 1.0, -2.0)
    assert pair.residual <= 1e-9
    assert pair.s > 0
    # saddles sit on the empirical graph
    state = FreeConvolutionState(cfg.empirical(), 0.5)
    assert state.y(pair.z.real) == pytest.approx(pair.z.imag, abs=1e-9)


def test_gap_saddles_are_real():
    cfg = InitialConfiguration.equispaced(-1.0, 1.0, 200).with_gap(0.0, 0.3)
    t = 0.01 * 0.3**2
    w = gap_window(cfg, t, 0.0, epsilon=0.03)
    pair = saddle_points(cfg, t, w, 2.0, -2.0)
    assert pair.z.imag == 0.0
    assert pair.w.imag == 0.0
    assert pair.s == 0.0
