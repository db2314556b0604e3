"""Reference measures and deterministic initial configurations.

A MeasureSpec is an exactly described probability density on the real
line (semicircle, normalized power law, uniform, or piecewise
polynomial); every quantity derived from it (cdf, quantiles, critical
times) is computed from closed-form antiderivatives where they exist.
An InitialConfiguration is a finite ordered point set together with the
generator that produced it, so a configuration can be re-created
bit-exactly from its serialized description.

Total mass of every spec is validated to 1e-10 at construction time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .panels import graded_edges, panel_nodes

MASS_TOL = 1e-10
_LEVEL_TOL = 1e-12


def _as_scalar(x, was_scalar):
    return float(x) if was_scalar else x


@dataclass(frozen=True)
class MeasureSpec:
    """Closed-form probability measure on the real line.

    kind is one of "semicircle", "power", "uniform", "piecewise";
    params holds the kind-specific scalars; support is an ascending
    tuple of disjoint closed intervals.
    """

    kind: str
    params: tuple
    support: tuple

    # ------------------------------------------------------------ constructors

    @staticmethod
    def semicircle(variance):
        """Semicircular density sqrt(4 v - x^2) / (2 pi v) on [-2 sqrt v, 2 sqrt v]."""
        v = float(variance)
        if not v > 0.0:
            raise ValueError("semicircle variance must be positive")
        edge = 2.0 * math.sqrt(v)
        return MeasureSpec("semicircle", (v,), ((-edge, edge),))

    @staticmethod
    def power(exponent, center, support):
        """Density proportional to |x - center|^exponent on [a, b], mass 1."""
        kappa = float(exponent)
        c = float(center)
        a, b = float(support[0]), float(support[1])
        if not kappa > 0.0:
            raise ValueError("power exponent must be positive")
        if not a < b:
            raise ValueError("power support must be a nondegenerate interval")
        if not (a <= c <= b):
            raise ValueError("power center must lie inside the support")
        raw = (_signed_pow(b - c, kappa + 1.0) - _signed_pow(a - c, kappa + 1.0)) / (
            kappa + 1.0
        )
        coeff = 1.0 / raw
        spec = MeasureSpec("power", (kappa, c, coeff), ((a, b),))
        _validate_mass(spec)
        return spec

    @staticmethod
    def uniform(a, b):
        a, b = float(a), float(b)
        if not a < b:
            raise ValueError("uniform support must be a nondegenerate interval")
        return MeasureSpec("uniform", (), ((a, b),))

    @staticmethod
    def piecewise(pieces):
        """Piecewise polynomial density: [( (a, b), coefficients ), ...].

        Coefficients are ascending powers of x. Pieces must be disjoint and
        ascending; total mass must equal 1 within 1e-10 and the density must
        be nonnegative on every piece.
        """
        norm = []
        for (a, b), coeffs in pieces:
            a, b = float(a), float(b)
            if not a < b:
                raise ValueError("piecewise piece must have a < b")
            norm.append(((a, b), tuple(float(c) for c in coeffs)))
        norm.sort(key=lambda p: p[0][0])
        for left, right in zip(norm[:-1], norm[1:]):
            if left[0][1] > right[0][0] + 1e-15:
                raise ValueError("piecewise pieces overlap")
        spec = MeasureSpec(
            "piecewise", tuple(norm), tuple(interval for interval, _ in norm)
        )
        _validate_nonnegative(spec)
        _validate_mass(spec)
        return spec

    # ------------------------------------------------------------ evaluation

    def density(self, x):
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        x_arr = np.atleast_1d(x_arr)
        out = np.zeros_like(x_arr)
        if self.kind == "semicircle":
            (v,) = self.params
            rad = 4.0 * v - x_arr**2
            mask = rad > 0.0
            out[mask] = np.sqrt(rad[mask]) / (2.0 * math.pi * v)
        elif self.kind == "uniform":
            (a, b) = self.support[0]
            mask = (x_arr >= a) & (x_arr <= b)
            out[mask] = 1.0 / (b - a)
        elif self.kind == "power":
            kappa, c, coeff = self.params
            a, b = self.support[0]
            mask = (x_arr >= a) & (x_arr <= b)
            out[mask] = coeff * np.abs(x_arr[mask] - c) ** kappa
        else:
            assigned = np.zeros(x_arr.shape, dtype=bool)
            for (a, b), coeffs in self.params:
                mask = (x_arr >= a) & (x_arr <= b) & ~assigned
                out[mask] = np.polynomial.polynomial.polyval(x_arr[mask], coeffs)
                assigned |= mask
        return _as_scalar(out if not scalar else out[0], scalar)

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        x_arr = np.atleast_1d(x_arr)
        if self.kind == "semicircle":
            (v,) = self.params
            edge = 2.0 * math.sqrt(v)
            xc = np.clip(x_arr, -edge, edge)
            rad = np.maximum(4.0 * v - xc**2, 0.0)
            out = (
                0.5
                + xc * np.sqrt(rad) / (4.0 * math.pi * v)
                + np.arcsin(np.clip(xc / edge, -1.0, 1.0)) / math.pi
            )
        elif self.kind == "uniform":
            (a, b) = self.support[0]
            out = np.clip((x_arr - a) / (b - a), 0.0, 1.0)
        elif self.kind == "power":
            kappa, c, coeff = self.params
            a, b = self.support[0]
            xc = np.clip(x_arr, a, b)
            out = (
                coeff
                * (_signed_pow(xc - c, kappa + 1.0) - _signed_pow(a - c, kappa + 1.0))
                / (kappa + 1.0)
            )
        else:
            out = np.zeros_like(x_arr)
            for (a, b), coeffs in self.params:
                anti = np.polynomial.polynomial.polyint(coeffs)
                xc = np.clip(x_arr, a, b)
                out += np.polynomial.polynomial.polyval(
                    xc, anti
                ) - np.polynomial.polynomial.polyval(a, anti)
        return _as_scalar(out if not scalar else out[0], scalar)

    # ------------------------------------------------------------ structure

    def hull(self):
        """Smallest closed interval containing the support."""
        return self.support[0][0], self.support[-1][1]

    def kink_points(self):
        """Interior points where the density is not smooth."""
        if self.kind == "power":
            kappa, c, _ = self.params
            if kappa != int(kappa) or kappa < 2:
                return (c,)
            return ()
        if self.kind == "piecewise":
            return tuple(
                edge for interval in self.support for edge in interval
            )
        return ()

    def mass_pieces(self):
        """Positive-mass intervals with cumulative cdf values at their ends."""
        pieces = []
        acc = 0.0
        for a, b in self.support:
            m = float(self.cdf(b) - self.cdf(a))
            if m > 0.0:
                pieces.append((a, b, acc, acc + m))
                acc += m
        return pieces


def _signed_pow(u, p):
    return np.sign(u) * np.abs(u) ** p


def _validate_mass(spec):
    lo, hi = spec.hull()
    total = float(spec.cdf(hi))
    if abs(total - 1.0) > MASS_TOL:
        raise ValueError(f"measure mass is {total!r}, expected 1 within {MASS_TOL}")
    # independent numeric verification on graded panels
    numeric = 0.0
    for a, b in spec.support:
        edges = graded_edges(a, b, special=(a, b) + spec.kink_points(), floor=1e-13 * (b - a))
        x, w = panel_nodes(edges)
        numeric += float(np.dot(w, spec.density(x)))
    if abs(numeric - 1.0) > 1e-7:
        raise ValueError("numeric mass check failed; density and cdf disagree")


def _validate_nonnegative(spec):
    for (a, b), coeffs in spec.params:
        xs = np.linspace(a, b, 257)
        vals = np.polynomial.polynomial.polyval(xs, coeffs)
        if np.min(vals) < -1e-12:
            raise ValueError("piecewise density is negative on its support")


# ---------------------------------------------------------------- quantiles


def quantiles(mu, n, return_flags=False):
    """Points q_k with cdf(q_k) = (k - 1/2)/n, k = 1..n.

    Where the level falls on a flat stretch of the cdf the quantile is not
    unique; the midpoint of the admissible interval is returned and the
    corresponding flag is set (a UserWarning is issued unless flags are
    requested explicitly).
    """
    if not isinstance(mu, MeasureSpec):
        raise TypeError("quantiles requires a MeasureSpec")
    n = int(n)
    if n < 1:
        raise ValueError("need at least one quantile")
    levels = (np.arange(1, n + 1) - 0.5) / n
    pieces = mu.mass_pieces()
    c_hi = np.array([p[3] for p in pieces])
    out = np.empty(n)
    flags = np.zeros(n, dtype=bool)
    for idx, p in enumerate(levels):
        i = int(np.searchsorted(c_hi, p))
        if i == len(pieces):
            i -= 1
        a, b, lo, hi = pieces[i]
        if p <= lo + _LEVEL_TOL:
            # junction with the previous mass piece
            left = pieces[i - 1][1] if i > 0 else a
            if a - left > 0.0:
                out[idx] = 0.5 * (left + a)
                flags[idx] = True
            else:
                out[idx] = a
            continue
        if p >= hi - _LEVEL_TOL:
            if i + 1 < len(pieces) and pieces[i + 1][0] - b > 0.0:
                out[idx] = 0.5 * (b + pieces[i + 1][0])
                flags[idx] = True
            else:
                out[idx] = b
            continue
        scale = max(1.0, abs(a), abs(b))
        q = brentq(
            lambda x: mu.cdf(x) - p, a, b, xtol=2e-15 * scale, rtol=8.9e-16
        )
        out[idx] = q
        if abs(mu.cdf(q) - p) > 1e-10:
            raise RuntimeError("quantile solve missed its level tolerance")
    if flags.any() and not return_flags:
        warnings.warn(
            "quantile level(s) fall on a flat stretch of the cdf; "
            "midpoints of the admissible intervals were returned",
            UserWarning,
            stacklevel=2,
        )
    if return_flags:
        return out, flags
    return out


def rigidity(points, mu):
    """n * max_k |a_k - q_k| against the quantiles of mu."""
    pts = np.sort(np.asarray(points, dtype=float))
    q = quantiles(mu, pts.size)
    return float(pts.size * np.max(np.abs(pts - q)))


def kolmogorov_distance(points, mu):
    """Exact sup |F_n - F|, evaluated at the step breakpoints."""
    pts = np.sort(np.asarray(points, dtype=float))
    n = pts.size
    f = np.atleast_1d(mu.cdf(pts))
    k = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs(f - k / n), np.abs(f - (k - 1) / n))))


def insert_gap(points, x_star, half_width):
    """Project every point strictly inside (x*-d, x*+d) to the nearer edge.

    A point exactly at the center goes to the left edge. Order and count
    are preserved (projection is monotone).
    """
    if not half_width > 0.0:
        raise ValueError("gap half-width must be positive")
    pts = np.asarray(points, dtype=float).copy()
    left = x_star - half_width
    right = x_star + half_width
    inside = (pts > left) & (pts < right)
    pts[inside] = np.where(pts[inside] > x_star, right, left)
    return pts


# ---------------------------------------------------------------- point sets


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniform atomic measure on a finite sorted point set."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise ValueError("empirical measure needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)
        self.points.setflags(write=False)

    @property
    def n(self):
        return int(self.points.size)

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        out = np.searchsorted(self.points, np.atleast_1d(x_arr), side="right") / self.n
        return _as_scalar(out if not scalar else out[0], scalar)

    def hull(self):
        return float(self.points[0]), float(self.points[-1])


@dataclass(frozen=True, eq=False)
class InitialConfiguration:
    """Point set plus the generator description that reproduces it."""

    points: np.ndarray
    provenance: dict = field(default_factory=lambda: {"kind": "explicit"})

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        self.points.setflags(write=False)

    @property
    def n(self):
        return int(self.points.size)

    def empirical(self):
        return EmpiricalMeasure(self.points)

    @staticmethod
    def from_quantiles(mu, n):
        pts = quantiles(mu, n)
        prov = {"kind": "quantiles", "n": int(n), "measure": measure_to_config(mu)}
        return InitialConfiguration(pts, prov)

    @staticmethod
    def equispaced(a, b, n):
        pts = np.linspace(float(a), float(b), int(n))
        prov = {"kind": "equispaced", "a": float(a), "b": float(b), "n": int(n)}
        return InitialConfiguration(pts, prov)

    @staticmethod
    def explicit(points):
        pts = np.asarray(points, dtype=float)
        prov = {"kind": "explicit", "points": [float(p) for p in pts]}
        return InitialConfiguration(pts, prov)

    def with_gap(self, x_star, half_width):
        pts = insert_gap(self.points, x_star, half_width)
        prov = {
            "kind": "gap",
            "x_star": float(x_star),
            "half_width": float(half_width),
            "base": self.provenance,
        }
        return InitialConfiguration(pts, prov)


def config_to_dict(cfg):
    return {"generator": cfg.provenance}


def config_from_dict(d):
    try:
        gen = d["generator"]
    except (KeyError, TypeError):
        raise ValueError("configuration dict needs a 'generator' block") from None
    return _replay(gen)


def _replay(gen):
    kind = gen.get("kind")
    if kind == "explicit":
        return InitialConfiguration.explicit(np.asarray(gen["points"], dtype=float))
    if kind == "equispaced":
        return InitialConfiguration.equispaced(gen["a"], gen["b"], gen["n"])
    if kind == "quantiles":
        mu = measure_from_config(gen["measure"])
        return InitialConfiguration.from_quantiles(mu, gen["n"])
    if kind == "gap":
        base = _replay(gen["base"])
        return base.with_gap(gen["x_star"], gen["half_width"])
    raise ValueError(f"unknown configuration generator {kind!r}")


# ---------------------------------------------------------------- serialization


def measure_to_config(mu):
    if mu.kind == "semicircle":
        return {
            "kind": "semicircle",
            "variance": mu.params[0],
            "support": [list(mu.support[0])],
        }
    if mu.kind == "power":
        kappa, c, _ = mu.params
        return {
            "kind": "power",
            "exponent": kappa,
            "center": c,
            "support": [list(mu.support[0])],
        }
    if mu.kind == "uniform":
        return {"kind": "uniform", "support": [list(mu.support[0])]}
    if mu.kind == "piecewise":
        return {
            "kind": "piecewise",
            "pieces": [
                {"support": [a, b], "coefficients": list(coeffs)}
                for (a, b), coeffs in mu.params
            ],
        }
    raise ValueError(f"unknown measure kind {mu.kind!r}")


def measure_from_config(d):
    kind = d.get("kind")
    if kind == "semicircle":
        return MeasureSpec.semicircle(d["variance"])
    if kind == "power":
        (support,) = d["support"]
        return MeasureSpec.power(d["exponent"], d["center"], tuple(support))
    if kind == "uniform":
        (support,) = d["support"]
        return MeasureSpec.uniform(*support)
    if kind == "piecewise":
        pieces = [
            (tuple(p["support"]), tuple(p["coefficients"])) for p in d["pieces"]
        ]
        return MeasureSpec.piecewise(pieces)
    raise ValueError(f"unknown measure kind {kind!r}")


def points_to_csv(points, path):
    with open(path, "w") as fh:
        for p in np.asarray(points, dtype=float):
            fh.write(f"{p:.17g}\n")


def points_from_csv(path):
    with open(path) as fh:
        return np.array([float(line) for line in fh if line.strip()])
