"""Free additive convolution with a semicircle, via subordination.

For a probability measure mu and a time t > 0, the density psi_t of
the evolved measure is recovered from the geometry of the map
H(z) = z + t G(z), where G is the Stieltjes transform of mu.  The
subordination height

    y_t(x) = inf { y >= 0 : int dmu(s) / ((x-s)^2 + y^2) <= 1/t }

defines a graph x -> x + i y_t(x) on which H takes real values and is
strictly increasing; H maps the open region above the graph
conformally onto the upper half plane.  Writing F for the inverse of
H along the graph,

    psi_t(xi) = -Im G(F(xi)) / pi,

with the parametric identity psi_t(H(x + i y_t(x))) = y_t(x)/(pi t)
available as an independent route.  The finite-n saddle points of the
kernel's contour representation are F evaluated at rescaled window
coordinates, for mu the empirical measure of the initial points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BracketingError,
    NonConvergence,
    OutsideDomain,
    PrincipalValueRequired,
)
from .measures import EmpiricalMeasure, InitialConfiguration, MeasureSpec
from .panels import graded_edges, panel_nodes

__all__ = [
    "StieltjesEvaluator",
    "FreeConvolutionState",
    "Window",
    "SaddlePair",
    "stieltjes",
    "hilbert_transform",
    "second_moment_integral",
    "t_critical",
    "y_t",
    "H_map",
    "forward_map",
    "psi_t",
    "inverse_map",
    "make_window",
    "gap_window",
    "window_to_json",
    "window_from_json",
    "saddle_points",
]

_DIVERGENCE_THRESHOLD = 1e12  # partial integrals beyond this count as divergent


# --------------------------------------------------------------------------
# measure handling helpers


def _as_measure(obj):
    if isinstance(obj, (MeasureSpec, EmpiricalMeasure)):
        return obj
    if isinstance(obj, InitialConfiguration):
        return obj.empirical()
    if isinstance(obj, (np.ndarray, list, tuple)):
        return EmpiricalMeasure(np.asarray(obj, dtype=float))
    raise TypeError(f"not a measure: {type(obj).__name__}")


def _atoms(mu):
    """Atom locations for empirical-like inputs, else None."""
    if isinstance(mu, EmpiricalMeasure):
        return mu.points
    if isinstance(mu, InitialConfiguration):
        return mu.points
    return None


def _interval_distance(x, a, b):
    return max(a - x, x - b, 0.0)


def _support_distance(mu, x):
    pts = _atoms(mu)
    if pts is not None:
        return float(np.min(np.abs(pts - x)))
    best = math.inf
    for a, b in mu.support:
        d = _interval_distance(x, a, b)
        if d == 0.0:
            return 0.0
        best = min(best, d)
    return best


# --------------------------------------------------------------------------
# Stieltjes transform


def _stieltjes_closed(mu, z):
    """Closed-form G for the semicircle and uniform kinds; array-safe."""
    z = np.asarray(z, dtype=complex)
    if mu.kind == "semicircle":
        (v,) = mu.params
        e = 2.0 * math.sqrt(v)
        # principal square roots keep Im G < 0 in the upper half plane and
        # give the 1/z-decaying branch on the real axis outside the support
        w = np.sqrt(z - e) * np.sqrt(z + e)
        return (z - w) / (2.0 * v)
    a, b = mu.support[0]
    return (np.log(z - a) - np.log(z - b)) / (b - a)


def _panel_edges(a, b, span, sharp=(), soft=(), soft_floor=None):
    """Panel edges refining fully toward `sharp` points (density kinks) and
    down to `soft_floor` toward `soft` points (pole anchors)."""
    edges = graded_edges(a, b, special=sharp, floor=1e-13 * span)
    if soft:
        edges = np.union1d(edges, graded_edges(a, b, special=soft, floor=soft_floor))
    return edges


def _cauchy_panels(mu, z):
    """int density(s)/(z - s) ds by panels graded toward Re z and the kinks."""
    zz = complex(z)
    hull_lo, hull_hi = mu.hull()
    span = max(hull_hi - hull_lo, 1e-12)
    kinks = mu.kink_points()
    total = 0.0 + 0.0j
    for a, b in mu.support:
        if not b > a:
            continue
        anchor = min(max(zz.real, a), b)
        dist = max(abs(zz.imag), _interval_distance(zz.real, a, b))
        floor = max(0.5 * dist, 1e-13 * span)
        edges = _panel_edges(
            a, b, span,
            sharp=[k for k in kinks if a < k < b],
            soft=[anchor],
            soft_floor=floor,
        )
        s, w = panel_nodes(edges)
        total += complex(np.sum(w * mu.density(s) / (zz - s)))
    return total


def _stieltjes_spec(mu, zz):
    if mu.kind in ("semicircle", "uniform"):
        return complex(_stieltjes_closed(mu, zz))
    return _cauchy_panels(mu, zz)


def stieltjes(mu, z):
    """Stieltjes transform G(z) = int dmu(s)/(z - s).

    Exact compensated summation for atomic measures; closed forms for the
    semicircle and uniform kinds; graded-panel quadrature otherwise.  Real
    z on the support needs a principal value and is rejected.
    """
    mu = _as_measure(mu)
    zz = complex(z)
    if not (math.isfinite(zz.real) and math.isfinite(zz.imag)):
        raise ValueError("z must be finite")
    if zz.imag == 0.0 and _support_distance(mu, zz.real) == 0.0:
        raise PrincipalValueRequired(
            "z lies on the support; use hilbert_transform for the principal value"
        )
    pts = _atoms(mu)
    if pts is not None:
        terms = 1.0 / (zz - pts)
        return complex(math.fsum(terms.real), math.fsum(terms.imag)) / pts.size
    return _stieltjes_spec(mu, zz)


@dataclass(frozen=True)
class StieltjesEvaluator:
    """Callable G for a fixed source measure with a fixed quadrature budget."""

    source: object
    order: int = 16
    tolerance: float = 1e-10

    def __call__(self, z):
        return stieltjes(self.source, z)


# --------------------------------------------------------------------------
# Hilbert transform (principal value on the support)


def _excised_integral(mu, x, eps):
    kinks = mu.kink_points()
    total = 0.0
    for a, b in mu.support:
        for lo, hi in ((a, min(b, x - eps)), (max(a, x + eps), b)):
            if not hi > lo:
                continue
            edges = _panel_edges(
                lo, hi, hi - lo if hi - lo > 0 else 1.0,
                sharp=[k for k in kinks if lo < k < hi],
                soft=[x - eps, x + eps],
                soft_floor=eps / 8.0,
            )
            s, w = panel_nodes(edges)
            total += float(np.sum(w * mu.density(s) / (x - s)))
    return total


def _pv_excision(mu, x):
    hull_lo, hull_hi = mu.hull()
    span = hull_hi - hull_lo
    edge_set = {e for piece in mu.support for e in piece}
    if x in edge_set and mu.density(x) > 0.0:
        raise ValueError("non-integrable: positive density at a support edge")
    gaps = [abs(x - e) for e in edge_set if e != x]
    gaps += [abs(x - k) for k in mu.kink_points() if k != x]
    eps0 = min(gaps) * 0.5 if gaps else span * 0.125
    eps0 = min(eps0, span * 0.125)
    ladder = [_excised_integral(mu, x, eps0 / 2.0**j) for j in range(7)]
    # the excised integral expands in odd powers of the excision radius;
    # eliminate orders 1, 3, 5 over the halving ladder
    r = np.array(ladder)
    for order in (1, 3, 5):
        f = 2.0**order
        r = (f * r[1:] - r[:-1]) / (f - 1.0)
    return float(r[-1])


def hilbert_transform(mu, x):
    """Principal value of int dmu(s)/(x - s); ordinary integral off support."""
    mu = _as_measure(mu)
    x = float(x)
    pts = _atoms(mu)
    if pts is not None:
        if np.min(np.abs(pts - x)) == 0.0:
            raise ValueError("non-integrable: an atom sits at x")
        terms = 1.0 / (x - pts)
        return math.fsum(terms) / pts.size
    if mu.kind == "uniform":
        a, b = mu.support[0]
        if x == a or x == b:
            raise ValueError("non-integrable: logarithmic endpoint divergence")
        return math.log(abs((x - a) / (x - b))) / (b - a)
    if mu.kind == "semicircle":
        (v,) = mu.params
        if x * x <= 4.0 * v:
            return x / (2.0 * v)
        return (x - math.copysign(math.sqrt(x * x - 4.0 * v), x)) / (2.0 * v)
    if _support_distance(mu, x) > 0.0:
        return _cauchy_panels(mu, complex(x)).real
    return _pv_excision(mu, x)


# --------------------------------------------------------------------------
# second moment integral and the critical time


def _syndiv(coeffs, x):
    """Divide an ascending-coefficient polynomial by (s - x).

    Returns (quotient ascending, remainder); p(s) = q(s)(s-x) + r.
    """
    d = np.asarray(coeffs, dtype=float)[::-1]
    if d.size <= 1:
        return np.zeros(0), float(d[0]) if d.size else 0.0
    q = np.empty(d.size - 1)
    acc = d[0]
    for i in range(1, d.size):
        q[i - 1] = acc
        acc = d[i] + acc * x
    return q[::-1], float(acc)


def _piecewise_second_moment(mu, x):
    from numpy.polynomial import polynomial as P

    total = 0.0
    for (a, b), coeffs in mu.params:
        co = np.asarray(coeffs, dtype=float)
        q1, r0 = _syndiv(co, x)
        q, r1 = _syndiv(q1, x) if q1.size else (np.zeros(0), 0.0)
        scale = max(float(np.max(np.abs(co))), 1e-300)
        scale *= max(1.0, abs(b - a), abs(x - a), abs(x - b)) ** max(co.size - 1, 0)
        if a <= x <= b:
            # on the piece the density must vanish to second order at x,
            # else the integral diverges (one-sidedly at the ends)
            if abs(r0) > 1e-12 * scale or abs(r1) > 1e-12 * scale:
                return math.inf
            if q.size:
                anti = P.polyint(q)
                total += float(P.polyval(b, anti) - P.polyval(a, anti))
        else:
            if q.size:
                anti = P.polyint(q)
                total += float(P.polyval(b, anti) - P.polyval(a, anti))
            total += r1 * math.log(abs((b - x) / (a - x)))
            total += r0 * (1.0 / (x - b) - 1.0 / (x - a))
    return total


def second_moment_integral(mu, x):
    """int dmu(s)/(x - s)^2, with exact divergence detection (may be inf)."""
    mu = _as_measure(mu)
    x = float(x)
    pts = _atoms(mu)
    if pts is not None:
        diffs = x - pts
        if np.min(np.abs(diffs)) == 0.0:
            return math.inf
        return math.fsum(1.0 / diffs**2) / pts.size
    if mu.kind == "uniform":
        a, b = mu.support[0]
        if a <= x <= b:
            return math.inf
        return (1.0 / (x - b) - 1.0 / (x - a)) / (b - a)
    if mu.kind == "semicircle":
        (v,) = mu.params
        if x * x <= 4.0 * v:
            return math.inf
        return (abs(x) / math.sqrt(x * x - 4.0 * v) - 1.0) / (2.0 * v)
    if mu.kind == "power":
        kappa, c, coeff = mu.params
        a, b = mu.support[0]
        if x < a or x > b:
            anchor = min(max(x, a), b)
            floor = max(0.5 * _interval_distance(x, a, b), 1e-13 * (b - a))
            edges = _panel_edges(
                a, b, b - a,
                sharp=[k for k in mu.kink_points() if a < k < b],
                soft=[anchor],
                soft_floor=floor,
            )
            s, w = panel_nodes(edges)
            return float(np.sum(w * mu.density(s) / (x - s) ** 2))
        if x == c:
            if kappa <= 1.0:
                return math.inf
            total = (b - c) ** (kappa - 1.0) if b > c else 0.0
            total += (c - a) ** (kappa - 1.0) if c > a else 0.0
            return coeff * total / (kappa - 1.0)
        return math.inf  # density positive at x
    return _piecewise_second_moment(mu, x)


def t_critical(mu, x_star):
    """Largest time with vanishing evolved density at x*; 0 when divergent."""
    d = second_moment_integral(mu, float(x_star))
    if not math.isfinite(d) or d > _DIVERGENCE_THRESHOLD:
        return 0.0
    return 1.0 / d


# --------------------------------------------------------------------------
# subordination height


def _lorentz(mu, x, y):
    """int dmu(s) / ((x - s)^2 + y^2) for scalar x, y > 0."""
    pts = _atoms(mu)
    if pts is not None:
        return float(np.mean(1.0 / ((x - pts) ** 2 + y * y)))
    if mu.kind in ("semicircle", "uniform"):
        return -complex(_stieltjes_closed(mu, complex(x, y))).imag / y
    return -_cauchy_panels(mu, complex(x, y)).imag / y


def _y_scalar(mu, t, x):
    st = math.sqrt(t)
    if second_moment_integral(mu, x) <= 1.0 / t:
        return 0.0
    target = 1.0 / t
    lo, hi = 0.0, st
    while hi - lo > 1e-12 * st:
        mid = 0.5 * (lo + hi)
        if _lorentz(mu, x, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _chunked_rows(m, n, budget=4_000_000):
    return max(1, budget // max(n, 1))


def _lorentz_points_many(pts, xs, ys):
    out = np.empty(xs.size)
    block = _chunked_rows(xs.size, pts.size)
    for i in range(0, xs.size, block):
        sl = slice(i, i + block)
        d2 = (xs[sl, None] - pts[None, :]) ** 2 + ys[sl, None] ** 2
        out[sl] = np.mean(1.0 / d2, axis=1)
    return out


def _bisect_profile(f, t, xs):
    """Vectorized height bisection: f(xs, ys) -> Lorentzian integrals."""
    st = math.sqrt(t)
    target = 1.0 / t
    mask = f(xs, np.full_like(xs, st * 1e-14)) > target
    lo = np.zeros_like(xs)
    hi = np.full_like(xs, st)
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        high = f(xs, mid) > target
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
    return np.where(mask, 0.5 * (lo + hi), 0.0)


class FreeConvolutionState:
    """Immutable bundle of (mu, t) with cached subordination-graph samples.

    The graph cache only serves to bracket the monotone inversion of H;
    all returned values come from full-precision scalar evaluations.
    """

    def __init__(self, mu, t):
        self.mu = _as_measure(mu)
        self.t = float(t)
        if not (math.isfinite(self.t) and self.t > 0.0):
            raise ValueError("t must be positive and finite")
        self.sqrt_t = math.sqrt(self.t)
        self._graph = None
        self._shared_nodes = None

    # ------------------------------------------------------------ pointwise

    def y(self, x):
        return _y_scalar(self.mu, self.t, float(x))

    def stieltjes(self, z):
        return stieltjes(self.mu, z)

    def H_raw(self, z):
        """H(z) = z + t G(z) without domain validation."""
        z = complex(z)
        if z.imag == 0.0:
            return complex(z.real + self.t * hilbert_transform(self.mu, z.real), 0.0)
        return z + self.t * stieltjes(self.mu, z)

    def H(self, z):
        z = complex(z)
        tol = 1e-12 * max(1.0, self.sqrt_t)
        if z.imag < -tol:
            raise OutsideDomain("z lies in the lower half plane")
        y_req = self.y(z.real)
        if z.imag + tol < y_req:
            raise OutsideDomain(
                f"z is below the subordination graph (height {y_req:.6g})"
            )
        return self.H_raw(z)

    def forward(self, x):
        """Real image H(x + i y(x)) of a point transported along the flow."""
        x = float(x)
        y = self.y(x)
        if y == 0.0:
            return x + self.t * hilbert_transform(self.mu, x)
        val = complex(x, y) + self.t * stieltjes(self.mu, complex(x, y))
        if abs(val.imag) > 1e-7 * max(1.0, self.sqrt_t):
            raise NonConvergence(
                f"graph point failed to map to the real axis: Im = {val.imag:.3e}"
            )
        return float(val.real)

    def _h_exact(self, x):
        x = float(x)
        y = _y_scalar(self.mu, self.t, x)
        if y > 0.0:
            return x + self.t * stieltjes(self.mu, complex(x, y)).real
        return x + self.t * hilbert_transform(self.mu, x)

    # ------------------------------------------------------------ profiles

    def _shared_quadrature(self):
        # reusable nodes for the power/piecewise profile approximations
        if self._shared_nodes is None:
            mu = self.mu
            hull_lo, hull_hi = mu.hull()
            span = max(hull_hi - hull_lo, 1e-12)
            kinks = mu.kink_points()
            nodes = []
            weights = []
            for a, b in mu.support:
                if not b > a:
                    continue
                special = [k for k in kinks if a < k < b]
                s, w = panel_nodes(
                    graded_edges(a, b, special=special, floor=1e-7 * span), order=12
                )
                nodes.append(s)
                weights.append(w * mu.density(s))
            self._shared_nodes = (np.concatenate(nodes), np.concatenate(weights))
        return self._shared_nodes

    def _y_profile(self, xs):
        pts = _atoms(self.mu)
        if pts is not None:
            return _bisect_profile(
                lambda X, Y: _lorentz_points_many(pts, X, Y), self.t, xs
            )
        if self.mu.kind in ("semicircle", "uniform"):
            def f(X, Y):
                g = _stieltjes_closed(self.mu, X + 1j * Y)
                return -np.imag(g) / Y

            return _bisect_profile(f, self.t, xs)
        s, wd = self._shared_quadrature()

        def f(X, Y):
            out = np.empty(X.size)
            block = _chunked_rows(X.size, s.size)
            for i in range(0, X.size, block):
                sl = slice(i, i + block)
                d2 = (X[sl, None] - s[None, :]) ** 2 + Y[sl, None] ** 2
                out[sl] = np.sum(wd[None, :] / d2, axis=1)
            return out

        return _bisect_profile(f, self.t, xs)

    def _h_profile(self, xs, ys):
        pts = _atoms(self.mu)
        if pts is not None:
            out = np.empty(xs.size)
            block = _chunked_rows(xs.size, pts.size)
            for i in range(0, xs.size, block):
                sl = slice(i, i + block)
                dx = xs[sl, None] - pts[None, :]
                d2 = dx**2 + ys[sl, None] ** 2
                out[sl] = np.mean(dx / d2, axis=1)
            return xs + self.t * out
        if self.mu.kind in ("semicircle", "uniform"):
            g = _stieltjes_closed(self.mu, xs + 1j * ys)
            return xs + self.t * np.real(g)
        s, wd = self._shared_quadrature()
        out = np.empty(xs.size)
        block = _chunked_rows(xs.size, s.size)
        for i in range(0, xs.size, block):
            sl = slice(i, i + block)
            dx = xs[sl, None] - s[None, :]
            d2 = dx**2 + ys[sl, None] ** 2
            out[sl] = np.sum(wd[None, :] * dx / d2, axis=1)
        hs = xs + self.t * out
        # on-support points pinched to the axis need the principal value
        pinched = np.nonzero(ys == 0.0)[0]
        for i in pinched:
            if _support_distance(self.mu, xs[i]) == 0.0:
                hs[i] = xs[i] + self.t * hilbert_transform(self.mu, xs[i])
        return hs

    def _ensure_graph(self):
        if self._graph is not None:
            return self._graph
        mu, st = self.mu, self.sqrt_t
        hull_lo, hull_hi = mu.hull()
        span = max(hull_hi - hull_lo, st, 1e-6)
        margin = 2.0 * st + 0.125 * span
        lo, hi = hull_lo - margin, hull_hi + margin
        parts = [np.linspace(lo, hi, 1201)]
        pts = _atoms(mu)
        if pts is not None:
            lump = math.sqrt(self.t / pts.size)
            ladder = np.linspace(-8.0, 8.0, 33) * lump
            parts.append((pts[:, None] + ladder[None, :]).ravel())
            if pts.size > 1:
                parts.append(0.5 * (pts[1:] + pts[:-1]))
        else:
            anchors = set(mu.kink_points())
            for a, b in mu.support:
                anchors.update((a, b))
            cluster = np.linspace(-3.0, 3.0, 25) * st
            for a in anchors:
                parts.append(a + cluster)
        xs = np.unique(np.clip(np.concatenate(parts), lo, hi))
        ys = self._y_profile(xs)
        thr = max(st / 64.0, 1e-3 * st)
        for _ in range(6):
            dy = np.abs(np.diff(ys))
            need = (dy > thr) & (np.diff(xs) > 1e-9 * span)
            if not need.any():
                break
            mids = 0.5 * (xs[:-1][need] + xs[1:][need])
            ym = self._y_profile(mids)
            order = np.argsort(np.concatenate([xs, mids]), kind="stable")
            xs = np.concatenate([xs, mids])[order]
            ys = np.concatenate([ys, ym])[order]
        hs = self._h_profile(xs, ys)
        self._graph = _Graph(xs, ys, hs, np.maximum.accumulate(hs))
        return self._graph

    # ------------------------------------------------------------ inversion

    def inverse(self, xi):
        """F(xi): the graph point x + i y(x) with H(x + i y(x)) = xi."""
        xi = float(xi)
        if not math.isfinite(xi):
            raise ValueError("xi must be finite")
        g = self._ensure_graph()
        if xi <= g.hs_mono[0] or xi >= g.hs_mono[-1]:
            x_hat = self._tail_solve(xi, g)
        else:
            i = int(np.searchsorted(g.hs_mono, xi))
            a = float(g.xs[max(i - 3, 0)])
            b = float(g.xs[min(i + 2, g.xs.size - 1)])
            x_hat = self._bracket_solve(xi, a, b)
        return complex(x_hat, self.y(x_hat))

    def _bracket_solve(self, xi, a, b):
        def f(x):
            return self._h_exact(x) - xi

        fa, fb = f(a), f(b)
        step = max(b - a, 1e-9 * max(1.0, abs(xi)))
        for _ in range(40):
            if fa <= 0.0 <= fb:
                break
            if fa > 0.0:
                a -= step
                fa = f(a)
            if fb < 0.0:
                b += step
                fb = f(b)
            step *= 2.0
        if not (fa <= 0.0 <= fb):
            raise BracketingError(f"no sign change in [{a:.6g}, {b:.6g}] for xi={xi!r}")
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        return float(brentq(f, a, b, xtol=1e-10, rtol=8.9e-16, maxiter=200))

    def _tail_solve(self, xi, g):
        hull_lo, hull_hi = self.mu.hull()
        reach = abs(xi) + self.sqrt_t + (hull_hi - hull_lo) + 10.0

        def f(x):
            return self._h_exact(x) - xi

        if xi >= g.hs_mono[-1]:
            a = float(g.xs[-2])
            b = float(g.xs[-1]) + max(1.0, self.sqrt_t)
            while f(b) < 0.0:
                b = hull_hi + 2.0 * (b - hull_hi)
                if b - hull_hi > reach:
                    raise BracketingError(
                        f"no bracket within [{a:.6g}, {b:.6g}] for xi={xi!r}"
                    )
        else:
            b = float(g.xs[1])
            a = float(g.xs[0]) - max(1.0, self.sqrt_t)
            while f(a) > 0.0:
                a = hull_lo - 2.0 * (hull_lo - a)
                if hull_lo - a > reach:
                    raise BracketingError(
                        f"no bracket within [{a:.6g}, {b:.6g}] for xi={xi!r}"
                    )
        return self._bracket_solve(xi, a, b)

    def psi(self, xi):
        """Density of mu evolved to time t, evaluated at xi."""
        z = self.inverse(xi)
        if z.imag <= 0.0:
            return 0.0
        return max(-stieltjes(self.mu, z).imag / math.pi, 0.0)


@dataclass(frozen=True)
class _Graph:
    xs: np.ndarray
    ys: np.ndarray
    hs: np.ndarray
    hs_mono: np.ndarray


# --------------------------------------------------------------------------
# module-level wrappers; accept a state or a (measure, t) pair


def _dispatch(state_or_mu, a, b):
    if isinstance(state_or_mu, FreeConvolutionState):
        if b is not None:
            raise TypeError("pass (state, x) or (mu, t, x)")
        return state_or_mu, a
    if b is None:
        raise TypeError("pass (state, x) or (mu, t, x)")
    return FreeConvolutionState(state_or_mu, a), b


def y_t(state_or_mu, a, b=None):
    state, x = _dispatch(state_or_mu, a, b)
    return state.y(x)


def H_map(state_or_mu, a, b=None):
    state, z = _dispatch(state_or_mu, a, b)
    return state.H(z)


def forward_map(state_or_mu, a, b=None):
    state, x = _dispatch(state_or_mu, a, b)
    return state.forward(x)


def psi_t(state_or_mu, a, b=None):
    state, xi = _dispatch(state_or_mu, a, b)
    return state.psi(xi)


def inverse_map(state_or_mu, a, b=None):
    state, xi = _dispatch(state_or_mu, a, b)
    return state.inverse(xi)


# --------------------------------------------------------------------------
# observation windows and saddle points

DEFAULT_U_GRID = tuple(float(k) * 0.25 for k in range(-8, 9))


@dataclass(frozen=True)
class Window:
    """Observation frame around x*: bulk (c_t > 0) or spectral gap (epsilon)."""

    x_star: float
    t: float
    x_star_t: float
    c_t: float | None
    epsilon: float | None = None
    u_grid: tuple = field(default=DEFAULT_U_GRID)


def make_window(mu, t, x_star, u_grid=None):
    """Bulk window: requires positive local density of the evolved measure."""
    state = FreeConvolutionState(mu, t)
    x_star = float(x_star)
    y_star = state.y(x_star)
    if y_star <= 0.0:
        raise OutsideDomain(
            "y_t(x*) = 0: no local density at x*; use gap_window for gap frames"
        )
    return Window(
        x_star=x_star,
        t=state.t,
        x_star_t=state.forward(x_star),
        c_t=y_star / (math.pi * state.t),
        epsilon=None,
        u_grid=tuple(u_grid) if u_grid is not None else DEFAULT_U_GRID,
    )


def gap_window(config, t, x_star, epsilon, u_grid=None):
    """Gap window: x* must carry no local density at time t."""
    epsilon = float(epsilon)
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    state = FreeConvolutionState(config, t)
    x_star = float(x_star)
    if state.y(x_star) > 0.0:
        raise OutsideDomain(
            "x* carries local density at time t; use make_window for bulk frames"
        )
    return Window(
        x_star=x_star,
        t=state.t,
        x_star_t=state.forward(x_star),
        c_t=None,
        epsilon=epsilon,
        u_grid=tuple(u_grid) if u_grid is not None else DEFAULT_U_GRID,
    )


def window_to_json(window):
    blob = {
        "x_star": window.x_star,
        "t": window.t,
        "x_star_t": window.x_star_t,
        "c_t": window.c_t,
    }
    if window.epsilon is not None:
        blob["epsilon"] = window.epsilon
    return blob


def window_from_json(blob):
    return Window(
        x_star=float(blob["x_star"]),
        t=float(blob["t"]),
        x_star_t=float(blob["x_star_t"]),
        c_t=None if blob["c_t"] is None else float(blob["c_t"]),
        epsilon=float(blob["epsilon"]) if "epsilon" in blob else None,
    )


@dataclass(frozen=True)
class SaddlePair:
    """Contour saddle points for one (u, v) pair of window coordinates."""

    z: complex
    w: complex
    x0: float
    s: float
    residual: float


def window_scale(window, n):
    """Physical half-width of one unit of u in the window coordinates."""
    if window.c_t is not None:
        return 1.0 / (window.c_t * n)
    return window.epsilon


def saddle_points(config, t, window, u, v, state=None):
    """Solve the saddle equations H(z) = x*_t + u*h, H(w) = x*_t + v*h."""
    pts = _atoms(config)
    if pts is None:
        raise TypeError("saddle_points needs an atomic configuration")
    if state is None:
        state = FreeConvolutionState(EmpiricalMeasure(pts), t)
    h = window_scale(window, pts.size)
    xi_u = window.x_star_t + h * float(u)
    xi_v = window.x_star_t + h * float(v)
    z = state.inverse(xi_u)
    w = z if xi_v == xi_u else state.inverse(xi_v)
    residual = max(
        abs(state.H_raw(z) - xi_u) / max(1.0, abs(xi_u)),
        abs(state.H_raw(w) - xi_v) / max(1.0, abs(xi_v)),
    )
    if residual > 1e-9:
        raise NonConvergence(f"saddle residual {residual:.3e} above 1e-9")
    return SaddlePair(z=z, w=w, x0=z.real, s=z.imag, residual=residual)
