"""Exact correlation kernels for deterministic spectra under Gaussian flow.

Two independent evaluation routes are kept deliberately separate so that one
can certify the other.  The first writes the kernel as a finite biorthogonal
sum: Gaussian quadrature applied to the vertical-line integral of each
Lagrange basis ratio, times a Gaussian factor per source point.  It is exact
for any node count above half the point count, but it sums terms of
alternating sign whose cancellation grows with ``n * spread^2 / t``, so it is
the reference route at moderate size and a cross-check elsewhere.  The second
route discretizes the double contour representation directly: a vertical line
through the real part of the z-saddle, and a loop following the graph of the
local spectral half-width around the source points.  All exponentials are
referenced to their saddle values, which keeps every factor at or below one
in modulus along the descent paths; this route scales to large ``n`` and is
what the rescaled observation frames use.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import roots_hermite as sp_roots_hermite

from .errors import ConfigError, NonConvergence
from .freeconv import FreeConvolutionState, Window, window_scale
from .measures import EmpiricalMeasure, InitialConfiguration
from .panels import panel_nodes

_HERMGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}

# e^-60: below any tolerance this module promises, with margin for sums
_DROP_CUTOFF = 60.0


def _hermgauss(m: int):
    got = _HERMGAUSS_CACHE.get(m)
    if got is None:
        # numpy's hermgauss overflows above a few hundred nodes
        got = sp_roots_hermite(m)
        _HERMGAUSS_CACHE[m] = got
    return got


def sine_kernel(u, v):
    """sin(pi(u-v))/(pi(u-v)) with the diagonal understood as 1."""
    d = np.subtract(u, v)
    out = np.sinc(d)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _extract_points(config) -> np.ndarray:
    if isinstance(config, InitialConfiguration):
        return np.asarray(config.points, dtype=float)
    if isinstance(config, EmpiricalMeasure):
        return np.asarray(config.points, dtype=float)
    pts = np.asarray(config, dtype=float)
    if pts.ndim != 1 or pts.size == 0:
        raise ConfigError("configuration must be a non-empty 1-d point set")
    return pts


def _split_duplicates(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Separate exactly coincident points symmetrically by a relative eps."""
    pts = np.sort(points)
    if pts.size > 1 and np.all(np.diff(pts) > 0.0):
        return pts, 0.0
    if pts.size == 1:
        return pts, 0.0
    spread = float(pts[-1] - pts[0])
    eps = 1e-9 * (spread if spread > 0.0 else max(1.0, abs(float(pts[0]))))
    out = pts.copy()
    i = 0
    while i < pts.size:
        j = i
        while j + 1 < pts.size and pts[j + 1] == pts[i]:
            j += 1
        k = j - i + 1
        if k > 1:
            out[i : j + 1] += (np.arange(k) - (k - 1) / 2.0) * eps
        i = j + 1
    if np.any(np.diff(out) <= 0.0):
        raise ConfigError(
            "duplicate points too tightly clustered to split; "
            "separate them by more than the splitting eps"
        )
    return out, eps


class KernelEvaluator:
    """Lagrange-sum kernel evaluator bound to one configuration and time.

    ``x0`` is the gauge base point: determinants and the diagonal are
    invariant under it, individual off-diagonal entries of the gauge-fixed
    kernel are not.
    """

    def __init__(self, config, t, x0=0.0, m_nodes=64, m_max=4096):
        t = float(t)
        if not t > 0.0:
            raise ConfigError("t must be positive")
        raw = _extract_points(config)
        self.points, self.eps_split_applied = _split_duplicates(raw)
        self.n = int(self.points.size)
        self.t = t
        self.x0 = float(x0)
        self.m0 = int(max(int(m_nodes), self.n // 2 + 1))
        self.m_max = int(m_max)
        self.quadrature_m = self.m0
        diffs = self.points[:, None] - self.points[None, :]
        np.fill_diagonal(diffs, 1.0)
        # log |prod_{j!=k}(a_k - a_j)| and its sign, split for stability
        self._d = np.sum(np.log(np.abs(diffs)), axis=1)
        self._sign = np.where((self.n - 1 - np.arange(self.n)) % 2 == 0, 1.0, -1.0)

    # -- z-line quadrature core -------------------------------------------

    def _z_core(self, x, m, shift):
        n, t = self.n, self.t
        a = self.points
        s, w = _hermgauss(m)
        c = math.sqrt(2.0 * t / n)
        z = (x + shift) + 1j * (c * s)
        with np.errstate(divide="ignore"):
            lz = np.log(z[:, None] - a[None, :])
            logw = np.log(w)
        stot = lz.sum(axis=1)
        extra = (n / (2.0 * t)) * shift * shift + 1j * (
            shift * math.sqrt(2.0 * n / t)
        ) * s
        am = (stot + logw + extra)[:, None] - lz - self._d[None, :]
        p1 = float(np.max(am.real))
        e = np.exp(am - p1)
        b = e.sum(axis=0)
        bmag = np.abs(e).sum(axis=0)
        scale = max(1.0, float(np.max(np.abs(am.real))))
        return p1, b, bmag, scale

    def _rows(self, x, ys, m, shift):
        n, t = self.n, self.t
        p1, b, bmag, scale = self._z_core(x, m, shift)
        pref = math.sqrt(2.0 * n / t) / (2.0 * math.pi)
        q = -(n / (2.0 * t)) * (self.points[:, None] - ys[None, :]) ** 2
        absb = np.abs(b)
        with np.errstate(divide="ignore"):
            lb = np.where(absb > 0.0, np.log(np.maximum(absb, 1e-300)), -np.inf)
            lmag = np.where(bmag > 0.0, np.log(np.maximum(bmag, 1e-300)), -np.inf)
        phase = np.where(absb > 0.0, b / np.maximum(absb, 1e-300), 0.0)
        m2 = q + (p1 + lb)[:, None]
        p2 = np.max(m2, axis=0)
        dead = ~np.isfinite(p2)
        p2 = np.where(dead, 0.0, p2)
        terms = (self._sign * phase)[:, None] * np.exp(m2 - p2[None, :])
        vals = pref * np.exp(p2) * terms.sum(axis=0)
        nm = q + (p1 + lmag)[:, None]
        noise = (
            pref
            * np.exp(p2)
            * np.exp(nm - p2[None, :]).sum(axis=0)
            * (5e-16 * scale)
        )
        vals = np.where(dead, 0.0, vals)
        noise = np.where(dead, 0.0, noise)
        return vals, noise

    def _converged_rows(self, x, ys, shift=0.0):
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        m = self.m0
        if 2 * m > self.m_max:
            raise NonConvergence(
                f"node cap m_max={self.m_max} forbids doubling from m0={m}; "
                "the quadrature cannot be verified"
            )
        vals, noise = self._rows(x, ys, m, shift)
        while True:
            m2 = 2 * m
            vals2, noise2 = self._rows(x, ys, m2, shift)
            tol = np.maximum(1e-8 * np.abs(vals2), 4.0 * np.maximum(noise, noise2))
            if np.all(np.abs(vals2 - vals) <= tol + 1e-300):
                self.quadrature_m = max(self.quadrature_m, m2)
                return self._realize(vals2, noise2)
            if 2 * m2 > self.m_max:
                raise NonConvergence(
                    f"kernel quadrature not converged at cap {self.m_max}: "
                    f"M={m} gave {vals}, M={m2} gave {vals2}"
                )
            vals, noise, m = vals2, noise2, m2

    def _realize(self, vals, noise):
        tol = np.maximum(1e-12 * np.abs(vals.real), 8.0 * noise) + 1e-300
        if np.any(np.abs(vals.imag) > tol):
            raise NonConvergence(
                f"imaginary residue {np.max(np.abs(vals.imag)):.3e} exceeds "
                "the realness tolerance"
            )
        return vals.real.copy()

    # -- biorthogonal family ----------------------------------------------

    def _p_hat_all(self, x, shift=0.0):
        m = self.m0
        if 2 * m > self.m_max:
            raise NonConvergence("node cap forbids doubling")
        pref = math.sqrt(2.0 * self.n / self.t) / (2.0 * math.pi)

        def one(mm):
            p1, b, bmag, scale = self._z_core(x, mm, shift)
            vals = pref * np.exp(p1) * self._sign * b
            noise = pref * np.exp(p1) * bmag * (5e-16 * scale)
            return vals, noise

        vals, noise = one(m)
        while True:
            m2 = 2 * m
            vals2, noise2 = one(m2)
            tol = np.maximum(1e-10 * np.abs(vals2), 4.0 * np.maximum(noise, noise2))
            if np.all(np.abs(vals2 - vals) <= tol + 1e-300):
                return self._realize(vals2, noise2)
            if 2 * m2 > self.m_max:
                raise NonConvergence("p-hat quadrature not converged at cap")
            vals, noise, m = vals2, noise2, m2


def kernel_lagrange(ev: KernelEvaluator, x, y, contour_shift=0.0) -> float:
    """Ungauged kernel value via the Lagrange quadrature route."""
    return float(ev._converged_rows(float(x), [float(y)], float(contour_shift))[0])


def kernel_matrix(ev: KernelEvaluator, xs, ys, contour_shift=0.0) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    out = np.empty((xs.size, ys.size))
    for i, x in enumerate(xs):
        out[i] = ev._converged_rows(float(x), ys, float(contour_shift))
    return out


def gauge_log(ev: KernelEvaluator, x, y) -> float:
    n, t = ev.n, ev.t
    return (n / (2.0 * t)) * ((y * y - x * x) - 2.0 * ev.x0 * (y - x))


def gauge_to_paper(ev: KernelEvaluator, x, y, value) -> float:
    """Apply the conjugation factor that symmetrizes the kernel at x0."""
    if value == 0.0:
        return 0.0
    g = gauge_log(ev, float(x), float(y))
    return float(math.copysign(math.exp(math.log(abs(value)) + g), value))


def kernel_paper(ev: KernelEvaluator, x, y) -> float:
    """Gauge-fixed kernel entry; diagonal coincides with the ungauged one."""
    return gauge_to_paper(ev, x, y, kernel_lagrange(ev, x, y))


def lagrange_p_hat(ev: KernelEvaluator, k, x) -> float:
    """k-th member of the polynomial half of the biorthogonal pair."""
    return float(ev._p_hat_all(float(x))[int(k)])


def biorthogonality_check(ev: KernelEvaluator) -> float:
    """Max deviation of the pairing matrix from the identity."""
    n, t = ev.n, ev.t
    s, w = _hermgauss(128)
    c = math.sqrt(2.0 * t / n)
    defect = 0.0
    for k in range(n):
        nodes = ev.points[k] + c * s
        pmat = np.stack([ev._p_hat_all(float(x)) for x in nodes])
        col = c * (w[:, None] * pmat).sum(axis=0)
        col[k] -= 1.0
        defect = max(defect, float(np.max(np.abs(col))))
    return defect


def _diag_interval(ev: KernelEvaluator) -> tuple[float, float]:
    half = 10.0 * math.sqrt(ev.t)
    return float(ev.points[0] - half), float(ev.points[-1] + half)


def kernel_trace(ev: KernelEvaluator, tol=1e-7) -> float:
    """Integral of the kernel diagonal; equals the point count."""
    lo, hi = _diag_interval(ev)
    panels = 32
    prev = None
    while panels <= 1024:
        edges = np.linspace(lo, hi, panels + 1)
        nodes, wts = panel_nodes(edges, 16)
        diag = np.array(
            [ev._converged_rows(float(x), [float(x)])[0] for x in nodes]
        )
        val = float(wts @ diag)
        if prev is not None and abs(val - prev) <= max(tol, 1e-12 * ev.n):
            return val
        prev = val
        panels *= 2
    raise NonConvergence("trace quadrature did not settle")


def projection_defect(ev: KernelEvaluator, x, y) -> float:
    """|integral K(x,z)K(z,y) dz - K(x,y)|: the reproducing property."""
    lo, hi = _diag_interval(ev)
    x, y = float(x), float(y)
    target = kernel_lagrange(ev, x, y)
    edges = np.linspace(lo, hi, 65)
    nodes, wts = panel_nodes(edges, 16)
    row = ev._converged_rows(x, nodes)
    col = np.array([ev._converged_rows(float(z), [y])[0] for z in nodes])
    return float(abs(np.sum(wts * row * col) - target))


def correlation_function(ev: KernelEvaluator, pts) -> float:
    """k-point correlation determinant of the gauge-fixed kernel."""
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    mat = kernel_matrix(ev, pts, pts)
    glog = (ev.n / (2.0 * ev.t)) * (
        (pts[None, :] ** 2 - pts[:, None] ** 2)
        - 2.0 * ev.x0 * (pts[None, :] - pts[:, None])
    )
    return float(np.linalg.det(mat * np.exp(glog)))


# -- rescaled double-contour frames ---------------------------------------


class RescaledKernelFrame:
    """Kernel in window coordinates via saddle-referenced contour quadrature.

    For bulk windows one unit of (u, v) is 1/(c_t n); for gap windows it is
    the window epsilon.  Values include the oscillatory part, whose frequency
    is read off the height at which the vertical line crosses the loop; in a
    gap frame the saddles are real, the crossing height is zero and the
    oscillatory part vanishes identically.
    """

    def __init__(self, config, t, window: Window, dc_tol=1e-7, max_levels=8):
        self.evaluator = KernelEvaluator(config, t)
        self.window = window
        self.t = float(t)
        self.n = self.evaluator.n
        self.points = self.evaluator.points
        self.state = FreeConvolutionState(EmpiricalMeasure(self.points), self.t)
        self.h = window_scale(window, self.n)
        self.dc_tol = float(dc_tol)
        self.max_levels = int(max_levels)
        self._zsad: dict[float, complex] = {}
        self._vref: dict[float, float] = {}
        self._pairs: dict[tuple[float, float], float] = {}
        self._lump_cache = None
        self.evaluator.x0 = float(self._saddle(0.0).real)

    # -- geometry ----------------------------------------------------------

    def _saddle(self, a: float) -> complex:
        z = self._zsad.get(a)
        if z is None:
            xi = self.window.x_star_t + self.h * a
            z = complex(self.state.inverse(xi))
            resid = abs(self.state.H_raw(z) - xi) / max(1.0, abs(xi))
            if resid > 1e-9:
                raise NonConvergence(f"saddle residual {resid:.3e} above 1e-9")
            self._zsad[a] = z
        return z

    def _phi_parts(self, q: np.ndarray):
        """B(q) and L(q) with phi_hat(q, a) = B(q) - h*a*L(q)."""
        n, t = self.n, self.t
        xst = self.window.x_star_t
        b = (n / (2.0 * t)) * (q - xst) ** 2
        block = max(1, int(2_000_000 / max(1, self.n)))
        for i in range(0, q.size, block):
            sl = slice(i, i + block)
            b[sl] += np.sum(np.log(q[sl, None] - self.points[None, :]), axis=1)
        return b, (n / t) * (q - xst)

    def _phi_hat_scalar(self, q: complex, a: float) -> complex:
        arr = np.array([q], dtype=complex)
        b, l = self._phi_parts(arr)
        return complex(b[0] - self.h * a * l[0])

    def _v_ref(self, v: float) -> float:
        ref = self._vref.get(v)
        if ref is None:
            ws = self._saddle(v)
            ref = self._phi_hat_scalar(ws, v).real
            self._vref[v] = ref
        return ref

    def _beta(self, u: float, x0: float, s: float) -> float:
        d2 = (x0 - self.points) ** 2
        if s > 0.0:
            val = 2.0 * self.n * s * s * float(np.mean(1.0 / (d2 + s * s) ** 2))
        else:
            lor = float(np.mean(1.0 / np.maximum(d2, 1e-300)))
            val = (self.n / self.t) * max(1.0 - self.t * lor, 1e-12)
        return max(val, 1e-300)

    def _lumps(self):
        if self._lump_cache is None:
            g = self.state._ensure_graph()
            pos = g.ys > 0.0
            lumps = []
            i = 0
            while i < pos.size:
                if pos[i]:
                    j = i
                    while j + 1 < pos.size and pos[j + 1]:
                        j += 1
                    lo = g.xs[max(i - 1, 0)]
                    hi = g.xs[min(j + 1, pos.size - 1)]
                    lumps.append((float(lo), float(hi)))
                    i = j + 1
                else:
                    i += 1
            self._lump_cache = lumps
        return self._lump_cache

    # -- contour quadrature --------------------------------------------------

    def _z_line(self, u: float, x0: float, s: float, width: float, level: int):
        """Positive-sigma half of the vertical line: midpoints and cell widths.

        The fine band uses a spacing that divides the crossing height exactly,
        so nodes sit symmetrically around the pole on both sides; the residual
        of the 1/(z-w) singularity then cancels pairwise.
        """
        dens = 3 * (1 << level)
        target = width / dens
        if s > 0.0:
            m = max(dens, int(math.ceil(s / target)))
            dz = s / m
            edges = [np.arange(0, 2 * m + 1) * dz]
            pos = 2.0 * s
        else:
            edges = [np.array([0.0])]
            pos = 0.0
        nb = int(math.ceil(8.0 * width / target))
        band = pos + np.arange(1, nb + 1) * target
        edges.append(band)
        pos = float(band[-1])
        tail = []
        step = target
        for _ in range(200):
            step *= 1.35
            pos += step
            tail.append(pos)
        edges.append(np.asarray(tail))
        e = np.concatenate(edges)
        mids = (e[:-1] + e[1:]) / 2.0
        return mids, np.diff(e)

    @staticmethod
    def _bridge(inner: float, end: float, step: float):
        """Vertex/midpoint parameter grid stretched like sqrt toward ``end``.

        The loop leaves the real axis with a square-root profile, so a grid
        quadratic in the parameter keeps the complex steps comparable in
        length along the arc.
        """
        span = abs(end - inner)
        if span <= 1e-13 * max(1.0, abs(end)):
            return None
        m = max(8, int(math.ceil(2.0 * span / step)))
        tau_v = np.arange(m + 1) / m
        tau_m = (np.arange(m) + 0.5) / m
        sgn = 1.0 if end > inner else -1.0
        xv = end - sgn * span * (1.0 - tau_v) ** 2
        xm = end - sgn * span * (1.0 - tau_m) ** 2
        if sgn < 0:
            xv, xm = xv[::-1], xm[::-1]
        return xv, xm

    def _lump_grid(self, lo, hi, x0, s, width, level, is_home):
        """One lump's vertex chain and parameter-midpoint nodes, ascending."""
        step = width / (3 * (1 << level))
        if not is_home:
            cells = max(16, 32 * (1 << level))
            tau_v = np.linspace(0.0, 1.0, cells + 1)
            tau_m = (tau_v[:-1] + tau_v[1:]) / 2.0
            half = 0.5 * (hi - lo)
            return (
                lo + half * (1.0 - np.cos(np.pi * tau_v)),
                lo + half * (1.0 - np.cos(np.pi * tau_m)),
            )
        # symmetric uniform cells around the crossing keep the pole residual
        # antisymmetric; the outer 3/8 of each side goes to the bridges
        win = 2.0 * (s + 8.0 * width)
        kl = max(0, int(math.floor(min(win, 0.625 * (x0 - lo)) / step)))
        kr = max(0, int(math.floor(min(win, 0.625 * (hi - x0)) / step)))
        verts = [x0 + np.arange(-kl, kr + 1) * step]
        mids = [x0 + (np.arange(-kl, kr) + 0.5) * step]
        left = self._bridge(x0 - kl * step, lo, step)
        if left is not None:
            verts.insert(0, left[0][:-1])
            mids.insert(0, left[1])
        right = self._bridge(x0 + kr * step, hi, step)
        if right is not None:
            verts.append(right[0][1:])
            mids.append(right[1])
        return np.concatenate(verts), np.concatenate(mids)

    def _w_contour(self, x0: float, s: float, width: float, level: int):
        """Upper half of the loop as parameter-midpoint nodes and steps."""
        nodes, steps = [], []
        for lo, hi in self._lumps():
            if hi <= lo:
                continue
            is_home = lo <= x0 <= hi
            vx, mx = self._lump_grid(lo, hi, x0, s, width, level, is_home)
            if vx.size < 2:
                continue
            ally = self.state._y_profile(np.concatenate([vx, mx]))
            v = vx + 1j * ally[: vx.size]
            nodes.append(mx + 1j * ally[vx.size :])
            steps.append(np.diff(v))
        if not nodes:
            return np.empty(0, dtype=complex), np.empty(0, dtype=complex)
        return np.concatenate(nodes), np.concatenate(steps)

    def _column(self, u: float, vs: np.ndarray, level: int):
        n, t, h = self.n, self.t, self.h
        zs = self._saddle(u)
        x0, s = float(zs.real), float(zs.imag)
        beta = self._beta(u, x0, s)
        width = 1.0 / math.sqrt(beta)

        ref_z = self._phi_hat_scalar(zs, u).real
        sig, wsig = self._z_line(u, x0, s, width, level)
        zq = x0 + 1j * sig
        bz, lz = self._phi_parts(zq)
        phi_z = bz - h * u * lz
        keep = (phi_z.real - ref_z) > -_DROP_CUTOFF
        zq, wsig, phi_z = zq[keep], wsig[keep], phi_z[keep]
        ez = np.exp(phi_z - ref_z)
        # lower half by reflection: phi has real coefficients
        z_all = np.concatenate([zq, np.conj(zq)])
        ez_all = np.concatenate([ez, np.conj(ez)])
        w_all = np.concatenate([wsig, wsig])

        wn, wst = self._w_contour(x0, s, width, level)
        ref_w = np.array([self._v_ref(v) for v in vs])
        theta = h * n * s / t
        du = u - vs
        a_row = (theta / math.pi) * np.sinc(du * theta / math.pi)

        if wn.size == 0:
            return a_row, 0.0

        bw, lw = self._phi_parts(wn)
        phi_w = bw[:, None] - (h * lw)[:, None] * vs[None, :]
        drop = ref_w[None, :] - phi_w.real
        keep_w = np.any(drop > -_DROP_CUTOFF, axis=1)
        if not np.any(keep_w):
            return a_row, 0.0
        wn, wst, phi_w = wn[keep_w], wst[keep_w], phi_w[keep_w]
        with np.errstate(under="ignore"):
            ew = np.exp(ref_w[None, :] - phi_w)
        q = wst[:, None] * ew

        tmat = np.zeros((z_all.size, vs.size), dtype=complex)
        block = max(1, int(1_500_000 / max(1, z_all.size)))
        for i in range(0, wn.size, block):
            sl = slice(i, i + block)
            d1 = 1.0 / (z_all[:, None] - wn[None, sl])
            d2 = 1.0 / (z_all[:, None] - np.conj(wn[None, sl]))
            tmat += d2 @ np.conj(q[sl]) - d1 @ q[sl]

        ssum = 1j * ((w_all * ez_all) @ tmat)
        gauge = (n * h / t) * du * (x0 - self.window.x_star_t)
        pref = -h * n / (4.0 * math.pi**2 * t)
        i_row = pref * np.exp(gauge + ref_z - ref_w) * ssum
        if not np.all(np.isfinite(i_row)):
            raise NonConvergence("contour exponent overflow in frame column")
        resid = float(np.max(np.abs(i_row.imag)))
        return a_row + i_row.real, resid

    def _row(self, u: float, vs: tuple) -> np.ndarray:
        varr = np.asarray(vs, dtype=float)
        prev, _ = self._column(u, varr, 0)
        err = math.inf
        for level in range(1, self.max_levels + 1):
            cur, resid = self._column(u, varr, level)
            err = float(np.max(np.abs(cur - prev)))
            scale = float(np.max(np.abs(cur)))
            ok = err <= max(self.dc_tol, 1e-6 * scale)
            ok_im = resid <= max(1e-9, 1e-6 * scale)
            if ok and ok_im:
                # halving the cell size quarters the error, so one Richardson
                # step removes the leading term
                out = cur + (cur - prev) / 3.0
                for v, val in zip(vs, out):
                    self._pairs[(u, v)] = float(val)
                return out
            prev = cur
        raise NonConvergence(
            f"contour refinement stalled at level {self.max_levels}: "
            f"residual {err:.3e}"
        )

    def value(self, u, v) -> float:
        u, v = float(u), float(v)
        got = self._pairs.get((u, v))
        if got is None:
            got = float(self._row(u, (v,))[0])
        return got

    def values(self, us, vs) -> np.ndarray:
        us = [float(u) for u in np.atleast_1d(us)]
        vs = tuple(float(v) for v in np.atleast_1d(vs))
        out = np.empty((len(us), len(vs)))
        for i, u in enumerate(us):
            out[i] = self._row(u, vs)
        return out

    def sine_amplitude(self, u) -> float:
        """Peak of the oscillatory part at u; exactly 0 when the saddle is real."""
        s = float(self._saddle(float(u)).imag)
        return self.h * self.n * s / (math.pi * self.t)


def rescaled_kernel(frame: RescaledKernelFrame, u, v) -> float:
    """Kernel in window coordinates, scaled by the window unit."""
    return frame.value(u, v)


def sup_sine_deviation(frame: RescaledKernelFrame, us=None, vs=None) -> float:
    """Max deviation from the sine kernel over the window grid."""
    grid_u = np.asarray(us if us is not None else frame.window.u_grid, float)
    grid_v = np.asarray(vs if vs is not None else frame.window.u_grid, float)
    got = frame.values(grid_u, grid_v)
    ref = np.sinc(grid_u[:, None] - grid_v[None, :])
    return float(np.max(np.abs(got - ref)))


def frame_to_json(frame: RescaledKernelFrame) -> dict:
    w = frame.window
    return {
        "n": frame.n,
        "t": frame.t,
        "x_star": w.x_star,
        "x_star_t": w.x_star_t,
        "c_t": w.c_t,
        "x0": frame.evaluator.x0,
        "quadrature_M": int(frame.evaluator.quadrature_m),
        "eps_split_applied": float(frame.evaluator.eps_split_applied),
    }
