"""Stochastic oracle: sample Y(t) = M + sqrt(t) H for Hermitian Gaussian H.

Entries follow the unitary-ensemble convention: real diagonal of variance
1/n, off-diagonal real and imaginary parts independent with variance 1/(2n).
Randomness is counter-based (Philox keyed by seed, counter split per sample
index), so any sample is reproducible in isolation and results do not
depend on worker count or evaluation order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonConvergence

_HERMITICITY_TOL = 1e-12
_RESIDUAL_TOL = 1e-10


def _extract_points(config) -> np.ndarray:
    pts = np.asarray(getattr(config, "points", config), dtype=float)
    if pts.ndim != 1 or pts.size == 0:
        raise ConfigError("configuration must provide a 1-d point list")
    return pts


class GueSampler:
    """Reproducible Hermitian Gaussian matrices, one stream per sample index."""

    def __init__(self, n: int, seed: int = 0):
        if n < 1:
            raise ConfigError(f"dimension must be positive, got {n}")
        self.n = int(n)
        self.seed = int(seed)

    def _generator(self, counter: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed, counter=counter))

    def matrix(self, sample_index: int, _sub: int = 0) -> np.ndarray:
        # fixed draw order: diagonal, upper-triangle real, upper-triangle imag
        n = self.n
        gen = self._generator((int(sample_index) << 64) | (int(_sub) << 32))
        diag = gen.standard_normal(n)
        k = n * (n - 1) // 2
        re = gen.standard_normal(k)
        im = gen.standard_normal(k)
        h = np.zeros((n, n), dtype=complex)
        iu = np.triu_indices(n, 1)
        h[iu] = (re + 1j * im) / np.sqrt(2.0 * n)
        h += h.conj().T
        h[np.diag_indices(n)] = diag / np.sqrt(n)
        return h


@dataclass(frozen=True)
class EigenSolveReport:
    eigenvalues: np.ndarray
    max_residual: float
    orthogonality_defect: float


def eigenvalues(y: np.ndarray) -> EigenSolveReport:
    """Full spectrum of a Hermitian matrix with certified residuals."""
    y = np.asarray(y)
    scale = float(np.linalg.norm(y))
    herm = float(np.max(np.abs(y - y.conj().T)))
    if herm > _HERMITICITY_TOL * max(1.0, scale):
        raise ConfigError(f"matrix is not Hermitian: asymmetry {herm:.3e}")
    vals, vecs = np.linalg.eigh(y)
    residual = float(np.max(np.linalg.norm(y @ vecs - vecs * vals, axis=0)))
    if residual > _RESIDUAL_TOL * max(1.0, scale):
        raise NonConvergence(
            f"eigensolver residual {residual:.3e} exceeds "
            f"{_RESIDUAL_TOL:g} * ||Y|| = {_RESIDUAL_TOL * scale:.3e}"
        )
    defect = float(np.max(np.abs(vecs.conj().T @ vecs - np.eye(y.shape[0]))))
    return EigenSolveReport(
        eigenvalues=vals, max_residual=residual, orthogonality_defect=defect
    )


def sample_perturbed(config, t: float, sample_index: int, seed: int = 0) -> np.ndarray:
    """Sorted eigenvalues of M + sqrt(t) H for one sample index."""
    pts = _extract_points(config)
    t = float(t)
    if t < 0.0:
        raise ConfigError(f"time must be nonnegative, got {t}")
    if t == 0.0:
        return np.sort(pts)
    h = GueSampler(pts.size, seed).matrix(sample_index)
    y = np.diag(pts).astype(complex) + np.sqrt(t) * h
    return eigenvalues(y).eigenvalues


def sample_spectra(
    config, t: float, n_samples: int, seed: int = 0, threads: int = 1
) -> np.ndarray:
    """Stack of sorted spectra, rows keyed by sample index."""
    pts = _extract_points(config)
    out = np.empty((int(n_samples), pts.size))

    def work(k: int) -> None:
        out[k] = sample_perturbed(config, t, k, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(work, range(int(n_samples))))
    else:
        for k in range(int(n_samples)):
            work(k)
    return out


def dbm_paths(config, time_grid, sample_index: int, seed: int = 0) -> np.ndarray:
    """Eigenvalue trajectories along a time grid, coupled through increments.

    Y(t_{j+1}) = Y(t_j) + sqrt(t_{j+1} - t_j) * H_fresh, so each row has the
    marginal law of M + sqrt(t_j) H while consecutive rows stay coupled.
    """
    pts = _extract_points(config)
    grid = np.asarray(time_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigError("time grid must be a nonempty 1-d array")
    if grid[0] < 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ConfigError("time grid must start at t >= 0 and increase strictly")
    sampler = GueSampler(pts.size, seed)
    y = np.diag(pts).astype(complex)
    rows = np.empty((grid.size, pts.size))
    prev = 0.0
    for j, tj in enumerate(grid):
        dt = tj - prev
        if dt > 0.0:
            y = y + np.sqrt(dt) * sampler.matrix(sample_index, _sub=j + 1)
        rows[j] = eigenvalues(y).eigenvalues
        prev = tj
    return rows


def paths_csv(time_grid, paths: np.ndarray) -> str:
    grid = np.asarray(time_grid, dtype=float)
    n = paths.shape[1]
    lines = ["t," + ",".join(f"lambda_{k + 1}" for k in range(n))]
    for tj, row in zip(grid, paths):
        lines.append(",".join(f"{v:.17g}" for v in (tj, *row)))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DensityHistogram:
    edges: np.ndarray
    counts: np.ndarray
    n_samples: int
    matrix_dim: int

    def density(self) -> np.ndarray:
        """Per-eigenvalue probability density (integrates to at most 1)."""
        total = self.n_samples * self.matrix_dim
        return self.counts / (total * np.diff(self.edges))

    def density_stderr(self) -> np.ndarray:
        total = self.n_samples * self.matrix_dim
        p = self.counts / total
        return np.sqrt(p * (1.0 - p) / total) / np.diff(self.edges)

    def to_json(self) -> dict:
        total = self.n_samples * self.matrix_dim
        p = self.counts / total
        se = np.sqrt(p * (1.0 - p) * total)
        return {
            "bins": [float(e) for e in self.edges],
            "counts": [int(c) for c in self.counts],
            "stderr": [float(s) for s in se],
        }


def empirical_density(samples: np.ndarray, bin_edges) -> DensityHistogram:
    samples = np.asarray(samples, dtype=float)
    edges = np.asarray(bin_edges, dtype=float)
    counts, _ = np.histogram(samples.ravel(), bins=edges)
    return DensityHistogram(
        edges=edges,
        counts=counts,
        n_samples=samples.shape[0],
        matrix_dim=samples.shape[1],
    )


def empirical_gap_frequency(samples: np.ndarray, interval) -> tuple[float, float]:
    """Fraction of samples with no eigenvalue in [a, b], with binomial SE."""
    samples = np.asarray(samples, dtype=float)
    a, b = float(interval[0]), float(interval[1])
    hit = np.any((samples >= a) & (samples <= b), axis=1)
    freq = float(1.0 - hit.mean())
    se = float(np.sqrt(freq * (1.0 - freq) / samples.shape[0]))
    return freq, se
