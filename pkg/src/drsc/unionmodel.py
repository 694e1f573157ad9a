"""Union-of-subspaces data model: arrangements, sampled points, noise, affinities."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DimensionError, ValidationError

MODES = ("independent", "shared_intersection", "gaussian_partition", "orthogonal")


@dataclass(eq=False)
class SubspaceArrangement:
    m: int
    bases: list[np.ndarray]

    @property
    def L(self) -> int:
        return len(self.bases)

    @property
    def dims(self) -> list[int]:
        return [U.shape[1] for U in self.bases]

    def max_affinity(self) -> float:
        """Largest pairwise affinity (0 when there is a single subspace)."""
        best = 0.0
        for k in range(self.L):
            for l in range(k + 1, self.L):
                best = max(best, affinity(self.bases[k], self.bases[l]))
        return best


@dataclass(eq=False)
class Dataset:
    """Points are the columns of ``points``; ``labels`` are 0-based cluster ids."""

    points: np.ndarray
    labels: np.ndarray | None = None
    noise_sigma: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def N(self) -> int:
        return self.points.shape[1]

    @property
    def counts(self) -> list[int]:
        if self.labels is None:
            return []
        return np.bincount(self.labels).tolist()


def _rng(seed):
    return np.random.default_rng(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def haar_orthonormal(m: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed m x d matrix with orthonormal columns."""
    Q, R = np.linalg.qr(rng.standard_normal((m, d)))
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def _orthonormalize(B: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(B)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def make_arrangement(m: int, dims, mode: str = "independent", seed: int = 0,
                     r: int | None = None) -> SubspaceArrangement:
    """Draw ``len(dims)`` subspaces of R^m.

    ``shared_intersection`` gives every subspace the same random ``r``-dimensional
    block followed by an independent random complement, re-orthonormalized so the
    stored basis is exactly orthonormal. ``gaussian_partition`` slices one m x m
    Gaussian matrix into column blocks (requires ``sum(dims) == m``).
    ``orthogonal`` slices a Haar m x m orthogonal matrix, giving mutually
    orthogonal subspaces (requires ``sum(dims) <= m``).
    """
    dims = [int(d) for d in dims]
    if mode not in MODES:
        raise ConfigurationError(f"unknown arrangement mode {mode!r}")
    if not dims or any(d < 1 or d > m for d in dims):
        raise ConfigurationError(f"need 1 <= d <= m for every subspace, got dims={dims}, m={m}")
    rng = _rng(seed)
    if mode == "independent":
        bases = [haar_orthonormal(m, d, rng) for d in dims]
    elif mode == "shared_intersection":
        if r is None:
            raise ConfigurationError("shared_intersection needs r")
        if len(set(dims)) != 1:
            raise ConfigurationError("shared_intersection needs equal dimensions")
        d = dims[0]
        if not 0 <= r < d:
            raise ConfigurationError(f"need 0 <= r < d, got r={r}, d={d}")
        common = haar_orthonormal(m, r, rng)
        bases = []
        for _ in dims:
            own = haar_orthonormal(m, d - r, rng)
            bases.append(_orthonormalize(np.hstack([common, own])))
    elif mode == "gaussian_partition":
        if sum(dims) != m:
            raise ConfigurationError(f"gaussian_partition needs sum(dims) == m ({sum(dims)} != {m})")
        V = rng.standard_normal((m, m))
        edges = np.cumsum([0] + dims)
        bases = [_orthonormalize(V[:, a:b]) for a, b in zip(edges[:-1], edges[1:])]
    else:
        if sum(dims) > m:
            raise ConfigurationError(f"orthogonal needs sum(dims) <= m ({sum(dims)} > {m})")
        Q = haar_orthonormal(m, sum(dims), rng)
        edges = np.cumsum([0] + dims)
        bases = [Q[:, a:b].copy() for a, b in zip(edges[:-1], edges[1:])]
    return SubspaceArrangement(m=m, bases=bases)


def sample_points(arr: SubspaceArrangement, counts, seed: int = 0) -> Dataset:
    """Draw ``counts[l]`` points uniformly from the unit sphere of each subspace."""
    counts = [int(n) for n in counts]
    if len(counts) != arr.L:
        raise DimensionError(f"need {arr.L} counts, got {len(counts)}")
    if any(n < 1 for n in counts):
        raise ConfigurationError("every count must be >= 1")
    rng = _rng(seed)
    blocks, labels = [], []
    for l, (U, n) in enumerate(zip(arr.bases, counts)):
        a = rng.standard_normal((U.shape[1], n))
        a /= np.linalg.norm(a, axis=0)
        blocks.append(U @ a)
        labels.append(np.full(n, l, dtype=np.int64))
    return Dataset(points=np.hstack(blocks), labels=np.concatenate(labels),
                   meta={"dims": arr.dims, "counts": counts})


def add_noise(ds: Dataset, sigma: float, seed: int = 0) -> Dataset:
    """Add i.i.d. N(0, sigma^2/m) entries to every point."""
    if sigma < 0:
        raise ConfigurationError("sigma must be >= 0")
    if sigma == 0:
        return replace(ds, points=ds.points.copy(), noise_sigma=0.0)
    rng = _rng(seed)
    noise = rng.standard_normal(ds.points.shape) * (sigma / np.sqrt(ds.m))
    return replace(ds, points=ds.points + noise, noise_sigma=float(sigma))


def _check_orthonormal(U, tol=1e-8):
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2:
        raise ValidationError("basis must be a 2-D array")
    err = np.max(np.abs(U.T @ U - np.eye(U.shape[1])))
    if err > tol:
        raise ValidationError(f"basis is not orthonormal (max deviation {err:.2e})")
    return U


def affinity(Uk, Ul) -> float:
    """||Uk^T Ul||_F / sqrt(min(dk, dl)), in [0, 1]."""
    Uk, Ul = _check_orthonormal(Uk), _check_orthonormal(Ul)
    if Uk.shape[0] != Ul.shape[0]:
        raise DimensionError("bases live in different ambient dimensions")
    val = np.linalg.norm(Uk.T @ Ul) / np.sqrt(min(Uk.shape[1], Ul.shape[1]))
    return float(min(max(val, 0.0), 1.0))


def principal_angles(Uk, Ul) -> np.ndarray:
    """Principal angles in ascending order, length min(dk, dl)."""
    Uk, Ul = _check_orthonormal(Uk), _check_orthonormal(Ul)
    if Uk.shape[0] != Ul.shape[0]:
        raise DimensionError("bases live in different ambient dimensions")
    if Uk.shape[1] < Ul.shape[1]:
        Uk, Ul = Ul, Uk
    M = Uk.T @ Ul
    cos = np.clip(np.linalg.svd(M, compute_uv=False), 0.0, 1.0)  # descending
    # acos loses accuracy near 0; recover small angles from the sines
    sin = np.clip(np.linalg.svd(Ul - Uk @ M, compute_uv=False)[::-1], 0.0, 1.0)
    theta = np.where(cos * cos < 0.5, np.arccos(cos), np.arcsin(sin))
    return np.sort(theta)
