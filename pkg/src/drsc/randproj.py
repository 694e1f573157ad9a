"""Random projection operators: Gaussian (GRP), fast DFT-based (FRP), identity.

The FRP realization is ``Phi = sqrt(2/p) * Re(F_sel) @ diag(d)`` where ``F_sel``
holds ``p`` distinct rows of the *unnormalized* m-point DFT
(``F[j, k] = exp(-2i*pi*j*k/m)``) and ``d`` is a Rademacher sign vector. With
this scaling ``E ||Phi x||^2 ~= ||x||^2``; the factor 2 compensates for
discarding the imaginary part. Clustering normalizes points, so the global
scale does not affect any clustering result.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError

KINDS = ("gaussian", "fast_dft", "identity")


@dataclass(frozen=True, eq=False)
class ProjectionOperator:
    kind: str
    m: int
    p: int
    seed: int
    matrix: np.ndarray | None = field(default=None, repr=False)
    signs: np.ndarray | None = field(default=None, repr=False)
    rows: np.ndarray | None = field(default=None, repr=False)

    def dense(self) -> np.ndarray:
        """Materialize Phi as a p x m array (dense DFT for fast_dft)."""
        if self.kind == "identity":
            return np.eye(self.m)
        if self.kind == "gaussian":
            return self.matrix.copy()
        # reduce jk mod m before scaling to keep the angle accurate for large m
        jk = np.mod(self.rows[:, None] * np.arange(self.m)[None, :], self.m)
        re = np.cos(2.0 * np.pi * jk / self.m)
        return np.sqrt(2.0 / self.p) * re * self.signs[None, :]


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))


def make_projection(kind: str, m: int, p: int, seed: int) -> ProjectionOperator:
    if kind not in KINDS:
        raise ValidationError(f"unknown projection kind {kind!r}; expected one of {KINDS}")
    m, p = int(m), int(p)
    if m < 1 or p < 1:
        raise DimensionError(f"dimensions must be positive, got m={m}, p={p}")
    if kind in ("fast_dft", "identity") and p > m:
        raise DimensionError(f"{kind} projection requires p <= m, got p={p}, m={m}")
    if kind == "identity":
        if p != m:
            raise DimensionError(f"identity projection requires p == m, got p={p}, m={m}")
        return ProjectionOperator(kind, m, p, seed)
    rng = _rng(seed)
    if kind == "gaussian":
        phi = rng.standard_normal((p, m)) / np.sqrt(p)
        return ProjectionOperator(kind, m, p, seed, matrix=phi)
    signs = rng.choice(np.array([-1.0, 1.0]), size=m)
    # partial Fisher-Yates: first p entries of a uniform shuffle of range(m)
    perm = np.arange(m)
    for i in range(p):
        k = i + int(rng.integers(m - i))
        perm[i], perm[k] = perm[k], perm[i]
    rows = np.sort(perm[:p])
    return ProjectionOperator(kind, m, p, seed, signs=signs, rows=rows)


def apply(op: ProjectionOperator, Y: np.ndarray) -> np.ndarray:
    """Project the columns of ``Y`` (m x N) to ``p`` dimensions."""
    Y = np.asarray(Y, dtype=np.float64)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    if Y.shape[0] != op.m:
        raise DimensionError(f"expected {op.m} rows, got {Y.shape[0]}")
    if op.kind == "identity":
        X = Y.copy()
    elif op.kind == "gaussian":
        X = op.matrix @ Y
    else:
        F = np.fft.fft(op.signs[:, None] * Y, axis=0)
        X = np.sqrt(2.0 / op.p) * F[op.rows, :].real
    return X[:, 0] if squeeze else X


def concentration_probe(kind: str, m: int, p: int, x: np.ndarray, t: float,
                        trials: int, seed: int) -> float:
    """Fraction of independent operator draws with | ||Phi x||^2 - 1 | >= t."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != m:
        raise DimensionError(f"x has length {x.shape[0]}, expected {m}")
    if abs(np.linalg.norm(x) - 1.0) > 1e-8:
        raise ValidationError("x must have unit l2 norm")
    if t <= 0:
        raise ValidationError("t must be positive")
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    seeds = np.random.SeedSequence(seed).generate_state(trials, dtype=np.uint64)
    hits = 0
    for s in seeds:
        op = make_projection(kind, m, p, int(s))
        dev = abs(float(np.sum(apply(op, x) ** 2)) - 1.0)
        hits += dev >= t
    return hits / trials
