"""Normalized spectral clustering, eigengap estimation and graph components."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph
from scipy.sparse import csr_matrix

from .errors import ConfigurationError, NumericalError, ValidationError


@dataclass(eq=False)
class SpectralResult:
    labels: np.ndarray
    eigenvalues: np.ndarray
    kmeans_cost: float
    estimated_L: int | None = None


def _weights(A):
    W = getattr(A, "weights", A)
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValidationError("adjacency must be a square matrix")
    if np.max(np.abs(W - W.T), initial=0.0) > 1e-10:
        raise ValidationError("adjacency is not symmetric")
    if np.any(W < 0):
        raise ValidationError("adjacency has negative weights")
    return W


def normalized_laplacian(A) -> np.ndarray:
    """I - D^{-1/2} A D^{-1/2}.

    Rows and columns of zero-degree nodes are all zero, so each isolated node
    contributes one zero eigenvalue, like every other connected component.
    """
    W = _weights(A)
    deg = W.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    Lsym = -(inv_sqrt[:, None] * W * inv_sqrt[None, :])
    Lsym[np.diag_indices_from(Lsym)] += pos.astype(np.float64)
    return 0.5 * (Lsym + Lsym.T)


def laplacian_spectrum(A) -> np.ndarray:
    return np.linalg.eigvalsh(normalized_laplacian(A))


def estimate_num_clusters(A, L_max: int) -> int:
    """Eigengap heuristic: argmax over i <= L_max of lambda_{i+1} - lambda_i."""
    if L_max < 1:
        raise ConfigurationError("L_max must be >= 1")
    lam = laplacian_spectrum(A)
    N = lam.size
    if N == 1:
        return 1
    top = min(L_max, N - 1)
    gaps = lam[1:top + 1] - lam[:top]
    return int(np.argmax(gaps)) + 1


def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _sq_dists(X, centers):
    return (np.sum(X * X, axis=1)[:, None] - 2.0 * X @ centers.T
            + np.sum(centers * centers, axis=1)[None, :]).clip(min=0.0)


def kmeans(points, k: int, restarts: int = 10, iters: int = 100, seed: int = 0):
    """Best-of-``restarts`` Lloyd iterations with k-means++ seeding.

    Returns ``(labels, cost)`` where cost is the sum of squared distances to
    the assigned centers. Empty clusters are reseeded from the point farthest
    from its current center.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if k > n:
        raise ConfigurationError(f"k={k} exceeds the number of points {n}")
    rng = np.random.default_rng(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    best_labels, best_cost = None, np.inf
    for _ in range(max(1, restarts)):
        centers = _kmeans_pp(X, k, rng)
        labels = None
        for _ in range(iters):
            D = _sq_dists(X, centers)
            new = np.argmin(D, axis=1)
            for c in range(k):
                if not np.any(new == c):
                    far = int(np.argmax(D[np.arange(n), new]))
                    new[far] = c
                    D[far] = 0.0
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for c in range(k):
                centers[c] = X[labels == c].mean(axis=0)
        cost = float(np.sum((X - centers[labels]) ** 2))
        if cost < best_cost - 1e-12:
            best_labels, best_cost = labels.copy(), cost
    return best_labels, best_cost


def spectral_embedding(A, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalized eigenvectors of the k smallest L_sym eigenvalues.

    Isolated nodes are left out of the eigenproblem and get all-zero rows.
    Returns ``(embedding, full_spectrum)``.
    """
    W = _weights(A)
    N = W.shape[0]
    Lsym = normalized_laplacian(W)
    try:
        evals = np.linalg.eigvalsh(Lsym)
        active = np.flatnonzero(W.sum(axis=1) > 0)
        emb = np.zeros((N, k))
        if active.size:
            kk = min(k, active.size)
            _, vecs = np.linalg.eigh(Lsym[np.ix_(active, active)])
            V = vecs[:, :kk]
            norms = np.linalg.norm(V, axis=1)
            nz = norms > 0
            V[nz] /= norms[nz, None]
            emb[active, :kk] = V
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    return emb, evals


def spectral_clustering(A, L_hat: int, seed: int = 0, restarts: int = 10, iters: int = 100,
                        L_max: int | None = None) -> SpectralResult:
    if L_hat < 1:
        raise ConfigurationError("L_hat must be >= 1")
    W = _weights(A)
    N = W.shape[0]
    emb, evals = spectral_embedding(W, L_hat)
    est = estimate_num_clusters(W, L_max) if L_max else None
    if L_hat == 1:
        return SpectralResult(np.zeros(N, dtype=np.int64), evals, 0.0, est)
    nonzero = np.flatnonzero(np.linalg.norm(emb, axis=1) > 0)
    labels = np.zeros(N, dtype=np.int64)
    cost = 0.0
    if nonzero.size:
        k = min(L_hat, nonzero.size)
        sub, cost = kmeans(emb[nonzero], k, restarts=restarts, iters=iters, seed=seed)
        labels[nonzero] = sub
        zero = np.setdiff1d(np.arange(N), nonzero)
        if zero.size:
            # a zero row is closest to the nonzero row of smallest norm
            nearest = nonzero[np.argmin(np.linalg.norm(emb[nonzero], axis=1))]
            labels[zero] = labels[nearest]
    return SpectralResult(labels, evals, cost, est)


def connected_components(A, weight_tol: float = 0.0) -> np.ndarray:
    """Component id per node, using edges with weight > ``weight_tol``."""
    if weight_tol < 0:
        raise ConfigurationError("weight_tol must be >= 0")
    W = np.asarray(getattr(A, "weights", A), dtype=np.float64)
    graph = csr_matrix(W > weight_tol)
    _, comp = csgraph.connected_components(graph, directed=False)
    return comp


def num_components(A, weight_tol: float = 0.0) -> int:
    return int(np.unique(connected_components(A, weight_tol)).size)
