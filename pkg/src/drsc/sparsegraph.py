"""Sparse self-representations and the adjacency matrices built from them.

Each algorithm represents every point ``x_j`` through the remaining points,
collects the coefficient vectors as the columns of ``Z`` (``Z[j, j] == 0``)
and returns ``A = |Z| + |Z|^T``.

* TSC: least squares on the ``q`` points with the largest ``|<x_j, x_i>|``.
* SSC: l1-minimal representation (basis pursuit) or its Lasso relaxation,
  solved for all columns at once by ADMM and then polished to an exact
  optimality certificate by a small active-set refinement.
* SSC-OMP: orthogonal matching pursuit with at most ``s_max`` steps.

Points are l2-normalized first (zero columns stay zero). Ties are broken
towards the smaller index everywhere, so outputs are deterministic.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy.optimize import linprog

from .errors import ConfigurationError, DimensionError, UsageError

log = logging.getLogger(__name__)


@dataclass(eq=False)
class SparseRep:
    index: int
    support: np.ndarray
    coefficients: np.ndarray
    residual_norms: list[float] = field(default_factory=list)
    converged: bool = True


@dataclass(eq=False)
class AdjacencyMatrix:
    weights: np.ndarray
    algorithm: str
    coefficients: np.ndarray  # signed Z, column j represents point j
    support_sizes: np.ndarray
    unconverged: list[int] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.weights.shape[0]

    @property
    def warning_count(self) -> int:
        return len(self.unconverged)


@dataclass(frozen=True)
class SolverParams:
    """ADMM settings shared by the basis-pursuit and Lasso SSC solvers."""

    rho: float = 1.0
    abs_tol: float = 1e-6
    rel_tol: float = 1e-4
    max_iter: int = 400
    polish: bool = True


def normalize_columns(X) -> np.ndarray:
    X = np.array(X, dtype=np.float64, copy=True)
    if X.ndim != 2:
        raise DimensionError("expected a 2-D data matrix with points as columns")
    norms = np.linalg.norm(X, axis=0)
    nz = norms > 0
    X[:, nz] /= norms[nz]
    return X


def _compress(X: np.ndarray) -> np.ndarray:
    # every algorithm here depends on X only through X^T X; when p > N an N x N
    # triangular factor with the same Gram matrix is cheaper to work with
    p, N = X.shape
    if p <= N:
        return X
    return np.linalg.qr(X, mode="r")


def _prepare(X, normalize):
    X = normalize_columns(X) if normalize else np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError("expected a 2-D data matrix with points as columns")
    return _compress(X)


def _map_columns(fn, N, n_jobs):
    if n_jobs is None or n_jobs <= 1:
        return [fn(j) for j in range(N)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, range(N)))


def _assemble(reps: list[SparseRep], N: int, algorithm: str) -> AdjacencyMatrix:
    Z = np.zeros((N, N))
    sizes = np.zeros(N, dtype=np.int64)
    for rep in reps:
        Z[rep.support, rep.index] = rep.coefficients
        sizes[rep.index] = len(rep.support)
    np.fill_diagonal(Z, 0.0)
    absZ = np.abs(Z)
    A = absZ + absZ.T
    unconverged = [rep.index for rep in reps if not rep.converged]
    if unconverged:
        log.warning("%s: %d column(s) did not meet the solver tolerance", algorithm,
                    len(unconverged))
    return AdjacencyMatrix(weights=A, algorithm=algorithm, coefficients=Z,
                           support_sizes=sizes, unconverged=unconverged)


# ---------------------------------------------------------------- TSC

def tsc_neighbors(X, q: int, normalize: bool = True) -> np.ndarray:
    """Row j holds the ``q`` indices with the largest |<x_j, x_i>|, i != j."""
    Xc = _prepare(X, normalize)
    N = Xc.shape[1]
    if not 1 <= q <= N - 1:
        raise ConfigurationError(f"q must lie in [1, N-1] = [1, {N - 1}], got {q}")
    C = np.abs(Xc.T @ Xc)
    np.fill_diagonal(C, -1.0)
    # stable sort on the negated key keeps the smaller index first among ties
    return np.argsort(-C, axis=1, kind="stable")[:, :q]


def tsc_adjacency(X, q: int, normalize: bool = True, n_jobs: int = 1) -> AdjacencyMatrix:
    Xc = _prepare(X, normalize)
    N = Xc.shape[1]
    S = tsc_neighbors(Xc, q, normalize=False)

    def column(j):
        idx = S[j]
        coef = np.linalg.lstsq(Xc[:, idx], Xc[:, j], rcond=None)[0]
        return SparseRep(j, idx, coef)

    return _assemble(_map_columns(column, N, n_jobs), N, "tsc")


# ---------------------------------------------------------------- SSC

def _soft(V, t):
    return V - np.clip(V, -t, t)


def _colnorm(V):
    return np.sqrt(np.einsum("ij,ij->j", V, V))


def _admm(Xc, G, lam, mode, params: SolverParams, P=None):
    """Run ADMM for every column at once; returns (Z, converged mask, iterations)."""
    p, N = Xc.shape
    rho = params.rho
    n = max(N - 1, 1)
    Z = np.zeros((N, N))
    U = np.zeros((N, N))
    if mode == "lasso":
        if 2 * p < N:
            # (G + rho I)^{-1} V = (V - X^T (rho I + X X^T)^{-1} X V) / rho
            K = sla.cho_factor(rho * np.eye(p) + Xc @ Xc.T)

            def solve(V):
                return (V - Xc.T @ sla.cho_solve(K, Xc @ V)) / rho
        else:
            # G + rho I is well conditioned (eigenvalues >= rho); a product is faster than solves
            Minv = sla.cho_solve(sla.cho_factor(G + rho * np.eye(N)), np.eye(N))

            def solve(V):
                return Minv @ V
        base = solve(G)
        thresh = lam / rho
    else:
        Q = np.eye(N) - P
        thresh = 1.0 / rho
    converged = np.zeros(N, dtype=bool)
    it = 0
    for it in range(1, params.max_iter + 1):
        if mode == "lasso":
            C = base + rho * solve(Z - U)
        else:
            C = Q @ (Z - U) + P
        Z_old = Z
        Z = _soft(C + U, thresh)
        np.fill_diagonal(Z, 0.0)
        U = U + C - Z
        r = _colnorm(C - Z)
        s = rho * _colnorm(Z - Z_old)
        eps_pri = np.sqrt(n) * params.abs_tol + params.rel_tol * np.maximum(_colnorm(C), _colnorm(Z))
        eps_dual = np.sqrt(n) * params.abs_tol + params.rel_tol * rho * _colnorm(U)
        converged = (r <= eps_pri) & (s <= eps_dual)
        if converged.all():
            break
    return Z, converged, it


def lasso_certificate(G, j, z, lam, rtol=1e-6):
    """KKT check for ``min lam*||z||_1 + 0.5*||x_j - X z||^2`` with ``z_j = 0``.

    Works on the Gram matrix ``G = X^T X``. Returns True when every correlation
    of the residual is at most ``lam(1+rtol)`` in magnitude and equals
    ``lam*sign(z_i)`` within ``rtol*lam`` on the support.
    """
    corr = G[:, j] - G @ z
    corr[j] = 0.0
    if np.max(np.abs(corr)) > lam * (1.0 + rtol):
        return False
    S = np.flatnonzero(z)
    return bool(np.all(np.abs(corr[S] - lam * np.sign(z[S])) <= rtol * lam))


def _lasso_objective(G, g, z, lam):
    S = np.flatnonzero(z)
    zS = z[S]
    return 0.5 * zS @ G[np.ix_(S, S)] @ zS - g[S] @ zS + lam * np.abs(zS).sum()


def _restricted_solve(GA, rhs, rank):
    """Minimum-norm solution of ``GA w = rhs`` plus the part of ``rhs`` in the null space of ``GA``."""
    if rank is not None and GA.shape[0] < rank:
        try:
            cf = sla.cho_factor(GA, check_finite=False)
            dg = np.abs(np.diag(cf[0]))
            # crude conditioning guard; near-singular blocks use the eigendecomposition
            if dg.min() > 1e-5 * dg.max():
                w = sla.cho_solve(cf, rhs, check_finite=False)
                # one step of iterative refinement
                w += sla.cho_solve(cf, rhs - GA @ w, check_finite=False)
                return w, None
        except np.linalg.LinAlgError:
            pass
    w, V = np.linalg.eigh(GA)
    keep = w > 1e-10 * max(w[-1], 1e-300)
    Vk, Vn = V[:, keep], V[:, ~keep]
    target = Vk @ ((Vk.T @ rhs) / w[keep])
    target += Vk @ ((Vk.T @ (rhs - GA @ target)) / w[keep])
    return target, Vn @ (Vn.T @ rhs)


def _lasso_polish(G, j, z0, lam, max_steps, rank=None):
    """Feature-sign search warm-started at ``z0``; the objective never increases.

    Steps that fail to decrease the objective (degenerate active sets) are
    replaced by an exact minimization over the coordinate with the largest
    optimality violation. ``rank`` (rank of ``G``) enables Cholesky solves.
    """
    g = G[:, j]
    z = z0.copy()
    z[j] = 0.0
    if rank is not None and np.count_nonzero(z) > rank:
        # some optimal support has at most rank(G) entries; keep the largest
        z[np.argsort(-np.abs(z), kind="stable")[rank:]] = 0.0
    obj = _lasso_objective(G, g, z, lam)
    tol = 1e-9 * lam
    for _ in range(max_steps):
        S = np.flatnonzero(z)
        grad = z[S] @ G[S] - g  # G is symmetric; row gathers are contiguous
        theta = np.sign(z)
        viol = np.maximum(np.abs(grad) - lam, 0.0)
        viol[S] = np.abs(grad[S] + lam * theta[S])
        viol[j] = 0.0
        if viol.max() <= tol:
            return z
        if np.all(viol[S] <= tol):
            # support is optimal: activate the worst violator with the descent sign
            i = int(np.argmax(viol))
            theta[i] = -np.sign(grad[i])
        act = np.flatnonzero(theta)
        GA = G[np.ix_(act, act)]
        gA = g[act]
        rhs = gA - lam * theta[act]
        target, d = _restricted_solve(GA, rhs, rank)
        cur = z[act]
        hits = np.zeros(0, dtype=np.int64)
        flips = hits
        if d is not None and np.linalg.norm(d) > 1e-10 * (1.0 + np.linalg.norm(rhs)):
            # singular restricted problem: the objective decreases linearly along
            # the null-space direction d until the first coefficient hits zero
            hits = np.flatnonzero(theta[act] * d < 0)
        if hits.size:
            t = -cur[hits] / d[hits]
            k = hits[int(np.argmin(t))]
            new = cur + t.min() * d
            new[k] = 0.0
        else:
            # candidates: the target and every sign-change point on the segment to it
            flips = np.flatnonzero((cur != 0) & (np.sign(target) != np.sign(cur)))
            t = cur[flips] / (cur[flips] - target[flips])
            C = cur[:, None] + (target - cur)[:, None] * np.append(t, 1.0)[None, :]
            C[flips, np.arange(flips.size)] = 0.0
            vals = 0.5 * np.einsum("ic,ic->c", C, GA @ C) - gA @ C + lam * np.abs(C).sum(0)
            # ties favour the full step (last column), as in a sequential scan
            new = C[:, int(np.argmin(np.append(vals[-1], vals[:-1]))) - 1]
        new[np.abs(new) <= 1e-13 * max(1.0, np.abs(new).max())] = 0.0
        trial = z.copy()
        trial[act] = new
        trial_obj = 0.5 * new @ GA @ new - gA @ new + lam * np.abs(new).sum()
        shrunk = np.count_nonzero(new) < S.size
        # a sign-consistent full step minimizes the objective on its orthant; accept it
        # even when the decrease is below the resolution of the objective value
        full = hits.size == 0 and flips.size == 0 and bool(np.all(theta[act] * new >= 0))
        if (full or trial_obj < obj - 1e-15 * max(1.0, abs(obj))
                or (shrunk and trial_obj <= obj)):
            z, obj = trial, trial_obj
            continue
        # no progress: exact coordinate minimization on the worst violator
        i = int(np.argmax(viol))
        c = G[i, i] * z[i] - grad[i]
        z[i] = np.sign(c) * max(abs(c) - lam, 0.0) / G[i, i]
        new_obj = _lasso_objective(G, g, z, lam)
        if new_obj >= obj:
            return z
        obj = new_obj
    return None


def _bp_polish(Xc, j, z0):
    S = np.flatnonzero(z0)
    if S.size == 0:
        return None
    XS = Xc[:, S]
    rank = np.linalg.matrix_rank(XS)
    if rank < S.size:
        # keep the `rank` largest entries; a vertex of the l1 problem has at most rank(X) nonzeros
        keep = np.sort(S[np.argsort(-np.abs(z0[S]), kind="stable")[:rank]])
        S, XS = keep, Xc[:, keep]
    zS = np.linalg.lstsq(XS, Xc[:, j], rcond=None)[0]
    scale = max(1.0, np.linalg.norm(Xc[:, j]))
    if np.linalg.norm(XS @ zS - Xc[:, j]) > 1e-10 * scale:
        return None
    z = np.zeros_like(z0)
    z[S] = zS
    l1_old = np.sum(np.abs(z0))
    if np.sum(np.abs(z)) > l1_old + 1e-6 * (1.0 + l1_old):
        return None
    return z


def _bp_lp(Xc, j):
    """Exact basis pursuit for column ``j`` as an LP (split z = u - v); None on failure."""
    N = Xc.shape[1]
    others = np.delete(np.arange(N), j)
    Xr = Xc[:, others]
    n = others.size
    res = linprog(np.ones(2 * n), A_eq=np.hstack([Xr, -Xr]), b_eq=Xc[:, j],
                  bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    w = res.x[:n] - res.x[n:]
    S = np.flatnonzero(w)
    z = np.zeros(N)
    if S.size:
        # the LP returns a vertex, so the support columns are independent: refit exactly
        coef = np.linalg.lstsq(Xr[:, S], Xc[:, j], rcond=None)[0]
        z[others[S]] = coef
    return z


def bp_feasible(Xc, j, z, tol=1e-6) -> bool:
    return bool(np.linalg.norm(Xc @ z - Xc[:, j]) <= tol)


def ssc_adjacency(X, mode: str = "lasso", lam: float | None = None,
                  params: SolverParams | None = None, normalize: bool = True,
                  n_jobs: int = 1) -> AdjacencyMatrix:
    """SSC adjacency via basis pursuit (``mode='basis_pursuit'``) or Lasso.

    Columns whose final iterate fails the optimality check (KKT certificate for
    Lasso, feasibility within 1e-6 for basis pursuit) keep their best iterate
    and are listed in ``unconverged``.
    """
    params = params or SolverParams()
    if mode not in ("lasso", "basis_pursuit"):
        raise ConfigurationError(f"unknown SSC mode {mode!r}")
    if mode == "lasso" and (lam is None or lam <= 0):
        raise ConfigurationError("lasso mode needs lam > 0")
    Xc = _prepare(X, normalize)
    N = Xc.shape[1]
    if N < 2:
        raise DimensionError("SSC needs at least two points")
    G = Xc.T @ Xc
    P = None
    if mode == "basis_pursuit":
        _, sv, Vt = np.linalg.svd(Xc, full_matrices=False)
        tol = max(Xc.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
        Vr = Vt[sv > tol].T
        P = Vr @ Vr.T
    Z, admm_ok, iters = _admm(Xc, G, lam, mode, params, P)
    log.debug("ssc-%s: ADMM stopped after %d iterations", mode, iters)

    def column(j):
        z = Z[:, j].copy()
        if mode == "lasso":
            if not lasso_certificate(G, j, z, lam) and params.polish:
                zp = _lasso_polish(G, j, z, lam, max_steps=4 * N + 50, rank=min(Xc.shape))
                if zp is not None and lasso_certificate(G, j, zp, lam):
                    z = zp
            ok = lasso_certificate(G, j, z, lam)
        else:
            if params.polish:
                zp = _bp_polish(Xc, j, z)
                if zp is not None:
                    z = zp
                if not (admm_ok[j] and bp_feasible(Xc, j, z)):
                    zl = _bp_lp(Xc, j)
                    if zl is not None and bp_feasible(Xc, j, zl):
                        z = zl
                # roundoff-level entries left by the refits are not part of the support
                tiny = (z != 0) & (np.abs(z) <= 1e-10 * np.max(np.abs(z), initial=0.0))
                if tiny.any():
                    zt = np.where(tiny, 0.0, z)
                    if bp_feasible(Xc, j, zt):
                        z = zt
            ok = bp_feasible(Xc, j, z)
        S = np.flatnonzero(z)
        return SparseRep(j, S, z[S], converged=ok)

    return _assemble(_map_columns(column, N, n_jobs), N, f"ssc-{mode}")


# ---------------------------------------------------------------- SSC-OMP

def omp_representation(Xc, j: int, s_max: int, residual_tol: float = 1e-6,
                       labels=None) -> tuple[SparseRep, list[float]]:
    """OMP for column ``j`` of ``Xc``; also returns per-iteration selection margins.

    The margin of an iteration is the largest in-class minus the largest
    out-of-class absolute correlation with the current residual (empty when
    ``labels`` is None).
    """
    x = Xc[:, j]
    N = Xc.shape[1]
    support: list[int] = []
    coef = np.zeros(0)
    r = x.copy()
    norms = [float(np.linalg.norm(r))]
    margins: list[float] = []
    if labels is not None:
        same = labels == labels[j]
        same[j] = False
        other = labels != labels[j]
    while len(support) < s_max and norms[-1] > residual_tol:
        corr = np.abs(Xc.T @ r)
        if labels is not None:
            in_max = corr[same].max() if same.any() else 0.0
            out_max = corr[other].max() if other.any() else 0.0
            margins.append(float(in_max - out_max))
        corr[j] = -1.0
        corr[support] = -1.0
        i = int(np.argmax(corr))
        if corr[i] <= 0.0:
            if labels is not None:
                margins.pop()
            break
        support.append(i)
        XS = Xc[:, support]
        coef = np.linalg.lstsq(XS, x, rcond=None)[0]
        r = x - XS @ coef
        norms.append(float(np.linalg.norm(r)))
    return SparseRep(j, np.array(support, dtype=np.int64), coef, norms), margins


def sscomp_adjacency(X, s_max: int, residual_tol: float = 1e-6, normalize: bool = True,
                     n_jobs: int = 1) -> AdjacencyMatrix:
    if s_max < 1:
        raise ConfigurationError("s_max must be >= 1")
    if residual_tol < 0:
        raise ConfigurationError("residual_tol must be >= 0")
    Xc = _prepare(X, normalize)
    N = Xc.shape[1]
    reps = _map_columns(lambda j: omp_representation(Xc, j, s_max, residual_tol)[0], N, n_jobs)
    return _assemble(reps, N, "sscomp")


# ---------------------------------------------------------------- diagnostics

def no_false_connections(A, labels) -> tuple[bool, int]:
    """(ok, number of unordered cross-label pairs with positive weight)."""
    W = A.weights if isinstance(A, AdjacencyMatrix) else np.asarray(A)
    labels = np.asarray(labels)
    if labels.shape[0] != W.shape[0]:
        raise DimensionError("labels length does not match the adjacency size")
    cross = (W > 0) & (labels[:, None] != labels[None, :])
    # count each unordered pair once, whichever triangle carries the weight
    pairs = int(np.count_nonzero(np.triu(cross | cross.T, k=1)))
    return pairs == 0, pairs


def selection_margins(X, labels, algo: str, q: int | None = None, s_max: int | None = None,
                      residual_tol: float = 1e-6, normalize: bool = True) -> np.ndarray:
    """Per-point margins of the deterministic no-false-connection conditions.

    ``algo='tsc'``: q-th largest in-class |<x_i, x_j>| minus the largest
    out-of-class one. ``algo='omp'``: the minimum over executed OMP iterations
    of the in-class minus out-of-class maximal residual correlation. A positive
    margin for every point implies no false connections.
    """
    if labels is None:
        raise UsageError("selection_margins needs ground-truth labels")
    labels = np.asarray(labels)
    Xc = _prepare(X, normalize)
    N = Xc.shape[1]
    if labels.shape[0] != N:
        raise DimensionError("labels length does not match the number of points")
    margins = np.empty(N)
    if algo == "tsc":
        if q is None or q < 1:
            raise ConfigurationError("tsc margins need q >= 1")
        C = np.abs(Xc.T @ Xc)
        for i in range(N):
            same = labels == labels[i]
            same[i] = False
            inside = np.sort(C[i, same])[::-1]
            outside = C[i, labels != labels[i]]
            out_max = outside.max() if outside.size else -np.inf
            margins[i] = inside[q - 1] - out_max if inside.size >= q else -np.inf
    elif algo == "omp":
        if s_max is None or s_max < 1:
            raise ConfigurationError("omp margins need s_max >= 1")
        for i in range(N):
            _, per_iter = omp_representation(Xc, i, s_max, residual_tol, labels=labels)
            margins[i] = min(per_iter) if per_iter else np.inf
    else:
        raise ConfigurationError(f"unknown algorithm {algo!r} for selection margins")
    return margins
