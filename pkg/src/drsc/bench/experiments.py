"""Experiment runners: CE vs p, noise phase diagram, ambient-span, file clustering, theory table.

Seeds are derived deterministically: a trial's seed is
``derive_seed(master, experiment_id, trial)`` and every random object inside the
trial gets ``derive_seed(trial_seed, <role>, ...)`` (role = arrangement, points,
noise, projection, spectral). Results are sorted before emission, so output does
not depend on the number of worker threads.
"""
from __future__ import annotations

import hashlib
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .. import randproj, sparsegraph, spectral, theory, unionmodel
from ..errors import ConfigurationError, UsageError
from ..evalmetrics import clustering_error
from . import dataio
from .config import ExperimentConfig

log = logging.getLogger(__name__)

TIMING_FIELDS = ("t_projection", "t_adjacency", "t_spectral", "t_total")


def derive_seed(*parts) -> int:
    """64-bit seed from an arbitrary tuple of identifiers (blake2b of their text form)."""
    text = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


@dataclass
class ResultRow:
    experiment: str
    trial: int
    trial_seed: int
    algorithm: str
    param: float
    projection: str
    p: int
    sigma: float
    ce: float
    nfc: bool
    false_pairs: int
    L_hat: int | None
    t_projection: float
    t_adjacency: float
    t_spectral: float
    t_total: float

    def sort_key(self):
        return (self.trial, self.projection, self.p, self.sigma, self.algorithm)


RESULT_FIELDS = [f.name for f in fields(ResultRow)]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def result_table(rows, timings: bool = True):
    header = [f for f in RESULT_FIELDS if timings or f not in TIMING_FIELDS]
    body = []
    for row in sorted(rows, key=ResultRow.sort_key):
        d = dict(zip(RESULT_FIELDS, astuple(row)))
        body.append([_fmt(d[h]) for h in header])
    return header, body


def summarize(rows, timings: bool = True):
    """Mean CE, NFC rate and mean timings per (algorithm, param, projection, p, sigma)."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        key = (row.experiment, row.algorithm, row.param, row.projection, row.p, row.sigma)
        groups.setdefault(key, []).append(row)
    header = ["experiment", "algorithm", "param", "projection", "p", "sigma", "trials",
              "mean_ce", "std_ce", "nfc_rate"]
    if timings:
        header += ["mean_" + t for t in TIMING_FIELDS]
    body = []
    for key in sorted(groups, key=lambda k: (k[3], k[4], k[5], k[1])):
        g = groups[key]
        ce = np.array([r.ce for r in g])
        line = list(key) + [len(g), float(ce.mean()), float(ce.std()),
                            float(np.mean([r.nfc for r in g]))]
        if timings:
            line += [float(np.mean([getattr(r, t) for r in g])) for t in TIMING_FIELDS]
        body.append([_fmt(v) for v in line])
    return header, body


# ---------------------------------------------------------------- one clustering run

def build_adjacency(X, algorithm: str, param, cfg: ExperimentConfig | None = None):
    cfg = cfg or ExperimentConfig()
    if algorithm == "tsc":
        return sparsegraph.tsc_adjacency(X, int(param))
    if algorithm == "ssc":
        params = sparsegraph.SolverParams(**cfg.solver)
        if cfg.ssc_mode == "basis_pursuit":
            return sparsegraph.ssc_adjacency(X, "basis_pursuit", params=params)
        return sparsegraph.ssc_adjacency(X, "lasso", lam=float(param), params=params)
    if algorithm == "sscomp":
        return sparsegraph.sscomp_adjacency(X, int(param), residual_tol=cfg.residual_tol)
    raise ConfigurationError(f"unknown algorithm {algorithm!r}")


def cluster_once(X, labels, algorithm, param, L, seed, cfg: ExperimentConfig | None = None):
    """Adjacency + spectral clustering; returns (predicted labels, info dict)."""
    cfg = cfg or ExperimentConfig()
    t0 = time.perf_counter()
    A = build_adjacency(X, algorithm, param, cfg)
    t1 = time.perf_counter()
    L_max = cfg.L_max if cfg.estimate_L else None
    res = spectral.spectral_clustering(A, L, seed=derive_seed(seed, "spectral", algorithm),
                                       L_max=L_max)
    t2 = time.perf_counter()
    info = dict(adjacency=A, L_hat=res.estimated_L, t_adjacency=t1 - t0, t_spectral=t2 - t1)
    if labels is not None:
        info["ce"] = clustering_error(res.labels, labels).ce
        info["nfc"], info["false_pairs"] = sparsegraph.no_false_connections(A, labels)
    return res.labels, info


def _grid_for(cfg: ExperimentConfig, algorithm: str):
    return {"tsc": cfg.q_grid, "ssc": cfg.lambda_grid, "sscomp": cfg.smax_grid}[algorithm]


def select_params(dataset, algorithm: str, grid, cfg: ExperimentConfig | None = None,
                  seed: int = 0):
    """Grid value with the lowest CE on the (unprojected) dataset; ties go to the smaller value."""
    cfg = cfg or ExperimentConfig()
    if dataset.labels is None:
        raise UsageError("parameter selection needs ground-truth labels")
    grid = sorted(grid)
    if not grid:
        raise ConfigurationError("empty parameter grid")
    if algorithm == "ssc" and cfg.ssc_mode == "basis_pursuit":
        return grid[0]
    L = int(np.unique(dataset.labels).size)
    best, best_ce = None, math.inf
    for value in grid:
        if algorithm == "tsc" and value > dataset.N - 1:
            continue
        _, info = cluster_once(dataset.points, dataset.labels, algorithm, value, L, seed, cfg)
        log.debug("select %s=%s -> CE %.4f", algorithm, value, info["ce"])
        if info["ce"] < best_ce:
            best, best_ce = value, info["ce"]
    if best is None:
        raise ConfigurationError(f"no admissible {algorithm} parameter in {grid}")
    return best


def _generate(cfg: ExperimentConfig, seed: int):
    arr = unionmodel.make_arrangement(cfg.m, cfg.dimensions, cfg.mode,
                                      derive_seed(seed, "arrangement"), r=cfg.r)
    ds = unionmodel.sample_points(arr, cfg.cluster_counts, derive_seed(seed, "points"))
    return arr, ds


def choose_parameters(cfg: ExperimentConfig, sigma: float | None = None) -> dict:
    """Fixed values from ``cfg.params``; the rest selected on one unprojected realization.

    The selection data carries noise of level ``sigma`` (default ``cfg.select_sigma``,
    falling back to ``cfg.sigma``).
    """
    if sigma is None:
        sigma = cfg.sigma if cfg.select_sigma is None else cfg.select_sigma
    chosen = {}
    sel_seed = derive_seed(cfg.seed, cfg.exp_id, "select")
    ds = None
    for algo in cfg.algorithms:
        if algo in cfg.params:
            chosen[algo] = cfg.params[algo]
            continue
        if ds is None:
            _, ds = _generate(cfg, sel_seed)
            if sigma > 0:
                ds = unionmodel.add_noise(ds, sigma, derive_seed(sel_seed, "noise", sigma))
        chosen[algo] = select_params(ds, algo, _grid_for(cfg, algo), cfg, seed=sel_seed)
        log.info("%s: selected %s parameter %s (sigma=%s)", cfg.exp_id, algo, chosen[algo], sigma)
    return chosen


# ---------------------------------------------------------------- synthetic experiments

def _run_trial(cfg: ExperimentConfig, trial: int, chosen: dict) -> list[ResultRow]:
    tseed = derive_seed(cfg.seed, cfg.exp_id, trial)
    _, ds = _generate(cfg, tseed)
    L = len(cfg.dimensions)
    rows = []
    for sigma, params in chosen.items():
        noisy = unionmodel.add_noise(ds, sigma, derive_seed(tseed, "noise", sigma))
        for kind in cfg.projections:
            for p in cfg.p_grid:
                if kind == "identity" and p != cfg.m:
                    continue
                t0 = time.perf_counter()
                op = randproj.make_projection(kind, cfg.m, p, derive_seed(tseed, "projection", kind, p))
                X = randproj.apply(op, noisy.points)
                t_proj = time.perf_counter() - t0
                for algo in cfg.algorithms:
                    t1 = time.perf_counter()
                    _, info = cluster_once(X, ds.labels, algo, params[algo], L, tseed, cfg)
                    t_total = t_proj + time.perf_counter() - t1
                    rows.append(ResultRow(
                        experiment=cfg.exp_id, trial=trial, trial_seed=tseed, algorithm=algo,
                        param=float(params[algo]), projection=kind, p=int(p), sigma=float(sigma),
                        ce=float(info["ce"]), nfc=bool(info["nfc"]),
                        false_pairs=int(info["false_pairs"]), L_hat=info["L_hat"],
                        t_projection=t_proj, t_adjacency=info["t_adjacency"],
                        t_spectral=info["t_spectral"], t_total=t_total))
    return rows


def _run_trials(cfg: ExperimentConfig, sigmas) -> list[ResultRow]:
    params = choose_parameters(cfg)
    chosen = {float(s): params for s in sigmas}

    def task(trial):
        return _run_trial(cfg, trial, chosen)

    if cfg.threads <= 1:
        parts = [task(t) for t in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(task, range(cfg.trials)))
    rows = [row for part in parts for row in part]
    return sorted(rows, key=ResultRow.sort_key)


def run_ce_vs_p(cfg: ExperimentConfig) -> list[ResultRow]:
    return _run_trials(cfg, [cfg.sigma])


def run_ambient(cfg: ExperimentConfig) -> list[ResultRow]:
    if sum(cfg.dimensions) != cfg.m and cfg.mode == "gaussian_partition":
        raise ConfigurationError("ambient-span experiment needs sum(dims) == m")
    return _run_trials(cfg, [cfg.sigma])


def phase_curve(cfg: ExperimentConfig):
    """(x, sigma_star) samples of the overlay curve, x = sqrt(d/p)."""
    c1, c2, c3 = cfg.curve
    d = max(cfg.dimensions)
    xs = {round(math.sqrt(d / p), 12) for p in cfg.p_grid}
    xs |= {round(float(x), 12) for x in np.linspace(0.3, 1.0, 71)}
    return [(x, theory.phase_sigma_star_x(x, c1, c2, c3)) for x in sorted(xs)]


def run_phase_diagram(cfg: ExperimentConfig):
    rows = _run_trials(cfg, sorted(set(cfg.sigma_grid)))
    return rows, phase_curve(cfg)


# ---------------------------------------------------------------- file clustering

def run_cluster_file(cfg: ExperimentConfig):
    if not cfg.data_path:
        raise ConfigurationError("cluster_file needs data_path")
    points = dataio.load_points(cfg.data_path)
    m, N = points.shape
    labels = dataio.load_labels(cfg.labels_path, expected=N) if cfg.labels_path else None
    if cfg.normalize:
        points = sparsegraph.normalize_columns(points)
    algo = cfg.algorithm
    kind = cfg.projection
    p = cfg.p or m
    ds = unionmodel.Dataset(points=points, labels=labels)
    if algo in cfg.params:
        param = cfg.params[algo]
    elif labels is not None:
        param = select_params(ds, algo, _grid_for(cfg, algo), cfg, seed=cfg.seed)
    else:
        grid = sorted(_grid_for(cfg, algo))
        param = grid[len(grid) // 2]
    if labels is not None and not cfg.estimate_L:
        L = int(np.unique(labels).size)
    elif cfg.estimate_L:
        L = None
    else:
        L = cfg.L
    t0 = time.perf_counter()
    op = randproj.make_projection(kind, m, p, derive_seed(cfg.seed, "projection", kind, p))
    X = randproj.apply(op, points)
    t_proj = time.perf_counter() - t0
    if L is None:
        A = build_adjacency(X, algo, param, cfg)
        L = spectral.estimate_num_clusters(A, cfg.L_max)
    t1 = time.perf_counter()
    pred, info = cluster_once(X, labels, algo, param, L, cfg.seed, cfg)
    t_total = t_proj + time.perf_counter() - t1
    row = ResultRow(experiment=cfg.exp_id, trial=0, trial_seed=cfg.seed, algorithm=algo,
                    param=float(param), projection=kind, p=int(p), sigma=0.0,
                    ce=float(info.get("ce", math.nan)), nfc=bool(info.get("nfc", False)),
                    false_pairs=int(info.get("false_pairs", -1)), L_hat=info["L_hat"] or L,
                    t_projection=t_proj, t_adjacency=info["t_adjacency"],
                    t_spectral=info["t_spectral"], t_total=t_total)
    return [row], pred


# ---------------------------------------------------------------- theory table

THEORY_FIELDS = ["condition", "p", "lhs", "rhs", "satisfied", "margin", "max_aff", "d_max",
                 "d_min", "N", "L", "rho_min", "sigma", "c_tilde", "tau"]


def run_theory_table(cfg: ExperimentConfig):
    dims = cfg.dimensions
    counts = cfg.cluster_counts
    if cfg.max_aff is not None:
        max_aff = float(cfg.max_aff)
    else:
        arr = unionmodel.make_arrangement(cfg.m, dims, cfg.mode,
                                          derive_seed(cfg.seed, cfg.exp_id, "arrangement"), r=cfg.r)
        max_aff = arr.max_affinity()
    N = sum(counts)
    L = len(dims)
    d_max, d_min = max(dims), min(dims)
    rho_min = min((n - 1) / d for n, d in zip(counts, dims))
    tau = cfg.tau if cfg.tau is not None else theory.default_tau(N)
    c = cfg.c_tilde
    rows = []
    for p in sorted(cfg.p_grid):
        reports = [
            ("tsc", theory.tsc_condition(max_aff, d_max, p, N, c)),
            ("tsc_noisy", theory.tsc_noisy_condition(max_aff, d_max, p, N, cfg.sigma, c)),
            ("ssc", theory.ssc_condition(max_aff, d_max, p, N, L, rho_min, tau, c)),
            ("sscomp", theory.sscomp_condition(max_aff, d_max, d_min, p, N, L, rho_min, tau, c)),
            ("sscomp_ambient", theory.sscomp_ambient_condition(max_aff, N, rho_min)),
        ]
        for name, rep in reports:
            rows.append(dict(condition=name, p=p, lhs=rep.lhs, rhs=rep.rhs,
                             satisfied=rep.satisfied, margin=rep.margin, max_aff=max_aff,
                             d_max=d_max, d_min=d_min, N=N, L=L, rho_min=rho_min,
                             sigma=cfg.sigma, c_tilde=c, tau=tau))
    return rows


def theory_table_csv(rows):
    return THEORY_FIELDS, [[_fmt(r[f]) for f in THEORY_FIELDS] for r in rows]


# ---------------------------------------------------------------- output

def companion(path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.{suffix}{path.suffix or '.csv'}")


def write_results(out, rows, timings: bool = True) -> None:
    header, body = result_table(rows, timings)
    dataio.write_csv_rows(out, header, body)
    header, body = summarize(rows, timings)
    dataio.write_csv_rows(companion(out, "summary"), header, body)
