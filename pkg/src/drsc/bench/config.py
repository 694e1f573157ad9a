"""Experiment configuration: built-in defaults per experiment kind plus file overrides."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..errors import ConfigurationError
from ..randproj import KINDS
from ..unionmodel import MODES

ALGORITHMS = ("tsc", "ssc", "sscomp")
EXPERIMENTS = ("ce_vs_p", "phase_diagram", "ambient_span", "cluster_file", "theory_table")

LAMBDA_GRID = [0.001, 0.002, 0.004, 0.008, 0.01, 0.02, 0.04, 0.08, 0.1, 0.2]
SPARSITY_GRID = list(range(2, 19, 2))


@dataclass
class ExperimentConfig:
    kind: str = "ce_vs_p"
    experiment_id: str | None = None
    # data model
    m: int = 4096
    L: int = 3
    d: int = 20
    dims: list[int] | None = None
    n: int = 80
    counts: list[int] | None = None
    mode: str = "shared_intersection"
    r: int = 4
    sigma: float = 0.0
    sigma_grid: list[float] = field(default_factory=lambda: [0.0])
    select_sigma: float | None = None  # noise level of the parameter-selection data
    # projection
    projections: list[str] = field(default_factory=lambda: ["gaussian", "fast_dft"])
    p_grid: list[int] = field(default_factory=lambda: [8, 16, 32, 64, 128, 256])
    # algorithms
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    ssc_mode: str = "lasso"
    q_grid: list[int] = field(default_factory=lambda: list(SPARSITY_GRID))
    lambda_grid: list[float] = field(default_factory=lambda: list(LAMBDA_GRID))
    smax_grid: list[int] = field(default_factory=lambda: list(SPARSITY_GRID))
    params: dict = field(default_factory=dict)
    residual_tol: float = 1e-6
    solver: dict = field(default_factory=dict)
    estimate_L: bool = False
    L_max: int = 10
    # harness
    trials: int = 20
    seed: int = 0
    threads: int = 1
    out: str | None = None
    # theory table
    c_tilde: float = 1.0
    tau: float | None = None
    max_aff: float | None = None
    # phase diagram overlay curve constants
    curve: list[float] = field(default_factory=lambda: [0.8, 0.1, 0.8])
    # cluster_file
    data_path: str | None = None
    labels_path: str | None = None
    labels_out: str | None = None
    normalize: bool = True
    algorithm: str = "tsc"
    projection: str = "gaussian"
    p: int | None = None

    @property
    def dimensions(self) -> list[int]:
        return list(self.dims) if self.dims else [self.d] * self.L

    @property
    def cluster_counts(self) -> list[int]:
        return list(self.counts) if self.counts else [self.n] * len(self.dimensions)

    @property
    def exp_id(self) -> str:
        return self.experiment_id or self.kind

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> "ExperimentConfig":
        if self.kind not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigurationError(f"unknown algorithms {bad}")
        bad = [k for k in self.projections if k not in KINDS]
        if bad:
            raise ConfigurationError(f"unknown projection kinds {bad}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown arrangement mode {self.mode!r}")
        if self.ssc_mode not in ("lasso", "basis_pursuit"):
            raise ConfigurationError(f"unknown ssc_mode {self.ssc_mode!r}")
        if self.kind != "cluster_file":
            if not self.p_grid:
                raise ConfigurationError("p_grid is empty")
            if any(p < 1 or p > self.m for p in self.p_grid):
                raise ConfigurationError(f"p_grid values must lie in [1, m={self.m}]")
            if len(self.cluster_counts) != len(self.dimensions):
                raise ConfigurationError("counts and dims have different lengths")
        if any(s < 0 for s in self.sigma_grid) or self.sigma < 0 or (self.select_sigma or 0) < 0:
            raise ConfigurationError("noise levels must be >= 0")
        return self


# Desk-scale versions of the synthetic experiments (ambient dimension reduced
# from 2^15 to 2^12 for ce_vs_p).
DEFAULTS: dict[str, dict] = {
    "ce_vs_p": dict(m=4096, L=3, d=20, n=80, mode="shared_intersection", r=4,
                    projections=["gaussian", "fast_dft"], p_grid=[8, 16, 32, 64, 128, 256],
                    trials=20),
    "phase_diagram": dict(m=100, L=2, d=10, n=30, mode="orthogonal", projections=["gaussian"],
                          p_grid=[10, 12, 16, 20, 25, 31, 40, 49, 62, 80, 100],
                          sigma_grid=[round(0.1 * i, 1) for i in range(21)], trials=20,
                          # fixed: every grid value is perfect on the noiseless unprojected data
                          params={"tsc": 6, "ssc": 0.08, "sscomp": 6}),
    "ambient_span": dict(m=200, L=10, d=20, n=60, mode="gaussian_partition",
                         projections=["gaussian", "fast_dft"],
                         p_grid=[10, 20, 30, 40, 60, 80, 120, 200], trials=5),
    "cluster_file": dict(projections=["gaussian"], trials=1),
    "theory_table": dict(m=4096, L=3, d=20, n=80, mode="shared_intersection", r=4,
                         p_grid=[8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096], trials=1),
}


def make_config(kind: str, overrides: dict | None = None) -> ExperimentConfig:
    if kind not in DEFAULTS:
        raise ConfigurationError(f"unknown experiment kind {kind!r}")
    values = dict(DEFAULTS[kind])
    values.update(overrides or {})
    values["kind"] = kind
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {unknown}")
    return ExperimentConfig(**values).validate()


def read_config_file(path) -> dict:
    text = Path(path).read_text()
    if Path(path).suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError("config file must contain a mapping")
    return data
