"""Closed-form clustering conditions for TSC, SSC and SSC-OMP on projected data.

Every evaluator returns a :class:`ConditionReport` whose ``lhs`` combines the
largest pairwise subspace affinity with a projection penalty proportional to
``sqrt(d_max / p)``; the condition holds when ``lhs <= rhs``. Logarithms are
natural. ``c_tilde`` is the constant of the projection's concentration
inequality and is left free (default 1).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class ConditionReport:
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    max_aff: float | None = None
    d_max: float | None = None
    d_min: float | None = None
    p: float | None = None
    N: float | None = None
    L: float | None = None
    rho_min: float | None = None
    sigma: float | None = None
    m: float | None = None
    c_tilde: float | None = None
    tau: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _report(lhs, rhs, **inputs) -> ConditionReport:
    return ConditionReport(lhs=lhs, rhs=rhs, satisfied=bool(lhs <= rhs),
                           margin=rhs - lhs, **inputs)


def _check_common(max_aff, d_max, p, N, c_tilde):
    if not 0.0 <= max_aff <= 1.0:
        raise ValidationError(f"max_aff must lie in [0, 1], got {max_aff}")
    if d_max <= 0 or p <= 0 or c_tilde <= 0:
        raise ValidationError("d_max, p and c_tilde must be positive")
    if N < 3:
        raise ValidationError(f"N must be >= 3 (log N > 1), got {N}")


def _check_rho(rho_min):
    if rho_min <= 1:
        raise ValidationError(f"rho_min must exceed 1, got {rho_min}")


def default_tau(N) -> float:
    return 2.0 * math.log(N)


def tsc_condition(max_aff, d_max, p, N, c_tilde=1.0) -> ConditionReport:
    _check_common(max_aff, d_max, p, N, c_tilde)
    lhs = max_aff + math.sqrt(11.0 / (3.0 * c_tilde)) * math.sqrt(d_max / p)
    rhs = 1.0 / (15.0 * math.log(N))
    return _report(lhs, rhs, max_aff=max_aff, d_max=d_max, p=p, N=N,
                   sigma=0.0, c_tilde=c_tilde)


def tsc_noisy_condition(max_aff, d_max, p, N, sigma, c_tilde=1.0, m=None) -> ConditionReport:
    """TSC condition with additive noise of total variance ``sigma**2`` per point.

    The noise adds ``sigma(1+sigma) sqrt(6) / sqrt(c_bar ln N) * sqrt(d_max/p)``
    to the noiseless left-hand side, with ``c_bar = min(6, c_tilde)``. When ``m``
    is given it must satisfy ``m >= 6 ln N``.
    """
    _check_common(max_aff, d_max, p, N, c_tilde)
    if sigma < 0:
        raise ValidationError("sigma must be >= 0")
    if m is not None and m < 6.0 * math.log(N):
        raise ValidationError(f"need m >= 6 ln N, got m={m}, N={N}")
    base = tsc_condition(max_aff, d_max, p, N, c_tilde)
    c_bar = min(6.0, c_tilde)
    noise = (sigma * (1.0 + sigma) * math.sqrt(6.0) / math.sqrt(c_bar * math.log(N))
             * math.sqrt(d_max / p))
    return _report(base.lhs + noise, base.rhs, max_aff=max_aff, d_max=d_max, p=p,
                   N=N, sigma=float(sigma), m=m, c_tilde=c_tilde)


def _projection_penalty(d_max, L, tau, c_tilde, p, denom):
    return math.sqrt((28.0 * d_max + 8.0 * math.log(L) + 2.0 * tau) / (denom * c_tilde * p))


def ssc_condition(max_aff, d_max, p, N, L, rho_min, tau=None, c_tilde=1.0) -> ConditionReport:
    _check_common(max_aff, d_max, p, N, c_tilde)
    _check_rho(rho_min)
    if L < 1:
        raise ValidationError("L must be >= 1")
    tau = default_tau(N) if tau is None else tau
    if tau <= 0:
        raise ValidationError("tau must be positive")
    lhs = max_aff + _projection_penalty(d_max, L, tau, c_tilde, p, 3.0)
    rhs = math.sqrt(math.log(rho_min)) / (65.0 * math.log(N))
    return _report(lhs, rhs, max_aff=max_aff, d_max=d_max, p=p, N=N, L=L,
                   rho_min=rho_min, c_tilde=c_tilde, tau=tau)


def sscomp_condition(max_aff, d_max, d_min, p, N, L, rho_min, tau=None,
                     c_tilde=1.0) -> ConditionReport:
    _check_common(max_aff, d_max, p, N, c_tilde)
    _check_rho(rho_min)
    if d_min < 1 or d_min > d_max:
        raise ValidationError("need 1 <= d_min <= d_max")
    if L < 1:
        raise ValidationError("L must be >= 1")
    tau = default_tau(N) if tau is None else tau
    if tau <= 0:
        raise ValidationError("tau must be positive")
    lhs = (max_aff + _projection_penalty(d_max, L, tau, c_tilde, p, 12.0)
           * math.sqrt(d_max / d_min))
    rhs = 3.0 / 200.0 * math.sqrt(math.log(rho_min)) / math.log(N)
    return _report(lhs, rhs, max_aff=max_aff, d_max=d_max, d_min=d_min, p=p, N=N,
                   L=L, rho_min=rho_min, c_tilde=c_tilde, tau=tau)


def sscomp_ambient_condition(max_aff, N, rho_min) -> ConditionReport:
    """SSC-OMP condition for clustering the unprojected data."""
    if not 0.0 <= max_aff <= 1.0:
        raise ValidationError(f"max_aff must lie in [0, 1], got {max_aff}")
    if N < 3:
        raise ValidationError(f"N must be >= 3, got {N}")
    _check_rho(rho_min)
    rhs = math.sqrt(math.log(rho_min)) / (64.0 * math.log(N))
    return _report(float(max_aff), rhs, max_aff=max_aff, N=N, rho_min=rho_min)


def phase_sigma_star_x(x, c1=0.8, c2=0.1, c3=0.8):
    """Noise level on the curve ``x (c1 + s (c2 + s)) = c3`` for ``x = sqrt(d/p)``.

    Returns None when the curve has no nonnegative root at this ``x``.
    """
    if x <= 0:
        raise ValidationError("x must be positive")
    disc = c2 * c2 - 4.0 * (c1 - c3 / x)
    if disc < 0:
        return None
    root = (-c2 + math.sqrt(disc)) / 2.0
    return root if root >= 0 else None


def phase_sigma_star(d, p, c1=0.8, c2=0.1, c3=0.8):
    if d < 1 or p < 1:
        raise ValidationError("d and p must be >= 1")
    if min(c1, c2, c3) < 0:
        raise ValidationError("curve constants must be nonnegative")
    return phase_sigma_star_x(math.sqrt(d / p), c1, c2, c3)
