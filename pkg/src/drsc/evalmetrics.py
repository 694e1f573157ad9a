"""Clustering error under the best matching of predicted to true cluster ids."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import UsageError


@dataclass(frozen=True)
class Matching:
    mapping: dict  # predicted id -> true id (ids matched to padding are absent)
    mismatches: int
    ce: float


def assignment_min_cost(cost) -> tuple[np.ndarray, float]:
    """Minimum-cost perfect assignment; rectangular input is zero-padded to square.

    Returns ``(assign, total)`` where row ``i`` is matched to column ``assign[i]``.
    """
    C = np.asarray(cost, dtype=np.float64)
    if C.ndim != 2:
        raise UsageError("cost must be a 2-D matrix")
    k = max(C.shape)
    sq = np.zeros((k, k))
    sq[:C.shape[0], :C.shape[1]] = C
    rows, cols = linear_sum_assignment(sq)
    assign = np.empty(k, dtype=np.int64)
    assign[rows] = cols
    return assign, float(sq[rows, cols].sum())


def clustering_error(pred, truth) -> Matching:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise UsageError("pred and truth must be 1-D with equal length")
    N = pred.size
    if N == 0:
        return Matching({}, 0, 0.0)
    p_ids, p_idx = np.unique(pred, return_inverse=True)
    t_ids, t_idx = np.unique(truth, return_inverse=True)
    counts = np.zeros((p_ids.size, t_ids.size), dtype=np.int64)
    np.add.at(counts, (p_idx, t_idx), 1)
    assign, _ = assignment_min_cost(-counts)
    matched = 0
    mapping = {}
    for i, pid in enumerate(p_ids):
        j = assign[i]
        if j < t_ids.size:
            matched += counts[i, j]
            mapping[pid.item()] = t_ids[j].item()
    mismatches = int(N - matched)
    return Matching(mapping, mismatches, mismatches / N)
