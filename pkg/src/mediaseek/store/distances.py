"""Distance metric registry used by all vector tables."""

from __future__ import annotations

from enum import IntEnum

import numpy as np

from mediaseek.errors import DimensionMismatch, NegativeComponent

CHI2_EPS = 1e-10


class Metric(IntEnum):
    L2 = 0
    L1 = 1
    COSINE = 2
    CHISQUARED = 3


def distance(metric: Metric, a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionMismatch(f"lengths {len(a)} vs {len(b)}")
    return float(distances_to_rows(metric, a[None, :], b)[0])


def distances_to_rows(metric: Metric, rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Distances from ``query`` to every row of a (n, dim) matrix."""
    rows = np.asarray(rows, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if rows.shape[1] != len(query):
        raise DimensionMismatch(f"table dim {rows.shape[1]}, query dim {len(query)}")
    if metric == Metric.L2:
        diff = rows - query
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if metric == Metric.L1:
        return np.abs(rows - query).sum(axis=1)
    if metric == Metric.COSINE:
        qn = float(np.linalg.norm(query))
        rn = np.linalg.norm(rows, axis=1)
        sims = np.zeros(len(rows))
        ok = (rn > 0) & (qn > 0)
        if qn > 0:
            sims[ok] = (rows[ok] @ query) / (rn[ok] * qn)
        return 1.0 - sims
    if metric == Metric.CHISQUARED:
        if np.any(rows < 0) or np.any(query < 0):
            raise NegativeComponent("chi-squared needs nonnegative components")
        diff = rows - query
        return 0.5 * (diff * diff / (rows + query + CHI2_EPS)).sum(axis=1)
    raise ValueError(f"unknown metric {metric}")
