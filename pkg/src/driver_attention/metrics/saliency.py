"""Saliency metrics: Pearson CC, KL(ground truth ‖ prediction) and Kendall tau-b."""

from __future__ import annotations

import logging
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from ..models import AttentionMap
from ..tensor import ShapeError

logger = logging.getLogger(__name__)

KL_EPSILON = 1e-7
KL_CONVENTION = f"KL(ground_truth || prediction), eps={KL_EPSILON:g} per cell, sum-normalized"

MapLike = Union[AttentionMap, np.ndarray]


def _grid(value: MapLike) -> np.ndarray:
    grid = value.grid if isinstance(value, AttentionMap) else value
    return np.asarray(grid, dtype=np.float64)


def _pair(prediction: MapLike, target: MapLike, op: str):
    p, g = _grid(prediction), _grid(target)
    if p.shape != g.shape:
        raise ShapeError(f"{op}: prediction {p.shape} and target {g.shape} differ")
    return p.ravel(), g.ravel()


def cc(prediction: MapLike, target: MapLike) -> Optional[float]:
    """Pearson correlation over pixels; None when either map is constant."""
    p, g = _pair(prediction, target, "cc")
    if np.ptp(p) == 0.0 or np.ptp(g) == 0.0:
        return None
    p = p - p.mean()
    g = g - g.mean()
    denom = np.sqrt(np.dot(p, p) * np.dot(g, g))
    if denom == 0.0:
        return None
    return float(np.clip(np.dot(p, g) / denom, -1.0, 1.0))


def kl(target: MapLike, prediction: MapLike) -> float:
    """Σ G·log(G/P) after adding KL_EPSILON to every cell and normalizing both to sum 1."""
    p, g = _pair(prediction, target, "kl")
    if np.any(p < 0) or np.any(g < 0):
        raise ValueError("kl: maps must be non-negative")
    return max(0.0, float(stats.entropy(g + KL_EPSILON, p + KL_EPSILON)))


def kendall_tau(series_a: Sequence[float], series_b: Sequence[float]) -> Optional[float]:
    """Tie-corrected tau-b; None when either series is all ties."""
    a = np.asarray(series_a, dtype=np.float64)
    b = np.asarray(series_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"kendall_tau: series must be 1-D and equally long, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise ValueError("kendall_tau: need at least two observations")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        return None
    tau = stats.kendalltau(a, b)[0]
    if not np.isfinite(tau):
        return None
    return float(tau)
