"""Semantic composition of the attended region across linearly spaced thresholds."""

from __future__ import annotations

import logging
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from ..metrics.saliency import kendall_tau
from ..models import CATEGORIES, CategorySweep

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = 10


def linear_thresholds(n_thresholds: int = DEFAULT_THRESHOLDS) -> list:
    if n_thresholds < 2:
        raise ValueError(f"n_thresholds must be >= 2, got {n_thresholds}")
    return [k / n_thresholds for k in range(n_thresholds)]


def threshold_sweep(
    maps: Iterable[np.ndarray],
    segmentations: Iterable[np.ndarray],
    n_thresholds: int = DEFAULT_THRESHOLDS,
    thresholds: Optional[Sequence[float]] = None,
) -> CategorySweep:
    """Category proportions inside {map >= t}, counts pooled over all maps."""
    levels = list(thresholds) if thresholds is not None else linear_thresholds(n_thresholds)
    counts = np.zeros((len(levels), len(CATEGORIES)), dtype=np.int64)
    for m, seg in zip(maps, segmentations, strict=True):
        plane = np.asarray(m, dtype=np.float64)
        plane = plane[0] if plane.ndim == 3 else plane
        labels = np.asarray(seg)
        if plane.shape != labels.shape:
            raise ValueError(f"map {plane.shape} and segmentation {labels.shape} are not aligned")
        if labels.size and (labels.min() < 0 or labels.max() >= len(CATEGORIES)):
            raise ValueError(f"segmentation labels must lie in 0..{len(CATEGORIES) - 1}")
        for i, t in enumerate(levels):
            counts[i] += np.bincount(labels[plane >= t].astype(np.int64), minlength=len(CATEGORIES))
    totals = counts.sum(axis=1)
    empty = [bool(total == 0) for total in totals]
    proportions = np.zeros(counts.shape, dtype=np.float64)
    nonzero = totals > 0
    proportions[nonzero] = counts[nonzero] / totals[nonzero, None]

    slopes: Dict[str, Optional[float]] = {}
    x = np.asarray(levels, dtype=np.float64)[nonzero]
    for c, name in enumerate(CATEGORIES):
        slopes[name] = float(np.polyfit(x, proportions[nonzero, c], 1)[0]) if x.size >= 2 else None
    if any(empty):
        logger.warning(f"{sum(empty)} thresholds select no pixels")
    return CategorySweep(thresholds=levels, proportions=proportions, empty=empty, slopes=slopes)


def category_rank_agreement(gt_sweep: CategorySweep, prediction_sweep: CategorySweep) -> Optional[float]:
    """Kendall tau between the per-category mean proportions of two sweeps."""
    gt_means, pred_means = gt_sweep.category_means(), prediction_sweep.category_means()
    if list(gt_means) != list(pred_means):
        raise ValueError("sweeps cover different category lists")
    return kendall_tau([gt_means[c] for c in CATEGORIES], [pred_means[c] for c in CATEGORIES])
