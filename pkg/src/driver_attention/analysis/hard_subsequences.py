"""Windows whose ground truth drifts away from the sequence-mean map."""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..metrics.saliency import cc
from ..models import CLIP_LENGTH, HardSelection

logger = logging.getLogger(__name__)

HARD_CC_THRESHOLD = 0.3


def merge_windows(windows: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
    merged: List[Tuple[int, int]] = []
    for start, end in sorted(windows):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(end, merged[-1][1]))
        else:
            merged.append((start, end))
    return merged


def select_hard_subsequences(
    maps: Sequence[np.ndarray],
    window: int = CLIP_LENGTH,
    threshold: float = HARD_CC_THRESHOLD,
) -> HardSelection:
    """Tile the sequence with `window`-frame windows; keep those with mean CC < threshold."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if len(maps) == 0:
        return HardSelection()
    stack = np.stack([np.asarray(m, dtype=np.float64) for m in maps])
    mean = stack.mean(axis=0)
    if np.ptp(mean) == 0.0:
        logger.warning("Sequence-mean map is constant; hard subsequences cannot be selected")
        return HardSelection(unselectable=True)

    selected: List[Tuple[int, int]] = []
    window_cc: List[Optional[float]] = []
    for start in range(0, len(stack), window):
        end = min(start + window, len(stack))
        scores = [s for s in (cc(stack[t], mean) for t in range(start, end)) if s is not None]
        score = float(np.mean(scores)) if scores else None
        window_cc.append(score)
        if score is not None and score < threshold:
            selected.append((start, end))
    return HardSelection(windows=merge_windows(selected), window_cc=window_cc)


def jaccard(selection: HardSelection, planted: np.ndarray) -> Optional[float]:
    """Frame-level Jaccard index between selected windows and planted event flags."""
    chosen = np.zeros(len(planted), dtype=bool)
    for start, end in selection.windows:
        chosen[start:end] = True
    planted = np.asarray(planted, dtype=bool)
    union = np.logical_or(chosen, planted).sum()
    if union == 0:
        return None
    return float(np.logical_and(chosen, planted).sum() / union)
