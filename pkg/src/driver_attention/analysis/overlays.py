"""Precision/recall deviation overlays and PGM/PPM exports."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from ..models import DeviationOverlay

logger = logging.getLogger(__name__)

DEVIATION_TOLERANCE = 0.10
PRECISION_COLOR = (0, 255, 0)
RECALL_COLOR = (255, 0, 0)


def _plane(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return m[0] if m.ndim == 3 else m


def max_normalize(attention_map: np.ndarray) -> np.ndarray:
    peak = float(np.max(attention_map))
    return np.asarray(attention_map, dtype=np.float64) / peak if peak > 0 else np.zeros_like(attention_map, dtype=np.float64)


def deviation_overlay(
    prediction: np.ndarray, ground_truth: np.ndarray, tolerance: float = DEVIATION_TOLERANCE
) -> DeviationOverlay:
    """Pixels where the (max-normalized) prediction exceeds or misses the ground truth by more than `tolerance`."""
    p, g = _plane(prediction), _plane(ground_truth)
    if p.shape != g.shape:
        raise ValueError(f"deviation_overlay: prediction {p.shape} and ground truth {g.shape} differ")
    return DeviationOverlay(precision_error=(p - g) > tolerance, recall_error=(g - p) > tolerance)


def overlay_image(ground_truth: np.ndarray, overlay: DeviationOverlay) -> np.ndarray:
    """H×W×3 uint8: dimmed ground truth, precision errors green, recall errors red."""
    base = np.round(np.clip(_plane(ground_truth), 0.0, 1.0) * 127.0).astype(np.uint8)
    rgb = np.repeat(base[..., None], 3, axis=2)
    rgb[overlay.precision_error] = PRECISION_COLOR
    rgb[overlay.recall_error] = RECALL_COLOR
    return rgb


def export_pgm(attention_map: np.ndarray, path: Union[str, Path]) -> Path:
    """8-bit grayscale of a max-normalized map."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    gray = np.round(max_normalize(_plane(attention_map)) * 255.0).astype(np.uint8)
    Image.fromarray(gray).save(path, format="PPM")
    return path


def export_ppm(rgb: np.ndarray, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format="PPM")
    return path
