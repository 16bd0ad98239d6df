"""Centered-Gaussian and mean-training-map baselines."""

from __future__ import annotations

import logging
from typing import Iterable, Optional, Tuple

import numpy as np
from pydantic import Field, model_validator

from ..data.transforms import resize_bilinear
from ..models import ArrayModel, BaselineKind

logger = logging.getLogger(__name__)

DEFAULT_SIGMA_FRACTION = 0.25


class BaselinePredictor(ArrayModel):
    """A static map emitted for every clip."""
    kind: BaselineKind
    grid: np.ndarray  # 1×H×W, values >= 0
    sigma_y: Optional[float] = None
    sigma_x: Optional[float] = None
    sigma_fraction: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_grid(self) -> "BaselinePredictor":
        if self.grid.ndim != 3 or self.grid.shape[0] != 1:
            raise ValueError(f"baseline map must be 1×H×W, got {self.grid.shape}")
        if np.any(self.grid < 0):
            raise ValueError("baseline map must be non-negative")
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.grid.shape[1:])

    def predict(self, shape: Tuple[int, int]) -> np.ndarray:
        """The map at evaluation resolution `shape` (H, W)."""
        if tuple(shape) == self.shape:
            return self.grid
        if self.kind == BaselineKind.CENTERED_GAUSSIAN:
            return gaussian_baseline(shape, self.sigma_fraction or DEFAULT_SIGMA_FRACTION).grid
        return resize_bilinear(self.grid, tuple(shape))


def gaussian_baseline(shape: Tuple[int, int], sigma_fraction: float = DEFAULT_SIGMA_FRACTION) -> BaselinePredictor:
    """Gaussian centred in the frame with σ proportional to each side, max-normalized."""
    if sigma_fraction <= 0:
        raise ValueError(f"sigma_fraction must be > 0, got {sigma_fraction}")
    height, width = shape
    sigma_y, sigma_x = sigma_fraction * height, sigma_fraction * width
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    grid = np.exp(-((yy - cy) ** 2 / (2.0 * sigma_y ** 2) + (xx - cx) ** 2 / (2.0 * sigma_x ** 2)))
    grid /= grid.max()
    return BaselinePredictor(
        kind=BaselineKind.CENTERED_GAUSSIAN,
        grid=grid[None],
        sigma_y=sigma_y,
        sigma_x=sigma_x,
        sigma_fraction=sigma_fraction,
    )


def mean_gt_baseline(maps: Iterable[np.ndarray]) -> BaselinePredictor:
    """Pixelwise mean of training maps (each 1×H×W or H×W)."""
    total: Optional[np.ndarray] = None
    count = 0
    for m in maps:
        grid = np.asarray(m, dtype=np.float64)
        if grid.ndim == 2:
            grid = grid[None]
        if total is None:
            total = np.zeros_like(grid)
        elif grid.shape != total.shape:
            raise ValueError(f"mean_gt_baseline: map shape {grid.shape} differs from {total.shape}")
        total += grid
        count += 1
    if total is None:
        raise ValueError("mean_gt_baseline needs at least one map")
    logger.info(f"Mean ground-truth baseline from {count} maps")
    return BaselinePredictor(kind=BaselineKind.MEAN_TRAIN_GT, grid=total / count)
