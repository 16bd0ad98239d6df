"""
COARSE+FINE: the shared COARSE module on a cropped and a resized stream, and a
refinement block over the upsampled resized-stream map stacked with the last
RGB frame. At test time only the refined map is used.
"""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from ..data.transforms import resize_bilinear
from ..models import CLIP_LENGTH, Architecture
from ..tensor import ShapeError, Tensor, concat, conv2d, leaky_relu, no_grad, relu, upsample2x
from .architecture import RGB, ModelParams
from .coarse import ArrayLike, _as_input, coarse_forward

logger = logging.getLogger(__name__)


def refine(coarse_map: Tensor, last_frame: ArrayLike, params: ModelParams) -> Tensor:
    """Upsample a 1×S×S map to R×R, stack with the 3×R×R frame, run the FINE block."""
    net = params.net
    frame = _as_input(last_frame)
    if frame.shape != (RGB, net.refine_size, net.refine_size):
        raise ShapeError(f"refine: last frame must be 3×{net.refine_size}×{net.refine_size}, got {frame.shape}")
    x = coarse_map
    for _ in range(net.upsample_steps):
        x = upsample2x(x)
    x = concat([x, frame], axis=0)
    layers = len(net.refine_channels) + 1
    for i in range(1, layers + 1):
        x = conv2d(x, params[f"fine.conv{i}.weight"], params[f"fine.conv{i}.bias"])
        x = leaky_relu(x, net.leaky_alpha) if i < layers else relu(x)
    return x


def coarse_fine_forward(
    clip_cropped: ArrayLike,
    clip_resized: ArrayLike,
    last_frame: ArrayLike,
    params: ModelParams,
) -> Tuple[Tensor, Tensor]:
    """Return (coarse map of the cropped stream, refined map of the resized stream)."""
    if params.architecture != Architecture.COARSE_FINE:
        raise ValueError(f"coarse_fine_forward needs coarse_fine parameters, got {params.architecture.value}")
    cropped_map = coarse_forward(clip_cropped, params)
    resized_map = coarse_forward(clip_resized, params)
    return cropped_map, refine(resized_map, last_frame, params)


def prepare_streams(frames: np.ndarray, params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """Resized 16-frame clip (3×16×S×S) and last frame at R×R from native-resolution frames."""
    if frames.ndim != 4 or frames.shape[0] != RGB:
        raise ShapeError(f"predict: frames must be 3×T×H×W, got {frames.shape}")
    if frames.shape[1] < CLIP_LENGTH:
        raise ValueError(f"predict: need at least {CLIP_LENGTH} frames, got {frames.shape[1]}")
    net = params.net
    clip = frames[:, -CLIP_LENGTH:]
    resized = resize_bilinear(clip, (net.clip_size, net.clip_size))
    last = resize_bilinear(clip[:, -1], (net.refine_size, net.refine_size))
    return resized, last


def predict(frames: np.ndarray, params: ModelParams) -> np.ndarray:
    """Attention map for the last of `frames` (3×T×H×W, T >= 16, any resolution).

    COARSE+FINE returns the refined 1×R×R map; COARSE returns its 1×S×S map.
    """
    resized, last = prepare_streams(frames, params)
    with no_grad():
        coarse_map = coarse_forward(resized, params)
        if params.architecture == Architecture.COARSE:
            return coarse_map.data
        return refine(coarse_map, last, params).data
