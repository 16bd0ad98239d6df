"""COARSE encoder-decoder: a 16-frame clip in, a single attention map out."""

from __future__ import annotations

import logging
from typing import Union

import numpy as np

from ..tensor import ShapeError, Tensor, conv2d, conv3d, leaky_relu, pool3d, relu, reshape, upsample2x
from .architecture import BOTTLENECK_POOL, ENCODER_LAYOUT, ModelParams

logger = logging.getLogger(__name__)

ArrayLike = Union[Tensor, np.ndarray]


def _as_input(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def coarse_encode(clip: ArrayLike, params: ModelParams) -> Tensor:
    """3×16×S×S clip → C×1×S/16×S/16 bottleneck."""
    x = _as_input(clip)
    if x.shape != params.net.clip_shape:
        raise ShapeError(f"coarse_encode: expected clip of shape {params.net.clip_shape}, got {x.shape}")
    for name, pool in ENCODER_LAYOUT:
        x = relu(conv3d(x, params[f"coarse.{name}.weight"], params[f"coarse.{name}.bias"]))
        if pool is not None:
            x = pool3d(x, pool)
    return pool3d(x, BOTTLENECK_POOL)


def coarse_decode(bottleneck: ArrayLike, params: ModelParams) -> Tensor:
    """C×1×h×w bottleneck → 1×S×S non-negative map."""
    x = _as_input(bottleneck)
    if x.shape != params.net.bottleneck_shape:
        raise ShapeError(
            f"coarse_decode: expected bottleneck of shape {params.net.bottleneck_shape}, got {x.shape}"
        )
    channels, _, height, width = x.shape
    x = reshape(x, (channels, height, width))
    alpha = params.net.leaky_alpha
    for i in range(1, len(params.net.decoder_channels) + 1):
        x = conv2d(x, params[f"coarse.dec{i}.weight"], params[f"coarse.dec{i}.bias"])
        x = upsample2x(leaky_relu(x, alpha))
    return relu(conv2d(x, params["coarse.head.weight"], params["coarse.head.bias"]))


def coarse_forward(clip: ArrayLike, params: ModelParams) -> Tensor:
    return coarse_decode(coarse_encode(clip, params), params)
