"""Resizing, mirroring and the two crop policies."""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np
from scipy import ndimage

from ..models import CropPolicy, CropSample

logger = logging.getLogger(__name__)

MIRROR_PROBABILITY = 0.5
# resize side before cropping, relative to a 112-pixel crop
POLICY_SOURCE = {CropPolicy.MILD: 128, CropPolicy.AGGRESSIVE: 256}
REFERENCE_CROP = 112


def resize_bilinear(array: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """Bilinear resize of the last two axes to `size`, value range preserved."""
    array = np.asarray(array, dtype=np.float64)
    height, width = size
    if array.shape[-2:] == (height, width):
        return array.copy()
    factors = [1.0] * (array.ndim - 2) + [height / array.shape[-2], width / array.shape[-1]]
    out = ndimage.zoom(array, factors, order=1, mode="nearest", grid_mode=True)
    if out.shape[-2:] != (height, width):
        raise ValueError(f"resize produced {out.shape[-2:]} instead of {(height, width)}")
    return np.clip(out, array.min(), array.max())


def flip_horizontal(array: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(array[..., ::-1])


def mirror_with_flag(
    clip: np.ndarray, attention_map: np.ndarray, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray, bool]:
    flipped = bool(rng.random() < MIRROR_PROBABILITY)
    if flipped:
        return flip_horizontal(clip), flip_horizontal(attention_map), True
    return clip, attention_map, False


def mirror(clip: np.ndarray, attention_map: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Flip clip and map together with probability 0.5."""
    clip, attention_map, _ = mirror_with_flag(clip, attention_map, rng)
    return clip, attention_map


def source_side(policy: CropPolicy, clip_size: int) -> int:
    return int(round(clip_size * POLICY_SOURCE[policy] / REFERENCE_CROP))


def crop_sample(
    clip: np.ndarray,
    attention_map: np.ndarray,
    rng: np.random.Generator,
    policy: CropPolicy,
    clip_size: int = REFERENCE_CROP,
    refine_size: int = 448,
    mirrored: bool = False,
) -> CropSample:
    """Resize to the policy's source side, cut one random clip_size window from clip and map."""
    if clip.ndim != 4 or attention_map.ndim != 3:
        raise ValueError(f"expected a 3×T×H×W clip and 1×H×W map, got {clip.shape} and {attention_map.shape}")
    if clip.shape[-2:] != attention_map.shape[-2:]:
        raise ValueError(f"clip {clip.shape[-2:]} and map {attention_map.shape[-2:]} differ in resolution")
    side = source_side(policy, clip_size)
    source_clip = resize_bilinear(clip, (side, side))
    source_map = resize_bilinear(attention_map, (side, side))
    y, x = (int(v) for v in rng.integers(0, side - clip_size + 1, size=2))
    window = (slice(y, y + clip_size), slice(x, x + clip_size))
    return CropSample(
        cropped_clip=source_clip[(Ellipsis,) + window],
        cropped_map=source_map[(Ellipsis,) + window],
        resized_clip=resize_bilinear(clip, (clip_size, clip_size)),
        full_map=resize_bilinear(attention_map, (refine_size, refine_size)),
        last_frame=resize_bilinear(clip[:, -1], (refine_size, refine_size)),
        origin=(y, x),
        source_size=side,
        mirrored=mirrored,
    )


def crop_policy_mild(
    clip: np.ndarray,
    attention_map: np.ndarray,
    rng: np.random.Generator,
    clip_size: int = REFERENCE_CROP,
    refine_size: int = 448,
) -> CropSample:
    return crop_sample(clip, attention_map, rng, CropPolicy.MILD, clip_size, refine_size)


def crop_policy_aggressive(
    clip: np.ndarray,
    attention_map: np.ndarray,
    rng: np.random.Generator,
    clip_size: int = REFERENCE_CROP,
    refine_size: int = 448,
) -> CropSample:
    """Window area is (112/256)² of the source, under a quarter."""
    return crop_sample(clip, attention_map, rng, CropPolicy.AGGRESSIVE, clip_size, refine_size)
