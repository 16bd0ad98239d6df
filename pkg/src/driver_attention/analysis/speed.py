"""Speed-bucketed mean maps, sequence mean and fixation mode, spatial spread."""

from __future__ import annotations

import logging
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..models import SPEED_BUCKETS, FrameRecord, Landscape, SpeedBucket, SpeedBucketSummary

logger = logging.getLogger(__name__)


def bucket_label(speed_kmh: float) -> str:
    if speed_kmh < 0 or not np.isfinite(speed_kmh):
        raise ValueError(f"speed must be a finite non-negative value, got {speed_kmh}")
    for label, low, high in SPEED_BUCKETS:
        if low <= speed_kmh < high:
            return label
    raise ValueError(f"speed {speed_kmh} falls in no bucket")


def _plane(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return m[0] if m.ndim == 3 else m


def speed_bucket_maps(maps: Iterable[np.ndarray], records: Iterable[FrameRecord]) -> SpeedBucketSummary:
    """Pixelwise mean map and landscape histogram per speed bucket."""
    buckets = [SpeedBucket(label=label, low_kmh=low, high_kmh=high) for label, low, high in SPEED_BUCKETS]
    by_label = {b.label: b for b in buckets}
    sums = {}
    for m, record in zip(maps, records, strict=True):
        bucket = by_label[bucket_label(record.speed_kmh)]
        plane = _plane(m)
        if bucket.label in sums:
            if sums[bucket.label].shape != plane.shape:
                raise ValueError(f"map shape {plane.shape} differs from {sums[bucket.label].shape}")
            sums[bucket.label] += plane
        else:
            sums[bucket.label] = plane.copy()
        bucket.count += 1
        bucket.landscape_counts[Landscape(record.landscape).value] += 1
    for bucket in buckets:
        if bucket.empty:
            logger.warning(f"Speed bucket {bucket.label} is empty")
        else:
            bucket.mean_map = (sums[bucket.label] / bucket.count)[None]
    return SpeedBucketSummary(buckets=buckets)


def sequence_mean_and_mode(maps: Sequence[np.ndarray]) -> Tuple[np.ndarray, Tuple[int, int]]:
    """Mean map (1×H×W) and its first row-major argmax as (y, x)."""
    if len(maps) == 0:
        raise ValueError("sequence_mean_and_mode needs at least one map")
    mean = np.mean(np.stack([_plane(m) for m in maps]), axis=0)
    y, x = np.unravel_index(int(np.argmax(mean)), mean.shape)
    return mean[None], (int(y), int(x))


def spatial_spread(attention_map: np.ndarray) -> float:
    """Second spatial moment about the centroid of the map taken as a distribution."""
    plane = _plane(attention_map)
    mass = plane.sum()
    if mass <= 0:
        raise ValueError("spatial_spread needs a map with positive mass")
    p = plane / mass
    yy, xx = np.mgrid[0:plane.shape[0], 0:plane.shape[1]].astype(np.float64)
    cy, cx = float((p * yy).sum()), float((p * xx).sum())
    return float((p * ((yy - cy) ** 2 + (xx - cx) ** 2)).sum())


def bucket_spreads(summary: SpeedBucketSummary) -> List[float | None]:
    return [None if b.empty else spatial_spread(b.mean_map) for b in summary.buckets]
