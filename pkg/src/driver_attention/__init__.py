"""
Driver attention prediction: a coarse-to-fine spatiotemporal network trained
on 16-frame clips, its baselines and metrics, and the analyses of where
drivers look.
"""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, load_config
from .models import (
    CATEGORIES,
    CLIP_LENGTH,
    SPEED_BUCKETS,
    Architecture,
    AttentionMap,
    CropPolicy,
    MetricReport,
    PredictorKind,
    VideoClip,
)

__all__ = [
    "CATEGORIES",
    "CLIP_LENGTH",
    "SPEED_BUCKETS",
    "Architecture",
    "AttentionMap",
    "ConfigError",
    "CropPolicy",
    "MetricReport",
    "PredictorKind",
    "RunConfig",
    "VideoClip",
    "load_config",
]
