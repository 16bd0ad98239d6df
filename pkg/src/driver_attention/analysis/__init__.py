"""Speed buckets, threshold sweeps, hard subsequences and deviation overlays."""

from .hard_subsequences import HARD_CC_THRESHOLD, jaccard, merge_windows, select_hard_subsequences
from .overlays import deviation_overlay, export_pgm, export_ppm, max_normalize, overlay_image
from .report import run_analysis
from .semantics import category_rank_agreement, linear_thresholds, threshold_sweep
from .speed import bucket_label, bucket_spreads, sequence_mean_and_mode, spatial_spread, speed_bucket_maps

__all__ = [
    "HARD_CC_THRESHOLD",
    "bucket_label",
    "bucket_spreads",
    "category_rank_agreement",
    "deviation_overlay",
    "export_pgm",
    "export_ppm",
    "jaccard",
    "linear_thresholds",
    "max_normalize",
    "merge_windows",
    "overlay_image",
    "run_analysis",
    "select_hard_subsequences",
    "sequence_mean_and_mode",
    "spatial_spread",
    "speed_bucket_maps",
    "threshold_sweep",
]
