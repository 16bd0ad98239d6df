"""CC, KL, Kendall tau, baselines and split evaluation."""

from .saliency import KL_CONVENTION, KL_EPSILON, cc, kendall_tau, kl
from .baselines import DEFAULT_SIGMA_FRACTION, BaselinePredictor, gaussian_baseline, mean_gt_baseline
from .evaluate import (
    GroundTruthPredictor,
    ModelPredictor,
    Resampling,
    StaticPredictor,
    evaluate,
    read_report,
    report_frame,
    validation_cc,
    write_report,
)

__all__ = [
    "DEFAULT_SIGMA_FRACTION",
    "KL_CONVENTION",
    "KL_EPSILON",
    "BaselinePredictor",
    "GroundTruthPredictor",
    "ModelPredictor",
    "Resampling",
    "StaticPredictor",
    "cc",
    "evaluate",
    "gaussian_baseline",
    "kendall_tau",
    "kl",
    "mean_gt_baseline",
    "read_report",
    "report_frame",
    "validation_cc",
    "write_report",
]
