"""
Per-clip evaluation of a predictor over a split, and the metric report CSV.

Report layout: header comment lines (`# key: value`), then columns
sequence_id, clip_end_frame, cc, kl, hard, count. Per-clip rows carry the clip
end frame; aggregate rows carry MEAN or STD in clip_end_frame and the number
of clips in `count`, once per sequence, for `ALL` and for `ALL_HARD`.
Undefined values are written as NA.
"""

from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import List, Mapping, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..data.clips import SequenceData, SequenceStore
from ..data.split import ClipRef
from ..data.transforms import resize_bilinear
from ..models import Aggregate, ClipScore, HardSelection, MetricReport
from ..net.architecture import ModelParams
from ..net.coarse_fine import predict
from .baselines import BaselinePredictor
from .saliency import KL_CONVENTION, cc, kl

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["sequence_id", "clip_end_frame", "cc", "kl", "hard", "count"]
ALL = "ALL"
ALL_HARD = "ALL_HARD"


class Resampling(str, Enum):
    GROUND_TRUTH = "gt"  # ground truth resized to the prediction's resolution
    PREDICTION = "prediction"
    NONE = "none"


class ClipPredictor(Protocol):
    name: str

    def predict_clip(self, sequence: SequenceData, end_index: int) -> np.ndarray:
        ...


class StaticPredictor:
    """Adapts a baseline map to the per-clip predictor interface."""

    def __init__(self, baseline: BaselinePredictor) -> None:
        self.baseline = baseline
        self.name = baseline.kind.value

    def predict_clip(self, sequence: SequenceData, end_index: int) -> np.ndarray:
        return self.baseline.predict(sequence.resolution)


class ModelPredictor:
    def __init__(self, params: ModelParams) -> None:
        self.params = params
        self.name = params.architecture.value

    def predict_clip(self, sequence: SequenceData, end_index: int) -> np.ndarray:
        return predict(sequence.clip_frames(end_index), self.params)


class GroundTruthPredictor:
    """Echoes the ground truth; evaluates the metric pipeline itself."""
    name = "ground_truth"

    def predict_clip(self, sequence: SequenceData, end_index: int) -> np.ndarray:
        return sequence.maps[end_index]


def align(prediction: np.ndarray, target: np.ndarray, resampling: Resampling) -> Tuple[np.ndarray, np.ndarray]:
    if prediction.shape == target.shape:
        return prediction, target
    if resampling == Resampling.NONE:
        raise ValueError(
            f"prediction {prediction.shape} and ground truth {target.shape} differ and resampling is disabled"
        )
    if resampling == Resampling.GROUND_TRUTH:
        return prediction, resize_bilinear(target, prediction.shape[-2:])
    return resize_bilinear(prediction, target.shape[-2:]), target


def evaluate(
    predictor: ClipPredictor,
    store: SequenceStore,
    refs: Sequence[ClipRef],
    split_name: str = "test",
    resampling: Union[Resampling, str] = Resampling.GROUND_TRUTH,
    hard: Optional[Mapping[str, HardSelection]] = None,
    sigma_fraction: Optional[float] = None,
) -> MetricReport:
    """CC and KL for every clip in `refs`; rows are kept in (sequence, frame) order."""
    resampling = Resampling(resampling)
    rows: List[ClipScore] = []
    grids = set()
    for ref in sorted(refs, key=lambda r: (r.sequence_id, r.end_index)):
        sequence = store.get(ref.sequence_id)
        prediction, target = align(
            np.asarray(predictor.predict_clip(sequence, ref.end_index), dtype=np.float64),
            sequence.maps[ref.end_index],
            resampling,
        )
        grids.add("x".join(str(n) for n in target.shape[-2:]))
        selection = hard.get(ref.sequence_id) if hard else None
        rows.append(
            ClipScore(
                sequence_id=ref.sequence_id,
                clip_end_frame=ref.end_index,
                cc=cc(prediction, target),
                kl=kl(target, prediction),
                hard=bool(selection and selection.contains(ref.end_index)),
            )
        )
    undefined = sum(r.cc is None for r in rows)
    if undefined:
        logger.warning(f"{undefined} of {len(rows)} clips have undefined CC (constant map)")
    report = MetricReport(
        predictor=predictor.name,
        split=split_name,
        rows=rows,
        sigma_fraction=sigma_fraction,
        grid=grids.pop() if len(grids) == 1 else ("mixed" if grids else ""),
        resampling=resampling.value,
    )
    summary = report.summary
    logger.info(
        f"Evaluated {predictor.name} on {len(rows)} {split_name} clips: "
        f"CC {summary['cc_mean']}, KL {summary['kl_mean']}"
    )
    return report


def _aggregate_rows(label: str, cc_agg: Aggregate, kl_agg: Aggregate, count: int) -> List[list]:
    return [
        [label, "MEAN", cc_agg.mean, kl_agg.mean, None, count],
        [label, "STD", cc_agg.std, kl_agg.std, None, count],
    ]


def report_frame(report: MetricReport) -> pd.DataFrame:
    records: List[list] = [
        [r.sequence_id, str(r.clip_end_frame), r.cc, r.kl, int(r.hard), None]
        for r in report._select(None, False)
    ]
    for sequence_id in report.sequence_ids:
        count = len(report._select(sequence_id, False))
        records += _aggregate_rows(
            sequence_id, report.cc_summary(sequence_id), report.kl_summary(sequence_id), count
        )
    records += _aggregate_rows(ALL, report.cc_summary(), report.kl_summary(), len(report.rows))
    records += _aggregate_rows(
        ALL_HARD,
        report.cc_summary(hard_only=True),
        report.kl_summary(hard_only=True),
        len(report._select(None, True)),
    )
    frame = pd.DataFrame(records, columns=REPORT_COLUMNS)
    frame[["cc", "kl"]] = frame[["cc", "kl"]].astype(np.float64)
    for column in ("hard", "count"):
        frame[column] = pd.array(frame[column].tolist(), dtype="Int64")
    return frame


def write_report(report: MetricReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = [
        f"# kl: {KL_CONVENTION}",
        f"# sigma_fraction: {'NA' if report.sigma_fraction is None else report.sigma_fraction}",
        "# std: population",
        f"# predictor: {report.predictor}",
        f"# split: {report.split}",
        f"# grid: {report.grid or 'NA'}",
        f"# resampling: {report.resampling or 'NA'}",
    ]
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(header) + "\n")
        report_frame(report).to_csv(fh, index=False, na_rep="NA", float_format="%.10f")
    logger.info(f"Wrote metric report ({len(report.rows)} clips) to {path}")
    return path


def read_report(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", na_values=["NA"], keep_default_na=False, dtype={"sequence_id": str, "clip_end_frame": str})


def validation_cc(params: ModelParams, store: SequenceStore, refs: Sequence[ClipRef], max_clips: int = 32) -> Optional[float]:
    """Mean CC of the model over an evenly strided subset of `refs`."""
    if not refs:
        return None
    ordered = sorted(refs, key=lambda r: (r.sequence_id, r.end_index))
    stride = max(1, len(ordered) // max_clips)
    report = evaluate(ModelPredictor(params), store, ordered[::stride][:max_clips], split_name="validation")
    return report.cc_summary().mean
