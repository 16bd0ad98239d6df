"""Runs every analysis over a dataset and writes one output file per analysis."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..data.clips import SequenceData, SequenceStore
from ..data.transforms import resize_bilinear
from ..models import CATEGORIES, CLIP_LENGTH, CategorySweep, Landscape
from ..net.architecture import ModelParams
from ..net.coarse_fine import predict
from .hard_subsequences import jaccard, select_hard_subsequences
from .overlays import deviation_overlay, export_pgm, export_ppm, max_normalize, overlay_image
from .semantics import category_rank_agreement, threshold_sweep
from .speed import bucket_label, bucket_spreads, sequence_mean_and_mode, speed_bucket_maps

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10f"


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, na_rep="NA", float_format=FLOAT_FORMAT)
    return path


def bucket_table(sequences: Sequence[SequenceData], out_dir: Path) -> Path:
    maps = (m for s in sequences for m in s.maps)
    records = (r for s in sequences for r in s.records)
    summary = speed_bucket_maps(maps, records)
    rows = []
    for bucket, spread in zip(summary.buckets, bucket_spreads(summary)):
        rows.append(
            [bucket.label, bucket.low_kmh, bucket.high_kmh, bucket.count, spread, bucket.empty]
            + [bucket.landscape_counts[l.value] for l in Landscape]
        )
        if not bucket.empty:
            export_pgm(bucket.mean_map, out_dir / f"bucket_{bucket.label}.pgm")
    columns = ["bucket", "low_kmh", "high_kmh", "count", "spread", "empty"] + [l.value for l in Landscape]
    return _write_csv(pd.DataFrame(rows, columns=columns), out_dir / "speed_buckets.csv")


def mode_table(sequences: Sequence[SequenceData], out_dir: Path) -> Path:
    rows = []
    for sequence in sequences:
        mean, (y, x) = sequence_mean_and_mode(list(sequence.maps))
        export_pgm(mean, out_dir / f"mean_{sequence.sequence_id}.pgm")
        vp_y = vp_x = distance = None
        if sequence.truth is not None:
            vp_y, vp_x = float(sequence.truth["vp_y"].mean()), float(sequence.truth["vp_x"].mean())
            distance = float(np.hypot(y - vp_y, x - vp_x))
        rows.append([sequence.sequence_id, y, x, vp_y, vp_x, distance])
    columns = ["sequence_id", "mode_y", "mode_x", "vp_y", "vp_x", "distance"]
    return _write_csv(pd.DataFrame(rows, columns=columns), out_dir / "sequence_modes.csv")


def sweep_table(sweep: CategorySweep, path: Path) -> Path:
    frame = pd.DataFrame(sweep.proportions, columns=list(CATEGORIES))
    frame.insert(0, "empty", sweep.empty)
    frame.insert(0, "threshold", sweep.thresholds)
    return _write_csv(frame, path)


def trend_table(sweep: CategorySweep, path: Path) -> Path:
    rows = [[c, sweep.slopes[c], sweep.trend(c)] for c in CATEGORIES]
    return _write_csv(pd.DataFrame(rows, columns=["category", "slope", "trend"]), path)


def hard_tables(sequences: Sequence[SequenceData], out_dir: Path, window: int) -> List[Path]:
    windows, overlap = [], []
    for sequence in sequences:
        selection = select_hard_subsequences(list(sequence.maps), window=window)
        windows += [[sequence.sequence_id, start, end] for start, end in selection.windows]
        planted = sequence.events()
        overlap.append(
            [
                sequence.sequence_id,
                selection.unselectable,
                len(selection.frames()),
                int(planted.sum()),
                jaccard(selection, planted) if sequence.truth is not None else None,
            ]
        )
    return [
        _write_csv(pd.DataFrame(windows, columns=["sequence_id", "start", "end"]), out_dir / "hard_windows.csv"),
        _write_csv(
            pd.DataFrame(overlap, columns=["sequence_id", "unselectable", "selected_frames", "planted_frames", "jaccard"]),
            out_dir / "hard_jaccard.csv",
        ),
    ]


def predicted_maps(
    sequence: SequenceData, params: ModelParams, stride: int
) -> List[tuple]:
    """(frame index, prediction at the sequence resolution, max-normalized) every `stride` frames."""
    out = []
    for end in range(CLIP_LENGTH - 1, len(sequence), stride):
        prediction = predict(sequence.clip_frames(end), params)
        out.append((end, max_normalize(resize_bilinear(prediction, sequence.resolution))))
    return out


def prediction_tables(
    sequences: Sequence[SequenceData],
    params: ModelParams,
    out_dir: Path,
    n_thresholds: int,
    stride: int,
    gt_sweep: Optional[CategorySweep],
) -> List[Path]:
    paths: List[Path] = []
    by_bucket: Dict[str, Dict[str, list]] = {}
    pred_maps, pred_segs = [], []
    for sequence in sequences:
        for end, prediction in predicted_maps(sequence, params, stride):
            label = bucket_label(sequence.records[end].speed_kmh)
            entry = by_bucket.setdefault(label, {"prediction": [], "truth": []})
            entry["prediction"].append(prediction[0])
            entry["truth"].append(sequence.maps[end][0])
            if sequence.segmentation is not None:
                pred_maps.append(prediction)
                pred_segs.append(sequence.segmentation[end])

    rows = []
    for label in sorted(by_bucket):
        mean_prediction = max_normalize(np.mean(by_bucket[label]["prediction"], axis=0))
        mean_truth = max_normalize(np.mean(by_bucket[label]["truth"], axis=0))
        overlay = deviation_overlay(mean_prediction, mean_truth)
        export_ppm(overlay_image(mean_truth, overlay), out_dir / f"overlay_{label}.ppm")
        export_pgm(mean_prediction, out_dir / f"prediction_{label}.pgm")
        rows.append(
            [label, len(by_bucket[label]["prediction"]), int(overlay.precision_error.sum()), int(overlay.recall_error.sum())]
        )
    paths.append(
        _write_csv(
            pd.DataFrame(rows, columns=["bucket", "clips", "precision_pixels", "recall_pixels"]),
            out_dir / "deviation_overlays.csv",
        )
    )
    if gt_sweep is not None and pred_maps:
        pred_sweep = threshold_sweep(pred_maps, pred_segs, n_thresholds)
        paths.append(sweep_table(pred_sweep, out_dir / "prediction_sweep.csv"))
        tau = category_rank_agreement(gt_sweep, pred_sweep)
        paths.append(_write_csv(pd.DataFrame([[tau]], columns=["kendall_tau"]), out_dir / "rank_agreement.csv"))
    return paths


def run_analysis(
    store: SequenceStore,
    out_dir: Path,
    sequence_ids: Optional[Sequence[str]] = None,
    n_thresholds: int = 10,
    window: int = CLIP_LENGTH,
    params: Optional[ModelParams] = None,
    prediction_stride: int = 8,
) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sequences = [store.get(s) for s in (sequence_ids or store.sequence_ids)]
    paths = [bucket_table(sequences, out_dir), mode_table(sequences, out_dir)]

    gt_sweep = None
    if all(s.segmentation is not None for s in sequences):
        gt_sweep = threshold_sweep(
            (m for s in sequences for m in s.maps),
            (g for s in sequences for g in s.segmentation),
            n_thresholds,
        )
        paths += [sweep_table(gt_sweep, out_dir / "threshold_sweep.csv"), trend_table(gt_sweep, out_dir / "threshold_trends.csv")]
    else:
        logger.warning("Segmentation maps missing; threshold sweep skipped")

    paths += hard_tables(sequences, out_dir, window)
    if params is not None:
        paths += prediction_tables(sequences, params, out_dir, n_thresholds, prediction_stride, gt_sweep)
    logger.info(f"Analysis of {len(sequences)} sequences written to {out_dir} ({len(paths)} tables)")
    return paths
