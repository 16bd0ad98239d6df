"""
On-disk sequence layout and in-memory sequences.

    <root>/manifest.csv                 sequence_id, landscape, frames, split, csv_path
    <root>/<seq>/sequence.csv           frame_index, speed_kmh, landscape, frame_path, map_path, seg_path
    <root>/<seq>/truth.csv              frame_index, vp_y, vp_x, event   (synthetic data only)
    <root>/<seq>/frames|maps|seg/*.drvt one container per frame
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..models import CLIP_LENGTH, FrameRecord, Landscape, VideoClip
from .tensor_io import PathLike, read_tensor, write_tensor

logger = logging.getLogger(__name__)

MANIFEST = "manifest.csv"
SEQUENCE_CSV = "sequence.csv"
TRUTH_CSV = "truth.csv"
MANIFEST_COLUMNS = ["sequence_id", "landscape", "frames", "split", "csv_path"]
SEQUENCE_COLUMNS = ["frame_index", "speed_kmh", "landscape", "frame_path", "map_path", "seg_path"]
TRUTH_COLUMNS = ["frame_index", "vp_y", "vp_x", "event"]


@dataclass
class SequenceData:
    """One driving sequence held in memory (frames T×3×H×W, maps T×1×H×W)."""
    sequence_id: str
    landscape: Landscape
    frames: np.ndarray
    maps: np.ndarray
    records: List[FrameRecord] = field(default_factory=list)
    segmentation: Optional[np.ndarray] = None  # T×H×W uint8
    truth: Optional[pd.DataFrame] = None

    def __post_init__(self) -> None:
        if self.frames.ndim != 4 or self.frames.shape[1] != 3:
            raise ValueError(f"{self.sequence_id}: frames must be T×3×H×W, got {self.frames.shape}")
        if self.maps.shape != (self.frames.shape[0], 1) + self.frames.shape[2:]:
            raise ValueError(f"{self.sequence_id}: maps {self.maps.shape} do not match frames {self.frames.shape}")
        if self.segmentation is not None and self.segmentation.shape != (self.frames.shape[0],) + self.frames.shape[2:]:
            raise ValueError(f"{self.sequence_id}: segmentation {self.segmentation.shape} does not match frames")

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def resolution(self) -> tuple:
        return tuple(self.frames.shape[2:])

    @property
    def speeds(self) -> np.ndarray:
        return np.array([r.speed_kmh for r in self.records], dtype=np.float64)

    def events(self) -> np.ndarray:
        """Planted event flags per frame (all False without truth)."""
        if self.truth is None:
            return np.zeros(len(self), dtype=bool)
        return self.truth.sort_values("frame_index")["event"].to_numpy(dtype=bool)

    def clip_frames(self, end_index: int) -> np.ndarray:
        """Frames end_index−15..end_index as 3×16×H×W."""
        if end_index < CLIP_LENGTH - 1 or end_index >= len(self):
            raise IndexError(
                f"{self.sequence_id}: clip end {end_index} outside [{CLIP_LENGTH - 1}, {len(self) - 1}]"
            )
        window = self.frames[end_index - CLIP_LENGTH + 1:end_index + 1]
        return np.ascontiguousarray(window.transpose(1, 0, 2, 3))


def make_clip(sequence: SequenceData, end_index: int) -> VideoClip:
    return VideoClip(
        frames=sequence.clip_frames(end_index),
        sequence_id=sequence.sequence_id,
        end_index=end_index,
    )


def _optional_path(value) -> Optional[str]:
    if value is None or (isinstance(value, float) and np.isnan(value)) or value == "":
        return None
    return str(value)


def load_sequence(directory: PathLike, sequence_id: Optional[str] = None, with_segmentation: bool = True) -> SequenceData:
    directory = Path(directory)
    csv_path = directory / SEQUENCE_CSV
    if not csv_path.exists():
        raise FileNotFoundError(f"no {SEQUENCE_CSV} in {directory}")
    df = pd.read_csv(csv_path, keep_default_na=True).sort_values("frame_index")
    missing = set(SEQUENCE_COLUMNS) - set(df.columns)
    if missing:
        raise ValueError(f"{csv_path}: missing columns {sorted(missing)}")
    records = [
        FrameRecord(
            frame_index=int(row.frame_index),
            speed_kmh=float(row.speed_kmh),
            landscape=Landscape(row.landscape),
            frame_path=str(row.frame_path),
            map_path=str(row.map_path),
            seg_path=_optional_path(row.seg_path),
        )
        for row in df.itertuples(index=False)
    ]
    if [r.frame_index for r in records] != list(range(len(records))):
        raise ValueError(f"{csv_path}: frame indices must run 0..{len(records) - 1} without gaps")
    landscapes = {r.landscape for r in records}
    if len(landscapes) != 1:
        raise ValueError(f"{csv_path}: a sequence must have a single landscape, got {sorted(l.value for l in landscapes)}")

    frames = np.stack([read_tensor(directory / r.frame_path) for r in records]).astype(np.float64)
    maps = np.stack([read_tensor(directory / r.map_path) for r in records]).astype(np.float64)
    segmentation = None
    if with_segmentation and all(r.seg_path and (directory / r.seg_path).is_file() for r in records):
        segmentation = np.stack([read_tensor(directory / r.seg_path) for r in records]).astype(np.uint8)
    elif with_segmentation:
        logger.warning(f"{directory.name}: segmentation maps missing for some frames")

    truth = None
    if (directory / TRUTH_CSV).exists():
        truth = pd.read_csv(directory / TRUTH_CSV)

    return SequenceData(
        sequence_id=sequence_id or directory.name,
        landscape=records[0].landscape,
        frames=frames,
        maps=maps,
        records=records,
        segmentation=segmentation,
        truth=truth,
    )


def write_sequence(root: PathLike, sequence: SequenceData) -> Path:
    """Write one sequence in the on-disk layout; returns its CSV path."""
    directory = Path(root) / sequence.sequence_id
    rows = []
    for t in range(len(sequence)):
        name = f"{t:06d}.drvt"
        frame_path, map_path = f"frames/{name}", f"maps/{name}"
        write_tensor(directory / frame_path, sequence.frames[t], "float32")
        write_tensor(directory / map_path, sequence.maps[t], "float32")
        seg_path = ""
        if sequence.segmentation is not None:
            seg_path = f"seg/{name}"
            write_tensor(directory / seg_path, sequence.segmentation[t], "uint8")
        speed = sequence.records[t].speed_kmh if sequence.records else 0.0
        rows.append([t, speed, sequence.landscape.value, frame_path, map_path, seg_path])
    csv_path = directory / SEQUENCE_CSV
    pd.DataFrame(rows, columns=SEQUENCE_COLUMNS).to_csv(csv_path, index=False, float_format="%.6f")
    if sequence.truth is not None:
        sequence.truth[TRUTH_COLUMNS].to_csv(directory / TRUTH_CSV, index=False, float_format="%.6f")
    return csv_path


def write_manifest(root: PathLike, sequences: Sequence[SequenceData], test_ids: Sequence[str]) -> pd.DataFrame:
    rows = [
        [s.sequence_id, s.landscape.value, len(s), "test" if s.sequence_id in test_ids else "train", f"{s.sequence_id}/{SEQUENCE_CSV}"]
        for s in sequences
    ]
    manifest = pd.DataFrame(rows, columns=MANIFEST_COLUMNS)
    manifest.to_csv(Path(root) / MANIFEST, index=False)
    return manifest


class SequenceStore:
    """All sequences of a dataset root, loaded lazily and cached."""

    def __init__(self, root: PathLike, with_segmentation: bool = True) -> None:
        self.root = Path(root)
        manifest_path = self.root / MANIFEST
        if not manifest_path.exists():
            raise FileNotFoundError(f"dataset manifest not found: {manifest_path}")
        self.manifest = pd.read_csv(manifest_path, dtype={"sequence_id": str})
        missing = set(MANIFEST_COLUMNS) - set(self.manifest.columns)
        if missing:
            raise ValueError(f"{manifest_path}: missing columns {sorted(missing)}")
        self.with_segmentation = with_segmentation
        self._cache: Dict[str, SequenceData] = {}

    @property
    def sequence_ids(self) -> List[str]:
        return list(self.manifest["sequence_id"])

    def default_test_ids(self) -> List[str]:
        return list(self.manifest.loc[self.manifest["split"] == "test", "sequence_id"])

    def get(self, sequence_id: str) -> SequenceData:
        if sequence_id not in self._cache:
            row = self.manifest.loc[self.manifest["sequence_id"] == sequence_id]
            if row.empty:
                raise KeyError(f"unknown sequence {sequence_id!r}")
            csv_path = self.root / str(row.iloc[0]["csv_path"])
            sequence = load_sequence(csv_path.parent, sequence_id, self.with_segmentation)
            if len(sequence) != int(row.iloc[0]["frames"]):
                raise ValueError(
                    f"{sequence_id}: manifest lists {int(row.iloc[0]['frames'])} frames, CSV has {len(sequence)}"
                )
            self._cache[sequence_id] = sequence
            logger.debug(f"Loaded sequence {sequence_id} ({len(sequence)} frames)")
        return self._cache[sequence_id]

    def __iter__(self) -> Iterator[SequenceData]:
        for sequence_id in self.sequence_ids:
            yield self.get(sequence_id)

    def __len__(self) -> int:
        return len(self.manifest)
