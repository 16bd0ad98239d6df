from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CLIP_LENGTH = 16

# Semantic categories of the segmentation maps; the position is the uint8 label id.
CATEGORIES: Tuple[str, ...] = (
    "road",
    "sidewalk",
    "buildings",
    "traffic_signs",
    "trees",
    "road_limits",
    "sky",
    "people",
    "vehicles",
    "cycles",
)

# Half-open speed ranges in km/h.
SPEED_BUCKETS: Tuple[Tuple[str, float, float], ...] = (
    ("a", 0.0, 10.0),
    ("b", 10.0, 30.0),
    ("c", 30.0, 50.0),
    ("d", 50.0, 70.0),
    ("e", 70.0, float("inf")),
)


class Architecture(str, Enum):
    COARSE = "coarse"
    COARSE_FINE = "coarse_fine"


class Landscape(str, Enum):
    DOWNTOWN = "downtown"
    COUNTRYSIDE = "countryside"
    HIGHWAY = "highway"


class CropPolicy(str, Enum):
    MILD = "mild"
    AGGRESSIVE = "aggressive"


class PredictorKind(str, Enum):
    MODEL = "model"
    GAUSSIAN = "gaussian"
    MEAN_GT = "mean_gt"


class ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class VideoClip(ArrayModel):
    """16 consecutive RGB frames, 3×16×H×W, ending at `end_index`."""
    frames: np.ndarray
    sequence_id: str = ""
    end_index: int = Field(default=CLIP_LENGTH - 1, ge=CLIP_LENGTH - 1)

    @field_validator("frames")
    @classmethod
    def _check_frames(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 4 or v.shape[0] != 3 or v.shape[1] != CLIP_LENGTH:
            raise ValueError(f"clip frames must be 3×{CLIP_LENGTH}×H×W, got {v.shape}")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("clip values must lie in [0, 1]")
        return v

    @property
    def last_frame(self) -> np.ndarray:
        return self.frames[:, -1]


class AttentionMap(ArrayModel):
    """Single-channel attention grid 1×H×W with values in [0, 1]."""
    grid: np.ndarray

    @field_validator("grid")
    @classmethod
    def _check_grid(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 3 or v.shape[0] != 1:
            raise ValueError(f"attention map must be 1×H×W, got {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("attention map values must be finite and within [0, 1]")
        return v

    @property
    def plane(self) -> np.ndarray:
        return self.grid[0]


class FrameRecord(BaseModel):
    """One row of a sequence CSV."""
    frame_index: int = Field(ge=0)
    speed_kmh: float = Field(ge=0.0)
    landscape: Landscape
    frame_path: str
    map_path: str
    seg_path: Optional[str] = None


class CropSample(ArrayModel):
    """Everything one training example feeds to the network."""
    cropped_clip: np.ndarray
    cropped_map: np.ndarray
    resized_clip: np.ndarray
    full_map: np.ndarray
    last_frame: np.ndarray
    origin: Tuple[int, int]
    source_size: int
    mirrored: bool = False

    @model_validator(mode="after")
    def _check_window(self) -> "CropSample":
        size = self.cropped_clip.shape[-1]
        y, x = self.origin
        if not (0 <= y <= self.source_size - size and 0 <= x <= self.source_size - size):
            raise ValueError(f"crop origin {self.origin} leaves the {self.source_size}² source")
        if self.cropped_map.shape[-2:] != self.cropped_clip.shape[-2:]:
            raise ValueError("cropped map and cropped clip differ in size")
        return self


class ClipScore(BaseModel):
    sequence_id: str
    clip_end_frame: int
    cc: Optional[float] = None
    kl: float
    hard: bool = False


class Aggregate(BaseModel):
    mean: Optional[float] = None
    std: Optional[float] = None
    count: int = 0


class MetricReport(BaseModel):
    """Per-clip CC/KL with population mean ± std aggregates."""
    predictor: str
    split: str
    rows: List[ClipScore] = Field(default_factory=list)
    sigma_fraction: Optional[float] = None
    grid: str = ""
    resampling: str = ""

    @staticmethod
    def _aggregate(values: List[Optional[float]]) -> Aggregate:
        defined = np.array([v for v in values if v is not None], dtype=np.float64)
        if defined.size == 0:
            return Aggregate(count=0)
        return Aggregate(mean=float(defined.mean()), std=float(defined.std()), count=int(defined.size))

    def _select(self, sequence_id: Optional[str], hard_only: bool) -> List[ClipScore]:
        # fixed ordering so the reduction does not depend on row order
        chosen = [
            r for r in self.rows
            if (sequence_id is None or r.sequence_id == sequence_id) and (r.hard or not hard_only)
        ]
        return sorted(chosen, key=lambda r: (r.sequence_id, r.clip_end_frame))

    def cc_summary(self, sequence_id: Optional[str] = None, hard_only: bool = False) -> Aggregate:
        return self._aggregate([r.cc for r in self._select(sequence_id, hard_only)])

    def kl_summary(self, sequence_id: Optional[str] = None, hard_only: bool = False) -> Aggregate:
        return self._aggregate([r.kl for r in self._select(sequence_id, hard_only)])

    @property
    def sequence_ids(self) -> List[str]:
        return sorted({r.sequence_id for r in self.rows})

    @property
    def summary(self) -> Dict[str, Optional[float]]:
        cc, kl = self.cc_summary(), self.kl_summary()
        hard_cc, hard_kl = self.cc_summary(hard_only=True), self.kl_summary(hard_only=True)
        return {
            "clips": len(self.rows),
            "cc_mean": cc.mean,
            "cc_std": cc.std,
            "kl_mean": kl.mean,
            "kl_std": kl.std,
            "hard_clips": len(self._select(None, True)),
            "hard_cc_mean": hard_cc.mean,
            "hard_kl_mean": hard_kl.mean,
        }


class BaselineKind(str, Enum):
    CENTERED_GAUSSIAN = "centered_gaussian"
    MEAN_TRAIN_GT = "mean_train_gt"


class SpeedBucket(ArrayModel):
    label: str
    low_kmh: float
    high_kmh: float
    count: int = 0
    mean_map: Optional[np.ndarray] = None
    landscape_counts: Dict[str, int] = Field(
        default_factory=lambda: {landscape.value: 0 for landscape in Landscape}
    )

    @property
    def empty(self) -> bool:
        return self.count == 0

    def contains(self, speed_kmh: float) -> bool:
        return self.low_kmh <= speed_kmh < self.high_kmh


class SpeedBucketSummary(ArrayModel):
    buckets: List[SpeedBucket]

    def bucket(self, label: str) -> SpeedBucket:
        for b in self.buckets:
            if b.label == label:
                return b
        raise KeyError(label)


class CategorySweep(ArrayModel):
    """Category proportions inside the attention mask at each threshold."""
    thresholds: List[float]
    proportions: np.ndarray  # len(thresholds) × len(CATEGORIES)
    empty: List[bool]
    slopes: Dict[str, Optional[float]]

    def category_means(self) -> Dict[str, float]:
        rows = self.proportions[[i for i, e in enumerate(self.empty) if not e]]
        if rows.size == 0:
            return {c: 0.0 for c in CATEGORIES}
        means = rows.mean(axis=0)
        return {c: float(means[i]) for i, c in enumerate(CATEGORIES)}

    def trend(self, category: str) -> str:
        slope = self.slopes.get(category)
        if slope is None or slope == 0.0:
            return "flat"
        return "upward" if slope > 0 else "downward"


class DeviationOverlay(ArrayModel):
    precision_error: np.ndarray
    recall_error: np.ndarray

    @model_validator(mode="after")
    def _check_disjoint(self) -> "DeviationOverlay":
        if np.any(self.precision_error & self.recall_error):
            raise ValueError("precision and recall error sets overlap")
        return self


class HardSelection(BaseModel):
    """Windows whose maps correlate poorly with the sequence mean."""
    windows: List[Tuple[int, int]] = Field(default_factory=list)  # [start, end)
    window_cc: List[Optional[float]] = Field(default_factory=list)
    unselectable: bool = False

    def frames(self) -> List[int]:
        return [f for start, end in self.windows for f in range(start, end)]

    def contains(self, frame_index: int) -> bool:
        return any(start <= frame_index < end for start, end in self.windows)
