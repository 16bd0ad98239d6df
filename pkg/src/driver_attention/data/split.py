"""Train / validation / test clip selection."""

from __future__ import annotations

import logging
from typing import Collection, Dict, List, Mapping, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..models import CLIP_LENGTH

logger = logging.getLogger(__name__)

VALIDATION_FRAMES = 500
MIN_FULL_VALIDATION_LENGTH = VALIDATION_FRAMES + CLIP_LENGTH


class ClipRef(BaseModel):
    model_config = ConfigDict(frozen=True)

    sequence_id: str
    end_index: int = Field(ge=CLIP_LENGTH - 1)


class DataSplit(BaseModel):
    train: List[ClipRef] = Field(default_factory=list)
    validation: List[ClipRef] = Field(default_factory=list)
    test: List[ClipRef] = Field(default_factory=list)
    validation_frames: Dict[str, Tuple[int, int]] = Field(default_factory=dict)

    def refs(self, name: str) -> List[ClipRef]:
        if name not in ("train", "validation", "test"):
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)

    @property
    def train_sequences(self) -> List[str]:
        return list(self.validation_frames)

    @property
    def test_sequences(self) -> List[str]:
        return sorted({r.sequence_id for r in self.test})


def validation_range(length: int, sequence_id: str = "") -> Tuple[int, int]:
    """The 500 central frames [L/2−250, L/2+250), or the central third of a short sequence."""
    if length >= MIN_FULL_VALIDATION_LENGTH:
        centre = length // 2
        half = VALIDATION_FRAMES // 2
        return centre - half, centre + half
    logger.warning(
        f"Sequence {sequence_id or '?'} has {length} frames (< {MIN_FULL_VALIDATION_LENGTH}); "
        f"validation shrinks to the central third"
    )
    return length // 3, (2 * length) // 3


def frame_assignment(length: int, sequence_id: str = "") -> np.ndarray:
    """Per-frame label: True for validation, False for training."""
    lo, hi = validation_range(length, sequence_id)
    flags = np.zeros(length, dtype=bool)
    flags[lo:hi] = True
    return flags


def split(lengths: Mapping[str, int], test_ids: Collection[str]) -> DataSplit:
    """Clip end indices per split; `lengths` maps sequence id to frame count."""
    unknown = set(test_ids) - set(lengths)
    if unknown:
        raise ValueError(f"test sequences not in the dataset: {sorted(unknown)}")
    result = DataSplit()
    for sequence_id in sorted(lengths):
        length = int(lengths[sequence_id])
        ends = range(CLIP_LENGTH - 1, length)
        if sequence_id in test_ids:
            result.test.extend(ClipRef(sequence_id=sequence_id, end_index=e) for e in ends)
            continue
        lo, hi = validation_range(length, sequence_id)
        result.validation_frames[sequence_id] = (lo, hi)
        for e in ends:
            start = e - CLIP_LENGTH + 1
            if e < lo or start >= hi:
                result.train.append(ClipRef(sequence_id=sequence_id, end_index=e))
            elif start >= lo and e < hi:
                result.validation.append(ClipRef(sequence_id=sequence_id, end_index=e))
    logger.info(
        f"Split: {len(result.train)} train, {len(result.validation)} validation, {len(result.test)} test clips"
    )
    return result
