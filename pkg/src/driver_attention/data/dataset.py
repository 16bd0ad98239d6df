"""Seeded stream of training samples drawn from a clip list."""

from __future__ import annotations

import logging
from typing import Iterator, List, Optional, Sequence

import numpy as np

from ..models import Architecture, CropPolicy, CropSample
from .clips import SequenceStore
from .split import ClipRef
from .transforms import crop_sample, mirror_with_flag

logger = logging.getLogger(__name__)


def default_policy(architecture: Architecture) -> CropPolicy:
    return CropPolicy.MILD if architecture == Architecture.COARSE else CropPolicy.AGGRESSIVE


class ClipDataset:
    """Draws clips uniformly with replacement, mirrors, then crops.

    The whole stream is a function of `seed`: two datasets built with the same
    arguments yield identical samples.
    """

    def __init__(
        self,
        store: SequenceStore,
        refs: Sequence[ClipRef],
        clip_size: int,
        refine_size: int,
        policy: CropPolicy = CropPolicy.AGGRESSIVE,
        seed: int = 0,
        augment: bool = True,
    ) -> None:
        if not refs:
            raise ValueError("ClipDataset needs at least one clip")
        self.store = store
        self.refs: List[ClipRef] = list(refs)
        self.clip_size = clip_size
        self.refine_size = refine_size
        self.policy = policy
        self.augment = augment
        self.rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self.refs)

    def sample_at(self, ref: ClipRef, rng: Optional[np.random.Generator] = None) -> CropSample:
        rng = rng if rng is not None else self.rng
        sequence = self.store.get(ref.sequence_id)
        clip = sequence.clip_frames(ref.end_index)
        attention_map = sequence.maps[ref.end_index]
        mirrored = False
        if self.augment:
            clip, attention_map, mirrored = mirror_with_flag(clip, attention_map, rng)
        return crop_sample(
            clip, attention_map, rng, self.policy, self.clip_size, self.refine_size, mirrored=mirrored
        )

    def sample(self) -> CropSample:
        ref = self.refs[int(self.rng.integers(len(self.refs)))]
        return self.sample_at(ref)

    def batch(self, batch_size: int) -> List[CropSample]:
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        return [self.sample() for _ in range(batch_size)]

    def batches(self, batch_size: int, count: int) -> Iterator[List[CropSample]]:
        for _ in range(count):
            yield self.batch(batch_size)
