"""Clips, crops, splits, the tensor container and the synthetic generator."""

from .clips import SequenceData, SequenceStore, load_sequence, make_clip, write_sequence
from .dataset import ClipDataset, default_policy
from .split import ClipRef, DataSplit, frame_assignment, split, validation_range
from .synth import SynthConfig, synth_generate, write_dataset
from .tensor_io import TensorFormatError, read_indexed, read_tensor, write_indexed, write_tensor
from .transforms import (
    crop_policy_aggressive,
    crop_policy_mild,
    crop_sample,
    flip_horizontal,
    mirror,
    resize_bilinear,
)

__all__ = [
    "ClipDataset",
    "ClipRef",
    "DataSplit",
    "SequenceData",
    "SequenceStore",
    "SynthConfig",
    "TensorFormatError",
    "crop_policy_aggressive",
    "crop_policy_mild",
    "crop_sample",
    "default_policy",
    "flip_horizontal",
    "frame_assignment",
    "load_sequence",
    "make_clip",
    "mirror",
    "read_indexed",
    "read_tensor",
    "resize_bilinear",
    "split",
    "synth_generate",
    "validation_range",
    "write_dataset",
    "write_indexed",
    "write_sequence",
    "write_tensor",
]
