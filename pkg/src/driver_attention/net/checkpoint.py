"""Checkpoints: parameters (and optionally Adam state) in the indexed tensor container."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..data.tensor_io import read_indexed, write_indexed
from ..models import Architecture
from ..tensor import Adam, AdamState
from .architecture import ModelParams, NetConfig

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "driver-attention-checkpoint"
FLOAT32_BYTES = 4
ADAM_M, ADAM_V = "adam/m/", "adam/v/"


class CheckpointError(ValueError):
    """A checkpoint does not match the requested architecture or its own index."""


class TensorEntry(BaseModel):
    name: str
    shape: List[int]
    offset: int = Field(ge=0)  # bytes into the payload


class AdamMeta(BaseModel):
    step: int = Field(ge=0)
    learning_rate: float
    beta1: float
    beta2: float
    epsilon: float


class CheckpointIndex(BaseModel):
    format: Literal["driver-attention-checkpoint"] = CHECKPOINT_FORMAT
    architecture: Architecture
    net: NetConfig
    adam: Optional[AdamMeta] = None
    tensors: List[TensorEntry]


def save_checkpoint(path: Union[str, Path], params: ModelParams, optimizer: Optional[Adam] = None) -> Path:
    path = Path(path)
    arrays: Dict[str, np.ndarray] = dict(params.arrays())
    adam = None
    if optimizer is not None and optimizer.states:
        for name, state in optimizer.states.items():
            arrays[ADAM_M + name] = state.m
            arrays[ADAM_V + name] = state.v
        adam = AdamMeta(
            step=optimizer.step_count,
            learning_rate=optimizer.learning_rate,
            beta1=optimizer.beta1,
            beta2=optimizer.beta2,
            epsilon=optimizer.epsilon,
        )
    entries, chunks, offset = [], [], 0
    for name, arr in arrays.items():
        entries.append(TensorEntry(name=name, shape=list(arr.shape), offset=offset))
        chunks.append(np.asarray(arr, dtype=np.float32).reshape(-1))
        offset += arr.size * FLOAT32_BYTES
    index = CheckpointIndex(architecture=params.architecture, net=params.net, adam=adam, tensors=entries)
    flat = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.float32)
    write_indexed(path, flat, index.model_dump(mode="json"))
    logger.info(f"Saved {params.architecture.value} checkpoint ({len(params)} tensors) to {path}")
    return path


def _read(path: Union[str, Path]) -> Tuple[CheckpointIndex, Dict[str, np.ndarray]]:
    flat, raw = read_indexed(path)
    try:
        index = CheckpointIndex.model_validate(raw)
    except ValidationError as e:
        raise CheckpointError(f"{path}: invalid checkpoint index: {e}") from e
    payload_bytes = flat.size * FLOAT32_BYTES
    arrays: Dict[str, np.ndarray] = {}
    for entry in index.tensors:
        count = int(np.prod(entry.shape, dtype=np.int64))
        if entry.offset % FLOAT32_BYTES or entry.offset + count * FLOAT32_BYTES > payload_bytes:
            raise CheckpointError(f"{path}: tensor {entry.name} lies outside the payload")
        start = entry.offset // FLOAT32_BYTES
        arrays[entry.name] = flat[start:start + count].astype(np.float64).reshape(entry.shape)
    return index, arrays


def load_checkpoint(
    path: Union[str, Path], architecture: Optional[Architecture] = None
) -> ModelParams:
    """Parameters from `path`; rejects a different architecture than the one requested."""
    index, arrays = _read(path)
    if architecture is not None and Architecture(architecture) != index.architecture:
        raise CheckpointError(
            f"{path}: checkpoint holds a {index.architecture.value} model, {Architecture(architecture).value} requested"
        )
    if index.net.architecture != index.architecture:
        raise CheckpointError(f"{path}: architecture tag and net configuration disagree")
    weights = {name: arr for name, arr in arrays.items() if not name.startswith(("adam/",))}
    try:
        params = ModelParams.from_arrays(index.net, weights)
    except ValueError as e:
        raise CheckpointError(f"{path}: {e}") from e
    logger.info(f"Loaded {index.architecture.value} checkpoint from {path}")
    return params


def load_optimizer(path: Union[str, Path]) -> Adam:
    """Adam with the moments and step counter stored in `path` (fresh if none were saved)."""
    index, arrays = _read(path)
    if index.adam is None:
        return Adam()
    meta = index.adam
    optimizer = Adam(learning_rate=meta.learning_rate, beta1=meta.beta1, beta2=meta.beta2, epsilon=meta.epsilon)
    for name, m in arrays.items():
        if not name.startswith(ADAM_M):
            continue
        param = name[len(ADAM_M):]
        v = arrays.get(ADAM_V + param)
        if v is None:
            raise CheckpointError(f"{path}: missing second moment for {param}")
        optimizer.states[param] = AdamState(
            m=m,
            v=v,
            step=meta.step,
            beta1=meta.beta1,
            beta2=meta.beta2,
            epsilon=meta.epsilon,
            learning_rate=meta.learning_rate,
        )
    return optimizer
