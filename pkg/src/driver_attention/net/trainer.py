"""
End-to-end training: MSE on the cropped stream (loss 1) plus MSE on the
refined full-frame map (loss 2), equal weights, one Adam update per batch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models import Architecture, CropSample
from ..tensor import Adam, Gradient, Tensor, add, gradients, mse
from .architecture import ModelParams
from .coarse import coarse_forward
from .coarse_fine import coarse_fine_forward

logger = logging.getLogger(__name__)

Validator = Callable[[ModelParams], Optional[float]]


@dataclass
class StepLosses:
    loss1: float
    loss2: Optional[float] = None

    @property
    def total(self) -> float:
        return self.loss1 + (self.loss2 or 0.0)


def sample_loss(sample: CropSample, params: ModelParams) -> Tuple[Tensor, Tensor, Optional[Tensor]]:
    """(total, loss1, loss2) for one sample; COARSE has no loss 2."""
    if params.architecture == Architecture.COARSE:
        loss1 = mse(coarse_forward(sample.cropped_clip, params), sample.cropped_map)
        return loss1, loss1, None
    cropped_map, refined = coarse_fine_forward(
        sample.cropped_clip, sample.resized_clip, sample.last_frame, params
    )
    loss1 = mse(cropped_map, sample.cropped_map)
    loss2 = mse(refined, sample.full_map)
    return add(loss1, loss2), loss1, loss2


def batch_gradients(batch: Sequence[CropSample], params: ModelParams) -> Tuple[Gradient, StepLosses]:
    """Gradients of the batch-mean total loss, accumulated one sample at a time."""
    if not batch:
        raise ValueError("train_step needs a non-empty batch")
    total_grads: Gradient = {name: np.zeros_like(t.data) for name, t in params.items()}
    loss1_sum, loss2_sum = 0.0, 0.0
    for sample in batch:
        total, loss1, loss2 = sample_loss(sample, params)
        for name, g in gradients(total, params.tensors).items():
            total_grads[name] += g
        loss1_sum += loss1.item()
        loss2_sum += loss2.item() if loss2 is not None else 0.0
    n = len(batch)
    grads = {name: g / n for name, g in total_grads.items()}
    losses = StepLosses(loss1_sum / n, loss2_sum / n if params.architecture == Architecture.COARSE_FINE else None)
    return grads, losses


def train_step(batch: Sequence[CropSample], params: ModelParams, optimizer: Adam) -> StepLosses:
    """One Adam update of every parameter; returns the pre-update losses."""
    grads, losses = batch_gradients(batch, params)
    optimizer.step(params.tensors, grads)
    return losses


@dataclass
class Trainer:
    params: ModelParams
    sampler: Callable[[int], List[CropSample]]
    optimizer: Adam = field(default_factory=Adam)
    batch_size: int = 4
    validate: Optional[Validator] = None

    def fit(self, steps: int, log_every: int = 10) -> List[Dict[str, Optional[float]]]:
        """Run `steps` updates; one log row every `log_every` steps with interval-mean losses."""
        if steps < 0 or log_every < 1:
            raise ValueError(f"steps must be >= 0 and log_every >= 1, got {steps} and {log_every}")
        rows: List[Dict[str, Optional[float]]] = []
        interval: List[StepLosses] = []
        for i in range(1, steps + 1):
            interval.append(train_step(self.sampler(self.batch_size), self.params, self.optimizer))
            if i % log_every:
                continue
            loss2 = [s.loss2 for s in interval if s.loss2 is not None]
            row = {
                "step": self.optimizer.step_count,
                "loss1": float(np.mean([s.loss1 for s in interval])),
                "loss2": float(np.mean(loss2)) if loss2 else None,
                "val_cc": self.validate(self.params) if self.validate else None,
            }
            rows.append(row)
            interval = []
            logger.info(
                f"step {row['step']}: loss1 {row['loss1']:.6f} loss2 {row['loss2']} val_cc {row['val_cc']}"
            )
        return rows
