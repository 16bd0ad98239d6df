"""COARSE and COARSE+FINE networks, training and checkpoints."""

from .architecture import ModelParams, NetConfig, fan_in_bound, init_params
from .checkpoint import CheckpointError, load_checkpoint, load_optimizer, save_checkpoint
from .coarse import coarse_decode, coarse_encode, coarse_forward
from .coarse_fine import coarse_fine_forward, predict, prepare_streams, refine
from .trainer import StepLosses, Trainer, batch_gradients, sample_loss, train_step

__all__ = [
    "CheckpointError",
    "ModelParams",
    "NetConfig",
    "StepLosses",
    "Trainer",
    "batch_gradients",
    "coarse_decode",
    "coarse_encode",
    "coarse_fine_forward",
    "coarse_forward",
    "fan_in_bound",
    "init_params",
    "load_checkpoint",
    "load_optimizer",
    "predict",
    "prepare_streams",
    "refine",
    "sample_loss",
    "save_checkpoint",
    "train_step",
]
