"""Tensor core: float64 arrays with reverse-mode differentiation."""

from .autograd import (
    Gradient,
    ShapeError,
    Tensor,
    add,
    concat,
    gradients,
    leaky_relu,
    mse,
    mul,
    no_grad,
    relu,
    reshape,
    scale,
    total,
)
from .layers import avg_pool2x, conv2d, conv3d, max_pool, pool3d, upsample2x
from .optim import Adam, AdamState, adam_step

__all__ = [
    "Adam",
    "AdamState",
    "Gradient",
    "ShapeError",
    "Tensor",
    "adam_step",
    "add",
    "avg_pool2x",
    "concat",
    "conv2d",
    "conv3d",
    "gradients",
    "leaky_relu",
    "max_pool",
    "mse",
    "mul",
    "no_grad",
    "pool3d",
    "relu",
    "reshape",
    "scale",
    "total",
    "upsample2x",
]
