"""
Layer primitives of the attention network: same-shape 3×3(×3) convolutions,
max pooling, nearest-neighbour ×2 upsampling.

Convolutions are computed as a sum over kernel offsets of one BLAS contraction
each, over a zero-padded copy of the input. This keeps memory at one padded
input plus one output regardless of kernel volume.
"""

from __future__ import annotations

import itertools
import logging
from typing import Sequence, Tuple

import numpy as np

from .autograd import ShapeError, Tensor, as_tensor, make_result

logger = logging.getLogger(__name__)

KERNEL = 3
PAD = 1


def _conv_same(x: Tensor, kernels: Tensor, bias: Tensor, spatial_rank: int) -> Tensor:
    x, kernels, bias = as_tensor(x), as_tensor(kernels), as_tensor(bias)
    op = f"conv{spatial_rank}d"
    if x.ndim != spatial_rank + 1:
        raise ShapeError(f"{op}: input must be C×{'×'.join('THW'[-spatial_rank:])}, got {x.shape}")
    if kernels.shape[2:] != (KERNEL,) * spatial_rank or kernels.ndim != spatial_rank + 2:
        raise ShapeError(f"{op}: kernels must be C'×C×{'×'.join(['3'] * spatial_rank)}, got {kernels.shape}")
    if kernels.shape[1] != x.shape[0]:
        raise ShapeError(
            f"{op}: input has {x.shape[0]} channels but kernels expect {kernels.shape[1]} "
            f"(input {x.shape}, kernels {kernels.shape})"
        )
    if bias.shape != (kernels.shape[0],):
        raise ShapeError(f"{op}: bias must have shape ({kernels.shape[0]},), got {bias.shape}")

    extents = x.shape[1:]
    spatial_axes = tuple(range(1, spatial_rank + 1))
    padded = np.pad(x.data, [(0, 0)] + [(PAD, PAD)] * spatial_rank)
    offsets = list(itertools.product(range(KERNEL), repeat=spatial_rank))

    def window(offset: Tuple[int, ...]) -> Tuple[slice, ...]:
        return (slice(None),) + tuple(slice(o, o + n) for o, n in zip(offset, extents))

    out = np.empty((kernels.shape[0],) + extents)
    out[...] = bias.data.reshape((-1,) + (1,) * spatial_rank)
    for offset in offsets:
        w = kernels.data[(slice(None), slice(None)) + offset]
        out += np.tensordot(w, padded[window(offset)], axes=([1], [0]))

    def backward(g: np.ndarray):
        grad_padded = np.zeros_like(padded)
        grad_kernels = np.empty_like(kernels.data)
        for offset in offsets:
            sl = window(offset)
            grad_kernels[(slice(None), slice(None)) + offset] = np.tensordot(
                g, padded[sl], axes=(spatial_axes, spatial_axes)
            )
            w = kernels.data[(slice(None), slice(None)) + offset]
            grad_padded[sl] += np.tensordot(w, g, axes=([0], [0]))
        interior = (slice(None),) + tuple(slice(PAD, PAD + n) for n in extents)
        return grad_padded[interior], grad_kernels, g.sum(axis=spatial_axes)

    return make_result(out, (x, kernels, bias), backward)


def conv3d(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """C×T×H×W input, C'×C×3×3×3 kernels, zero padding 1 → C'×T×H×W."""
    return _conv_same(x, kernels, bias, 3)


def conv2d(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """C×H×W input, C'×C×3×3 kernels, zero padding 1 → C'×H×W."""
    return _conv_same(x, kernels, bias, 2)


def _blocked(data: np.ndarray, pool: Sequence[int]) -> np.ndarray:
    """View C×D1×...×Dk as C×(D1/p1)×...×(Dk/pk)×(p1·...·pk)."""
    k = len(pool)
    split = [data.shape[0]]
    for extent, p in zip(data.shape[1:], pool):
        split += [extent // p, p]
    blocks = data.reshape(split)
    outer = [0] + [1 + 2 * i for i in range(k)]
    inner = [2 + 2 * i for i in range(k)]
    moved = blocks.transpose(outer + inner)
    return moved.reshape(moved.shape[: k + 1] + (-1,))


def _unblocked(blocked: np.ndarray, pool: Sequence[int], shape: Tuple[int, ...]) -> np.ndarray:
    k = len(pool)
    expanded = blocked.reshape(blocked.shape[: k + 1] + tuple(pool))
    order = [0]
    for i in range(k):
        order += [1 + i, k + 1 + i]
    return expanded.transpose(order).reshape(shape)


def _check_pool(x: Tensor, pool: Sequence[int], op: str) -> None:
    if x.ndim != len(pool) + 1:
        raise ShapeError(f"{op}: pool {tuple(pool)} does not fit input of shape {x.shape}")
    for extent, p in zip(x.shape[1:], pool):
        if p not in (1, 2):
            raise ShapeError(f"{op}: pool extents must be 1 or 2, got {tuple(pool)}")
        if extent % p:
            raise ShapeError(f"{op}: extent {extent} of input {x.shape} is not divisible by pool {tuple(pool)}")


def max_pool(x: Tensor, pool: Sequence[int]) -> Tensor:
    """Non-overlapping max pooling; gradient goes to the first maximum of each window."""
    x = as_tensor(x)
    pool = tuple(int(p) for p in pool)
    _check_pool(x, pool, "max_pool")
    blocked = _blocked(x.data, pool)
    winners = blocked.argmax(axis=-1)
    out = np.take_along_axis(blocked, winners[..., None], axis=-1)[..., 0]

    def backward(g: np.ndarray):
        scattered = np.zeros_like(blocked)
        np.put_along_axis(scattered, winners[..., None], g[..., None], axis=-1)
        return (_unblocked(scattered, pool, x.shape),)

    return make_result(out, (x,), backward)


def pool3d(x: Tensor, pool: Tuple[int, int, int]) -> Tensor:
    """Max pooling of a C×T×H×W tensor with (pt, ph, pw) windows."""
    if len(pool) != 3:
        raise ShapeError(f"pool3d: pool must have three extents, got {tuple(pool)}")
    return max_pool(x, pool)


def avg_pool2x(x: Tensor) -> Tensor:
    """2×2 average pooling of a C×H×W tensor."""
    x = as_tensor(x)
    _check_pool(x, (2, 2), "avg_pool2x")
    blocked = _blocked(x.data, (2, 2))

    def backward(g: np.ndarray):
        spread = np.repeat(g[..., None] / 4.0, 4, axis=-1)
        return (_unblocked(spread, (2, 2), x.shape),)

    return make_result(blocked.mean(axis=-1), (x,), backward)


def upsample2x(x: Tensor) -> Tensor:
    """Nearest-neighbour upsampling: out[c, y, x] = in[c, y // 2, x // 2]."""
    x = as_tensor(x)
    if x.ndim != 3:
        raise ShapeError(f"upsample2x: input must be C×H×W, got {x.shape}")
    out = np.repeat(np.repeat(x.data, 2, axis=1), 2, axis=2)
    c, h, w = x.shape

    def backward(g: np.ndarray):
        return (g.reshape(c, h, 2, w, 2).sum(axis=(2, 4)),)

    return make_result(out, (x,), backward)
