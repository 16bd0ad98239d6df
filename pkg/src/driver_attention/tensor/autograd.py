"""
Reverse-mode differentiation over numpy arrays.

A `Tensor` keeps its parents and a backward closure; `Tensor.backward()` walks the
graph in reverse topological order and accumulates gradients. Parameters that
appear several times in one graph (shared weights) simply collect the sum of
their contributions.
"""

from __future__ import annotations

import contextlib
import contextvars
import logging
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

Gradient = Dict[str, np.ndarray]

_GRAD_ENABLED: contextvars.ContextVar[bool] = contextvars.ContextVar("grad_enabled", default=True)


class ShapeError(ValueError):
    """Raised when operand shapes violate an op's contract."""


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block (prediction, evaluation)."""
    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED.get()


class Tensor:
    """A float64 array that remembers how it was computed."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward")

    def __init__(
        self,
        data: Union[np.ndarray, float, Sequence[float]],
        requires_grad: bool = False,
        name: Optional[str] = None,
    ) -> None:
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: Tuple[Tensor, ...] = ()
        self._backward: Optional[Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]] = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>"

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def _toposort(self) -> List["Tensor"]:
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self) -> None:
        """Propagate d(self)/d(leaf) into `.grad` of every tensor that requires it."""
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar root, got shape {self.shape}")
        self.grad = np.ones_like(self.data)
        for node in reversed(self._toposort()):
            if node._backward is None or node.grad is None:
                continue
            parent_grads = node._backward(node.grad)
            for parent, g in zip(node._parents, parent_grads):
                if g is None or not parent.requires_grad:
                    continue
                if g.shape != parent.data.shape:
                    raise ShapeError(
                        f"gradient shape {g.shape} does not match tensor shape {parent.data.shape}"
                    )
                parent.grad = g if parent.grad is None else parent.grad + g
            # interior grads are not needed once propagated
            if node is not self:
                node.grad = None


def as_tensor(value: Union[Tensor, np.ndarray, float]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def make_result(
    data: np.ndarray,
    parents: Iterable[Tensor],
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
) -> Tensor:
    """Wrap an op output, recording the graph edge only when someone needs gradients."""
    parents = tuple(parents)
    out = Tensor(data)
    if _GRAD_ENABLED.get() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def gradients(loss: Tensor, params: Dict[str, Tensor]) -> Gradient:
    """Run backward from `loss` and collect one gradient per named parameter.

    Parameters the loss does not depend on get a zero tensor.
    """
    for p in params.values():
        p.zero_grad()
    loss.backward()
    grads: Gradient = {}
    for name, p in params.items():
        grads[name] = np.zeros_like(p.data) if p.grad is None else p.grad
        p.zero_grad()
    return grads


# elementwise and structural ops

def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} differ")
    return make_result(a.data + b.data, (a, b), lambda g: (g, g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"mul: shapes {a.shape} and {b.shape} differ")
    return make_result(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def scale(a: Tensor, factor: float) -> Tensor:
    a = as_tensor(a)
    return make_result(a.data * factor, (a,), lambda g: (g * factor,))


def total(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return make_result(np.asarray(a.data.sum()), (a,), lambda g: (np.full_like(a.data, float(g)),))


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}") from e
    return make_result(out, (a,), lambda g: (g.reshape(a.shape),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    rest = {t.shape[:axis] + t.shape[axis + 1:] for t in tensors}
    if len(rest) != 1:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]} on axis {axis}")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g: np.ndarray) -> List[np.ndarray]:
        return [np.take(g, np.arange(lo, hi), axis=axis) for lo, hi in zip(bounds[:-1], bounds[1:])]

    return make_result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def relu(a: Tensor) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return make_result(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def leaky_relu(a: Tensor, alpha: float) -> Tensor:
    if alpha < 0:
        raise ValueError(f"leaky_relu: alpha must be >= 0, got {alpha}")
    a = as_tensor(a)
    slope = np.where(a.data >= 0, 1.0, alpha)
    return make_result(a.data * slope, (a,), lambda g: (g * slope,))


def mse(prediction: Tensor, target: Union[Tensor, np.ndarray]) -> Tensor:
    """Mean over all elements of the squared difference."""
    prediction, target = as_tensor(prediction), as_tensor(target)
    if prediction.shape != target.shape:
        raise ShapeError(f"mse: prediction {prediction.shape} vs target {target.shape}")
    diff = prediction.data - target.data
    n = diff.size

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        d = (2.0 / n) * float(g) * diff
        return d, -d

    return make_result(np.asarray(np.mean(diff * diff)), (prediction, target), backward)
