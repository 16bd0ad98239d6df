"""Adam with bias correction, one state per named parameter."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from .autograd import Gradient, ShapeError, Tensor

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


@dataclass
class AdamState:
    """Moment estimates and step counter of a single parameter."""
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON
    learning_rate: float = DEFAULT_LEARNING_RATE

    @classmethod
    def zeros_like(cls, param: np.ndarray, **hyper: float) -> "AdamState":
        return cls(m=np.zeros_like(param, dtype=np.float64), v=np.zeros_like(param, dtype=np.float64), **hyper)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState) -> Tuple[np.ndarray, AdamState]:
    """Return the updated parameter and state; inputs are left untouched."""
    if not (param.shape == grad.shape == state.m.shape == state.v.shape):
        raise ShapeError(
            f"adam_step: param {param.shape}, grad {grad.shape}, m {state.m.shape}, v {state.v.shape} must agree"
        )
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * (grad * grad)
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    updated = param - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(
        m=m,
        v=v,
        step=step,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
        learning_rate=state.learning_rate,
    )
    return updated, new_state


@dataclass
class Adam:
    """Updates a set of named parameter tensors in place."""
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON
    states: Dict[str, AdamState] = field(default_factory=dict)

    @property
    def step_count(self) -> int:
        return max((s.step for s in self.states.values()), default=0)

    def _state_for(self, name: str, param: np.ndarray) -> AdamState:
        if name not in self.states:
            self.states[name] = AdamState.zeros_like(
                param,
                beta1=self.beta1,
                beta2=self.beta2,
                epsilon=self.epsilon,
                learning_rate=self.learning_rate,
            )
        return self.states[name]

    def step(self, params: Mapping[str, Tensor], grads: Gradient) -> None:
        missing = set(params) - set(grads)
        if missing:
            raise KeyError(f"no gradient for parameters: {sorted(missing)}")
        for name, tensor in params.items():
            updated, state = adam_step(tensor.data, grads[name], self._state_for(name, tensor.data))
            tensor.data = updated
            self.states[name] = state
        logger.debug(f"Adam step {self.step_count} applied to {len(params)} tensors")
