"""Central finite-difference checks of analytic gradients."""

from __future__ import annotations

import logging
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .autograd import Tensor, gradients, no_grad

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||), 0 when both vanish."""
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / scale


def numerical_gradient(
    loss_fn: Callable[[], Tensor],
    param: Tensor,
    step: float = DEFAULT_STEP,
    indices: Optional[Iterable[Tuple[int, ...]]] = None,
) -> np.ndarray:
    """Central differences of `loss_fn()` w.r.t. entries of `param`.

    Entries outside `indices` are left at zero; the caller compares only those.
    """
    grad = np.zeros_like(param.data)
    targets = indices if indices is not None else np.ndindex(*param.shape)
    with no_grad():
        for idx in targets:
            original = param.data[idx]
            param.data[idx] = original + step
            plus = loss_fn().item()
            param.data[idx] = original - step
            minus = loss_fn().item()
            param.data[idx] = original
            grad[idx] = (plus - minus) / (2.0 * step)
    return grad


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Dict[str, Tensor],
    step: float = DEFAULT_STEP,
    samples_per_param: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Dict[str, float]:
    """Relative error between backprop and finite differences, per parameter.

    With `samples_per_param`, only that many random entries of each parameter are
    checked (large networks); otherwise every entry is.
    """
    analytic = gradients(loss_fn(), params)
    errors: Dict[str, float] = {}
    for name, param in params.items():
        if samples_per_param is None:
            indices: Sequence[Tuple[int, ...]] = list(np.ndindex(*param.shape))
        else:
            generator = rng if rng is not None else np.random.default_rng(0)
            flat = generator.choice(param.data.size, size=min(samples_per_param, param.data.size), replace=False)
            indices = [np.unravel_index(int(i), param.shape) for i in flat]
        numeric = numerical_gradient(loss_fn, param, step=step, indices=indices)
        picked = tuple(np.array(axis) for axis in zip(*indices))
        errors[name] = relative_error(analytic[name][picked], numeric[picked])
        logger.debug(f"gradcheck {name}: relative error {errors[name]:.3e} over {len(indices)} entries")
    return errors
