from __future__ import annotations
from dataclasses import dataclass
from typing import Callable
import logging

import numpy as np

from core.error_types import Result, Success, Failure, LineSearchError, ValidationError

logger = logging.getLogger(__name__)

MAX_HALVINGS = 60


@dataclass(frozen=True)
class ArmijoStep:
    alpha: float
    point: np.ndarray
    value: float
    halvings: int


def armijo_backtracking(
    function: Callable[[np.ndarray], float],
    point: np.ndarray,
    gradient: np.ndarray,
    value: float,
    a: float = 1.0,
    gamma: float = 1e-4,
    delta: float = 0.5,
    max_halvings: int = MAX_HALVINGS,
) -> Result[ArmijoStep]:
    """Step alpha = a * delta^m along -gradient for the smallest m >= 0 with
    f(x - alpha g) <= f(x) - gamma * alpha * ||g||^2.
    """
    gradient = np.asarray(gradient, dtype=float)
    squared_norm = float(gradient @ gradient)
    if squared_norm == 0.0:
        return Failure(ValidationError(
            message="Armijo search needs a nonzero gradient",
            field_name="gradient",
        ))

    alpha = a
    for halvings in range(max_halvings + 1):
        candidate = point - alpha * gradient
        candidate_value = function(candidate)
        if candidate_value <= value - gamma * alpha * squared_norm:
            logger.debug(f"Armijo step alpha={alpha:.3e} after {halvings} halvings: {value:.6g} -> {candidate_value:.6g}")
            return Success(ArmijoStep(alpha=alpha, point=candidate, value=candidate_value, halvings=halvings))
        alpha *= delta

    return Failure(LineSearchError(
        message=(
            f"No sufficient decrease after {max_halvings} reductions "
            f"(gradient norm {np.sqrt(squared_norm):.3e}); the gradient is likely wrong"
        ),
        halvings=max_halvings,
    ))
