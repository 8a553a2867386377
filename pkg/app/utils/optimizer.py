# app/utils/optimizer.py
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from app.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

LOGIT_BOUND = 30.0
PENALTY = 1e10


@dataclass(frozen=True)
class StartResult:
    x: np.ndarray
    fun: float
    success: bool


def _finite(objective: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    def wrapped(z: np.ndarray) -> float:
        value = objective(z)
        return float(value) if np.isfinite(value) else PENALTY
    return wrapped


def polish(objective: Callable[[np.ndarray], float], start: np.ndarray, max_iter: int) -> StartResult:
    """L-BFGS-B with finite-difference gradients over box-bounded logits."""
    start = np.clip(np.asarray(start, dtype=float), -LOGIT_BOUND, LOGIT_BOUND)
    if start.size == 0:
        return StartResult(start, float(objective(start)), True)
    f = _finite(objective)
    res = minimize(
        f, start, method="L-BFGS-B",
        bounds=[(-LOGIT_BOUND, LOGIT_BOUND)] * start.size,
        options={"maxiter": max_iter},
    )
    # L-BFGS-B may stop at a point worse than where it started
    f0 = f(start)
    if f0 < res.fun:
        return StartResult(start, f0, bool(res.success))
    return StartResult(np.asarray(res.x), float(res.fun), bool(res.success))


def multistart(objective: Callable[[np.ndarray], float], starts: Sequence[np.ndarray],
               max_iter: int, n_jobs: int = 1) -> list[StartResult]:
    return ordered_map(lambda z: polish(objective, z, max_iter), starts, n_jobs)


def best_of(results: Sequence[StartResult]) -> StartResult:
    """Lowest objective; ties go to the earliest start."""
    best = results[0]
    for res in results[1:]:
        if res.fun < best.fun:
            best = res
    return best


def logits_from_pmf(values: np.ndarray, floor: float = 1e-9) -> np.ndarray:
    """Inverse of softmax along the last axis, up to a floor for zero entries."""
    return np.clip(np.log(np.asarray(values, dtype=float) + floor), -LOGIT_BOUND, LOGIT_BOUND)
