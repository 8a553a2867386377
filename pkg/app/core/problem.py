# app/core/problem.py
import hashlib
import json
import logging
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from app.core.probability import conditional_mutual_information, marginalize
from app.exceptions import InputError
from app.models.distribution import JointPmf
from app.models.problem import (
    AuxiliarySystem,
    CapScheme,
    RateDistortionPoint,
    SourceProblem,
    source_axes,
    t_axes,
    validate_weights,
    w_axes,
    xhat_axes,
)
from app.schema.problem_schema import ProblemFile

logger = logging.getLogger(__name__)


# ===================== INGESTION =====================

def load_problem(document: Union[str, bytes, dict]) -> SourceProblem:
    """Validate a problem document (JSON text or parsed dict) into a SourceProblem."""
    try:
        if isinstance(document, (str, bytes)):
            parsed = ProblemFile.model_validate_json(document)
        else:
            parsed = ProblemFile.model_validate(document)
    except ValidationError as e:
        raise InputError(f"Invalid problem document: {e}") from e

    joint = np.asarray(parsed.joint, dtype=float)
    joint = joint / joint.sum()
    problem = SourceProblem(
        joint=JointPmf(source_axes(parsed.k), joint),
        distortion=tuple(np.asarray(d, dtype=float) for d in parsed.distortion),
    )
    logger.info(f"Loaded k={problem.k} problem, |X|={problem.x_size}, d_bar={problem.d_bar}")
    return problem


def problem_hash(document: Union[str, bytes]) -> str:
    """sha256 of the raw problem file content."""
    if isinstance(document, str):
        document = document.encode()
    return hashlib.sha256(document).hexdigest()


def problem_document(problem: SourceProblem) -> dict:
    """Inverse of load_problem, used to write fixture files."""
    return {
        "k": problem.k,
        "alphabets": {
            "x": problem.x_size,
            "y": list(problem.y_sizes),
            "xhat": list(problem.xhat_sizes),
        },
        "joint": problem.joint.values.tolist(),
        "distortion": [d.tolist() for d in problem.distortion],
    }


def dump_problem(problem: SourceProblem) -> str:
    return json.dumps(problem_document(problem), indent=2)


# ===================== CARDINALITY CAPS =====================

def w_caps(problem: SourceProblem, scheme: CapScheme = CapScheme.P_STAR,
           override: Optional[Sequence[int]] = None) -> tuple[int, ...]:
    """
    Alphabet sizes for W_1..W_k under a cap scheme. `override` replaces the
    computed caps entry-wise (configurable downward for speed).
    """
    k, x = problem.k, problem.x_size
    caps: list[int] = []
    for j in range(1, k + 1):
        if scheme == CapScheme.P_STAR:
            cap = x + 3 if j == 1 else x * int(np.prod(caps)) + 1
        elif scheme == CapScheme.P:
            cap = x * int(np.prod(caps)) + 1 if caps else x + 1
        elif scheme == CapScheme.P_SH:
            cap = x ** j
        else:
            sizes = [x, *problem.y_sizes, *problem.xhat_sizes]
            cap = int(np.prod(sizes)) ** j
        caps.append(cap)
    if override is not None:
        if len(override) != k or any(int(c) < 1 for c in override):
            raise InputError(f"W cap override needs {k} positive entries")
        caps = [int(c) for c in override]
    return tuple(caps)


# ===================== JOINT CONSTRUCTION =====================

def place(array: np.ndarray, positions: Sequence[int], ndim: int) -> np.ndarray:
    """Reshape `array` (one axis per entry of `positions`) to broadcast over an ndim-array."""
    order = np.argsort(positions)
    moved = np.transpose(array, order)
    shape = [1] * ndim
    for axis, size in zip(np.asarray(positions)[order], moved.shape):
        shape[axis] = size
    return moved.reshape(shape)


def source_test_channel_joint(problem: SourceProblem, channels: Sequence[np.ndarray]) -> np.ndarray:
    """P_{XY^k} * Q_{W^k|X} as a dense array over (X, Y^k, W^k)."""
    k = problem.k
    ndim = 1 + 2 * k
    values = problem.joint.values.reshape(problem.joint.shape + (1,) * k)
    for j, channel in enumerate(channels, start=1):
        positions = [0] + [1 + k + l for l in range(j)]
        values = values * place(channel, positions, ndim)
    return values


def induced_values(problem: SourceProblem, channels: Sequence[np.ndarray],
                   decoders: Sequence[np.ndarray]) -> np.ndarray:
    """Unnormalised array form of induce_joint; `decoders` are conditionals Q(xhat_j | w^j, y_j)."""
    k = problem.k
    ndim = 1 + 3 * k
    base = source_test_channel_joint(problem, channels)
    values = base.reshape(base.shape + (1,) * k)
    for j in range(1, k + 1):
        positions = [1 + k + l for l in range(j)] + [j, 1 + 2 * k + (j - 1)]
        values = values * place(decoders[j - 1], positions, ndim)
    return values


def induce_joint(problem: SourceProblem, aux: AuxiliarySystem) -> JointPmf:
    """Q_T = P_{XY^k} Q_{W^k|X} prod_j Q_{Xhat_j | W^j, Y_j}; the Markov chain W^k - X - Y^k holds by construction."""
    k = problem.k
    if aux.k != k:
        raise InputError(f"Auxiliary system has {aux.k} users, problem has {k}")
    if aux.channels[0].shape[0] != problem.x_size:
        raise InputError("Test channels do not match |X|")
    for j in range(1, k + 1):
        if aux.decoders[j - 1].shape[j] != problem.y_sizes[j - 1]:
            raise InputError(f"Decoder {j} does not match |Y_{j}|")
    decoders = [aux.decoder_conditional(j, problem.xhat_sizes[j - 1]) for j in range(1, k + 1)]
    values = induced_values(problem, aux.channels, decoders)
    return JointPmf(t_axes(k), values / values.sum())


# ===================== OBJECTIVES =====================

def kappa(point: RateDistortionPoint, alpha: Sequence[float], beta: Sequence[float]) -> float:
    """alpha_1 R_1 + beta_1 D_1 + sum_{j>=2} (alpha_j (R_j - sum_{l<j} R_l) + beta_j D_j)."""
    validate_weights(alpha, beta, point.k)
    stage = point.stage_rates()
    return float(sum(a * r + b * d for a, b, r, d in zip(alpha, beta, stage, point.distortions)))


def rate_objective(problem: SourceProblem, joint: JointPmf,
                   alpha: Sequence[float], beta: Sequence[float]) -> float:
    """alpha_1 I(X;W_1) + sum_{j>=2} alpha_j I(X;W_j|W^{j-1}) + sum_j beta_j E[d_j(X, Xhat_j)] under `joint`."""
    k = problem.k
    ws, xhats = w_axes(k), xhat_axes(k)
    total = 0.0
    for j in range(k):
        if alpha[j] > 0:
            total += alpha[j] * conditional_mutual_information(joint, ["X"], [ws[j]], ws[:j])
        if beta[j] > 0:
            pair = marginalize(joint, ["X", xhats[j]]).values
            total += beta[j] * float(np.sum(pair * problem.distortion[j]))
    return total
