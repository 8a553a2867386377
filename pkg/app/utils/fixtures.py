# app/utils/fixtures.py
"""Small binary instances used by seed_problems.py and the test suite."""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from app.models.distribution import JointPmf
from app.models.problem import AuxiliarySystem, RateDistortionPoint, SourceProblem, source_axes


def bsc(crossover: float) -> np.ndarray:
    return np.array([[1 - crossover, crossover], [crossover, 1 - crossover]])


def independent_channel(size: int = 2, x_size: int = 2) -> np.ndarray:
    return np.full((x_size, size), 1.0 / size)


def hamming(size: int = 2) -> np.ndarray:
    return 1.0 - np.eye(size)


def product_problem(p_x: Sequence[float], channels: Sequence[np.ndarray],
                    distortions: Optional[Sequence[np.ndarray]] = None) -> SourceProblem:
    """P(x) prod_j P(y_j | x), Hamming distortion by default."""
    p_x = np.asarray(p_x, dtype=float)
    k = len(channels)
    values = p_x.reshape((-1,) + (1,) * k)
    for j, channel in enumerate(channels, start=1):
        shape = [channel.shape[0]] + [1] * k
        shape[j] = channel.shape[1]
        values = values * np.asarray(channel, dtype=float).reshape(shape)
    if distortions is None:
        distortions = [hamming(p_x.shape[0]) for _ in range(k)]
    return SourceProblem(JointPmf(source_axes(k), values), tuple(np.asarray(d, dtype=float) for d in distortions))


@dataclass(frozen=True)
class Fixture:
    name: str
    build: Callable[[], SourceProblem]
    inside: RateDistortionPoint
    outside: RateDistortionPoint


FIXTURES: dict[str, Fixture] = {
    fixture.name: fixture
    for fixture in [
        Fixture(
            "k1_independent",
            lambda: product_problem([0.7, 0.3], [independent_channel()]),
            RateDistortionPoint((0.5,), (0.1,)),
            RateDistortionPoint((0.1,), (0.1,)),
        ),
        Fixture(
            "k1_dsbs",
            lambda: product_problem([0.5, 0.5], [bsc(0.2)]),
            RateDistortionPoint((0.4,), (0.1,)),
            RateDistortionPoint((0.05,), (0.05,)),
        ),
        Fixture(
            "k1_bsc01",
            lambda: product_problem([0.7, 0.3], [bsc(0.1)]),
            RateDistortionPoint((0.5,), (0.05,)),
            RateDistortionPoint((0.02,), (0.02,)),
        ),
        Fixture(
            "k2_independent",
            lambda: product_problem([0.7, 0.3], [bsc(0.2), bsc(0.1)]),
            RateDistortionPoint((0.5, 1.0), (0.1, 0.05)),
            RateDistortionPoint((0.02, 0.04), (0.02, 0.01)),
        ),
        Fixture(
            "k2_second",
            lambda: product_problem([0.5, 0.5], [bsc(0.3), bsc(0.1)]),
            RateDistortionPoint((0.6, 1.2), (0.1, 0.05)),
            RateDistortionPoint((0.05, 0.1), (0.05, 0.02)),
        ),
    ]
}


# ===== AUXILIARY SYSTEMS =====

def degenerate_aux(problem: SourceProblem, outputs: Optional[Sequence[int]] = None) -> AuxiliarySystem:
    """Constant W_j; user j outputs `outputs[j-1]` (0 by default) whatever it sees."""
    k = problem.k
    outputs = outputs or [0] * k
    channels = [np.ones((problem.x_size,) + (1,) * j) for j in range(1, k + 1)]
    decoders = [
        np.full((1,) * j + (problem.y_sizes[j - 1],), outputs[j - 1], dtype=np.int64)
        for j in range(1, k + 1)
    ]
    return AuxiliarySystem(tuple(channels), tuple(decoders))


def copy_aux(problem: SourceProblem) -> AuxiliarySystem:
    """W_j = X for every stage; user j reconstructs W_j. Needs |Xhat_j| >= |X|."""
    k, x = problem.k, problem.x_size
    channels = []
    for j in range(1, k + 1):
        channel = np.zeros((x,) * (j + 1))
        for symbol in range(x):
            channel[symbol, ..., symbol] = 1.0
        channels.append(channel)
    decoders = []
    for j in range(1, k + 1):
        shape = (x,) * j + (problem.y_sizes[j - 1],)
        decoders.append(np.indices(shape)[j - 1].astype(np.int64))
    return AuxiliarySystem(tuple(channels), tuple(decoders))
