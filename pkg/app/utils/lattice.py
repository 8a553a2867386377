# app/utils/lattice.py
"""Integer compositions used as simplex grids for weights and probability oracles."""
import itertools
import math
from typing import Iterator

import numpy as np


def lattice_size(total: int, parts: int) -> int:
    """Number of ways to write `total` as an ordered sum of `parts` non-negative integers."""
    return math.comb(total + parts - 1, parts - 1)


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Stars and bars, in lexicographic order of the bar positions."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        previous = -1
        out = []
        for bar in bars:
            out.append(bar - previous - 1)
            previous = bar
        out.append(total + parts - 1 - previous - 1)
        yield tuple(out)


def largest_resolution(parts: int, budget: int, cap: int = 512) -> int:
    """Largest N with lattice_size(N, parts) <= budget, or 0 when even N=1 does not fit."""
    best = 0
    for total in range(1, cap + 1):
        if lattice_size(total, parts) > budget:
            break
        best = total
    return best


def simplex_grid(parts: int, resolution: int) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of 1/resolution."""
    return np.array(list(compositions(resolution, parts)), dtype=float) / resolution


def neighbours(center: np.ndarray, step: float) -> list[np.ndarray]:
    """Points reached by moving `step` of mass between two coordinates, staying on the simplex."""
    out = []
    for a in range(center.size):
        for b in range(center.size):
            if a == b or center[b] < step - 1e-12:
                continue
            point = center.copy()
            point[a] += step
            point[b] = max(point[b] - step, 0.0)
            out.append(point / point.sum())
    return out
