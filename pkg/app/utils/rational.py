# app/utils/rational.py
import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from app.exceptions import InputError

MAX_DENOMINATOR = 64


def rationalize_distortions(matrices: Sequence[np.ndarray],
                            max_denominator: int = MAX_DENOMINATOR) -> tuple[list[np.ndarray], int]:
    """
    Express every distortion entry as an integer over one common denominator.
    Returns the integer matrices and the denominator.
    """
    denominator = 1
    for matrix in matrices:
        for value in np.asarray(matrix, dtype=float).ravel():
            fraction = Fraction(float(value)).limit_denominator(max_denominator)
            if abs(float(fraction) - value) > 1e-9:
                raise InputError(f"Distortion {value!r} is not a fraction with denominator <= {max_denominator}")
            denominator = math.lcm(denominator, fraction.denominator)
    if denominator > max_denominator:
        raise InputError(f"Common distortion denominator {denominator} exceeds {max_denominator}")
    integers = [np.rint(np.asarray(m, dtype=float) * denominator).astype(np.int64) for m in matrices]
    return integers, denominator


def integer_threshold(level: float, n: int, denominator: int) -> int:
    """Largest integer budget L with L / denominator <= n * level (up to 1e-9)."""
    return int(math.floor(n * level * denominator + 1e-9))
