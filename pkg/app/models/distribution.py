# app/models/distribution.py
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from app.exceptions import InputError

PMF_TOLERANCE = 1e-12


def _check_pmf(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise InputError(f"{what} has non-finite entries")
    if np.any(values < 0):
        raise InputError(f"{what} has negative entries (min {values.min()!r})")
    total = float(values.sum())
    if abs(total - 1.0) > PMF_TOLERANCE:
        raise InputError(f"{what} sums to {total!r}, expected 1")


@dataclass(frozen=True)
class Pmf:
    """Probability vector over an indexed finite alphabet."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InputError("Pmf must be one-dimensional")
        _check_pmf(values, "Pmf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class JointPmf:
    """Dense joint pmf; `values` has one array axis per named alphabet, in order."""

    axes: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        values = np.asarray(self.values, dtype=float)
        if len(set(axes)) != len(axes):
            raise InputError(f"Duplicate axis names in {axes}")
        if values.ndim != len(axes):
            raise InputError(f"{len(axes)} axis names for a {values.ndim}-dimensional array")
        _check_pmf(values, "JointPmf")
        values.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def sizes(self) -> dict[str, int]:
        return dict(zip(self.axes, self.values.shape))

    def axis_index(self, name: str) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise InputError(f"Unknown axis {name!r}; axes are {self.axes}") from None

    def positions(self, names: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.axis_index(name) for name in names)


@dataclass(frozen=True)
class ConditionalPmf:
    """
    P(target | given). `values` is laid out as (given sizes..., target sizes...).
    Slices whose conditioning event has zero probability are NaN and flagged
    in `defined`.
    """

    given: tuple[str, ...]
    target: tuple[str, ...]
    values: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        defined = np.asarray(self.defined, dtype=bool)
        if values.ndim != len(self.given) + len(self.target):
            raise InputError("ConditionalPmf values do not match its axes")
        if defined.shape != values.shape[: len(self.given)]:
            raise InputError("ConditionalPmf `defined` mask has the wrong shape")
        target_axes = tuple(range(len(self.given), values.ndim))
        sums = values[defined].sum(axis=tuple(range(1, 1 + len(target_axes))))
        if sums.size and np.max(np.abs(sums - 1.0)) > PMF_TOLERANCE:
            raise InputError("A defined conditioning slice does not sum to 1")
        values.setflags(write=False)
        defined.setflags(write=False)
        object.__setattr__(self, "given", tuple(self.given))
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "defined", defined)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, given: str = "X", target: str = "Y") -> "ConditionalPmf":
        """Single-axis channel from a row-stochastic matrix."""
        matrix = np.asarray(matrix, dtype=float)
        return cls((given,), (target,), matrix, np.ones(matrix.shape[0], dtype=bool))
