# app/models/problem.py
import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.exceptions import InputError
from app.models.distribution import JointPmf, PMF_TOLERANCE

WEIGHT_TOLERANCE = 1e-12


class CapScheme(str, enum.Enum):
    """Cardinality bounds for the auxiliary alphabets W_j."""
    P_STAR = "p_star"
    P = "p"
    P_SH = "p_sh"
    Q_DEFAULT = "q_default"


# ===== AXIS NAMES =====
# T = (X, Y_1..Y_k, W_1..W_k, Xhat_1..Xhat_k), always in this order.

def y_axes(k: int) -> tuple[str, ...]:
    return tuple(f"Y{j}" for j in range(1, k + 1))


def w_axes(k: int) -> tuple[str, ...]:
    return tuple(f"W{j}" for j in range(1, k + 1))


def xhat_axes(k: int) -> tuple[str, ...]:
    return tuple(f"Xhat{j}" for j in range(1, k + 1))


def source_axes(k: int) -> tuple[str, ...]:
    return ("X",) + y_axes(k)


def t_axes(k: int) -> tuple[str, ...]:
    return ("X",) + y_axes(k) + w_axes(k) + xhat_axes(k)


def validate_weights(alpha: Sequence[float], beta: Sequence[float], k: Optional[int] = None) -> None:
    """Raise unless alpha, beta lie in [0,1]^k and sum to one together."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if alpha.shape != beta.shape or alpha.ndim != 1:
        raise InputError("alpha and beta must be vectors of equal length")
    if k is not None and alpha.shape[0] != k:
        raise InputError(f"Expected {k} weights per family, got {alpha.shape[0]}")
    if np.any(alpha < -WEIGHT_TOLERANCE) or np.any(beta < -WEIGHT_TOLERANCE):
        raise InputError("Weights must be non-negative")
    if np.any(alpha > 1 + WEIGHT_TOLERANCE) or np.any(beta > 1 + WEIGHT_TOLERANCE):
        raise InputError("Weights must not exceed 1")
    total = float(alpha.sum() + beta.sum())
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise InputError(f"sum(alpha) + sum(beta) = {total!r}, expected 1")


@dataclass(frozen=True)
class SourceProblem:
    """
    A k-user instance: joint pmf over (X, Y_1..Y_k) and one distortion
    matrix d_j over X x Xhat_j per user.
    """

    joint: JointPmf
    distortion: tuple[np.ndarray, ...]

    def __post_init__(self):
        k = len(self.distortion)
        if k < 1:
            raise InputError("A problem needs at least one user")
        if self.joint.axes != source_axes(k):
            raise InputError(f"Joint axes {self.joint.axes} do not match {source_axes(k)}")
        p_x = self.joint.values.sum(axis=tuple(range(1, k + 1)))
        zero = np.flatnonzero(p_x <= 0)
        if zero.size:
            raise InputError(f"Source symbols {zero.tolist()} have zero probability")
        matrices = []
        for j, d in enumerate(self.distortion, start=1):
            d = np.array(d, dtype=float)
            if d.ndim != 2 or d.shape[0] != p_x.shape[0]:
                raise InputError(f"Distortion matrix {j} must have shape (|X|, |Xhat_{j}|)")
            if not np.all(np.isfinite(d)) or np.any(d < 0):
                raise InputError(f"Distortion matrix {j} must be finite and non-negative")
            d.setflags(write=False)
            matrices.append(d)
        object.__setattr__(self, "distortion", tuple(matrices))

    @property
    def k(self) -> int:
        return len(self.distortion)

    @property
    def x_size(self) -> int:
        return self.joint.shape[0]

    @property
    def y_sizes(self) -> tuple[int, ...]:
        return self.joint.shape[1:]

    @property
    def xhat_sizes(self) -> tuple[int, ...]:
        return tuple(d.shape[1] for d in self.distortion)

    @property
    def d_bar(self) -> tuple[float, ...]:
        return tuple(float(d.max()) for d in self.distortion)

    @property
    def p_x(self) -> np.ndarray:
        return self.joint.values.sum(axis=tuple(range(1, self.k + 1)))

    @property
    def p_y_given_x(self) -> np.ndarray:
        """P(y^k | x), shape (|X|, |Y_1|, ..., |Y_k|)."""
        p_x = self.p_x
        return self.joint.values / p_x.reshape((-1,) + (1,) * self.k)

    def marginal_y_given_x(self, j: int) -> np.ndarray:
        """P(y_j | x) for user j (1-based), shape (|X|, |Y_j|)."""
        others = tuple(l for l in range(1, self.k + 1) if l != j)
        return self.p_y_given_x.sum(axis=others)


@dataclass(frozen=True)
class RateDistortionPoint:
    """Cumulative sum rates R^k (nats per symbol) and distortion levels D^k."""

    rates: tuple[float, ...]
    distortions: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        distortions = tuple(float(d) for d in self.distortions)
        if len(rates) != len(distortions) or not rates:
            raise InputError("rates and distortions must have the same positive length")
        if any(not np.isfinite(v) for v in rates + distortions):
            raise InputError("rates and distortions must be finite")
        if any(later < earlier - PMF_TOLERANCE for earlier, later in zip(rates, rates[1:])):
            raise InputError(f"Cumulative rates must be non-decreasing, got {rates}")
        if any(d < 0 for d in distortions):
            raise InputError(f"Distortion levels must be non-negative, got {distortions}")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "distortions", distortions)

    @property
    def k(self) -> int:
        return len(self.rates)

    @classmethod
    def from_stage_rates(cls, stage_rates: Sequence[float], distortions: Sequence[float]) -> "RateDistortionPoint":
        """Inverse of `stage_rates`: R_1 = r_1, R_j = r_j + sum_{l<j} R_l."""
        cumulative: list[float] = []
        for r in stage_rates:
            cumulative.append(float(r) + sum(cumulative))
        return cls(tuple(cumulative), tuple(distortions))

    def stage_rates(self) -> tuple[float, ...]:
        """R_1 and R_j - sum_{l<j} R_l, the per-stage budgets used by kappa and the code rate check."""
        return tuple(r - sum(self.rates[:j]) for j, r in enumerate(self.rates))


@dataclass(frozen=True)
class ParameterTuple:
    """(theta, mu, alpha, beta) for F, or (lambda, alpha, beta) when `mu` is None."""

    theta: float
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    mu: Optional[float] = None

    def __post_init__(self):
        validate_weights(self.alpha, self.beta)
        if not self.theta > 0:
            raise InputError("theta/lambda must be positive")
        if self.mu is not None and not self.mu > 0:
            raise InputError("mu must be positive")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    @property
    def is_tilde(self) -> bool:
        return self.mu is None

    @property
    def alpha_plus(self) -> float:
        return max(self.alpha)


@dataclass(frozen=True)
class AuxiliarySystem:
    """
    Test-channel chain Q_{W_j | X, W^{j-1}} plus one decoder per user.

    channels[j-1] has shape (|X|, |W_1|, ..., |W_{j-1}|, |W_j|).
    decoders[j-1] is either an integer table of shape (|W_1|, ..., |W_j|, |Y_j|)
    or a float array of shape (|W_1|, ..., |W_j|, |Y_j|, |Xhat_j|).
    """

    channels: tuple[np.ndarray, ...]
    decoders: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.channels) != len(self.decoders) or not self.channels:
            raise InputError("One channel and one decoder per user are required")
        channels, decoders = [], []
        x_size = np.asarray(self.channels[0]).shape[0]
        for j, channel in enumerate(self.channels, start=1):
            channel = np.array(channel, dtype=float)
            if channel.ndim != j + 1 or channel.shape[0] != x_size:
                raise InputError(f"Channel {j} must have shape (|X|, |W_1|..|W_{j}|)")
            if j > 1 and channel.shape[1:-1] != tuple(c.shape[-1] for c in channels):
                raise InputError(f"Channel {j} conditions on the wrong W sizes")
            if np.any(channel < 0) or np.max(np.abs(channel.sum(axis=-1) - 1.0)) > PMF_TOLERANCE:
                raise InputError(f"Channel {j} rows must be pmfs")
            channel.setflags(write=False)
            channels.append(channel)
        w_sizes = tuple(c.shape[-1] for c in channels)
        for j, decoder in enumerate(self.decoders, start=1):
            decoder = np.array(decoder)
            if np.issubdtype(decoder.dtype, np.integer):
                if decoder.shape[:j] != w_sizes[:j] or decoder.ndim != j + 1:
                    raise InputError(f"Decoder table {j} must have shape (|W_1|..|W_{j}|, |Y_{j}|)")
                if np.any(decoder < 0):
                    raise InputError(f"Decoder table {j} has negative outputs")
            else:
                decoder = decoder.astype(float)
                if decoder.shape[:j] != w_sizes[:j] or decoder.ndim != j + 2:
                    raise InputError(f"Stochastic decoder {j} must have shape (|W_1|..|W_{j}|, |Y_{j}|, |Xhat_{j}|)")
                if np.any(decoder < 0) or np.max(np.abs(decoder.sum(axis=-1) - 1.0)) > PMF_TOLERANCE:
                    raise InputError(f"Stochastic decoder {j} rows must be pmfs")
            decoder.setflags(write=False)
            decoders.append(decoder)
        object.__setattr__(self, "channels", tuple(channels))
        object.__setattr__(self, "decoders", tuple(decoders))

    @property
    def k(self) -> int:
        return len(self.channels)

    @property
    def w_sizes(self) -> tuple[int, ...]:
        return tuple(c.shape[-1] for c in self.channels)

    def is_deterministic(self, j: int) -> bool:
        return np.issubdtype(self.decoders[j - 1].dtype, np.integer)

    def decoder_conditional(self, j: int, xhat_size: int) -> np.ndarray:
        """Q(xhat_j | w^j, y_j) as a float array; tables become 0/1 rows."""
        decoder = self.decoders[j - 1]
        if not self.is_deterministic(j):
            return np.array(decoder)
        if decoder.max() >= xhat_size:
            raise InputError(f"Decoder table {j} outputs symbols outside Xhat_{j}")
        return np.eye(xhat_size)[decoder]

    def decoder_table(self, j: int) -> np.ndarray:
        """Deterministic table for user j; stochastic rows take their most likely output."""
        decoder = self.decoders[j - 1]
        if self.is_deterministic(j):
            return np.array(decoder)
        return np.argmax(decoder, axis=-1)


@dataclass(frozen=True)
class FreeJoint:
    """An unconstrained joint Q_T over T, the search space of the inner minimum of Omega."""

    joint: JointPmf

    def __post_init__(self):
        k = (len(self.joint.axes) - 1) // 3 if (len(self.joint.axes) - 1) % 3 == 0 else 0
        if k < 1 or self.joint.axes != t_axes(k):
            raise InputError(f"FreeJoint axes must be {t_axes(max(k, 1))}, got {self.joint.axes}")

    @property
    def k(self) -> int:
        return (len(self.joint.axes) - 1) // 3

    @property
    def w_sizes(self) -> tuple[int, ...]:
        k = self.k
        return self.joint.shape[1 + k: 1 + 2 * k]

    @property
    def values(self) -> np.ndarray:
        return self.joint.values
