# app/models/results.py
import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from app.models.distribution import JointPmf
from app.models.problem import AuxiliarySystem, FreeJoint, ParameterTuple, RateDistortionPoint


class SolverStatus(str, enum.Enum):
    CONVERGED = "converged"
    GRID_CERTIFIED = "grid-certified"
    MULTISTART_BEST = "multistart-best"


class Verdict(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary-indeterminate"


# ===== REGION =====

@dataclass(frozen=True)
class HyperplaneValue:
    """R^{(alpha,beta)} together with the auxiliary system attaining it."""
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    value: float
    argmin: AuxiliarySystem
    status: SolverStatus
    warning: bool = False


@dataclass(frozen=True)
class MembershipReport:
    point: RateDistortionPoint
    verdict: Verdict
    margin: float  # min over weights of kappa - R^{(alpha,beta)}; negative means outside
    witness_alpha: tuple[float, ...]
    witness_beta: tuple[float, ...]
    nodes_evaluated: int
    witness: Optional[HyperplaneValue] = None


# ===== EXPONENT =====

@dataclass(frozen=True)
class OmegaEvaluation:
    q: FreeJoint
    theta: float
    mu: float
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    omega: np.ndarray  # omega(t) on positive-mass cells, NaN elsewhere
    value: float

    def expected_omega(self) -> float:
        mask = self.q.values > 0
        return float(np.sum(self.q.values[mask] * self.omega[mask]))

    def recompute(self) -> float:
        """Omega from the stored cells alone."""
        if self.theta == 0:
            return 0.0
        mask = self.q.values > 0
        return float(-logsumexp(np.log(self.q.values[mask]) - self.theta * self.omega[mask]))


@dataclass(frozen=True)
class InnerMinimum:
    """Best joint found by a minimiser together with how it was certified."""
    joint: JointPmf
    value: float
    status: SolverStatus
    warning: bool = False


@dataclass(frozen=True)
class TildeExponent:
    value: float
    argsup: Optional[ParameterTuple]
    argmin: Optional[JointPmf]
    statuses: dict[str, int] = field(default_factory=dict)
    # best F over the (theta, mu) nodes mapped from the solved tilde nodes
    paired_f: float = 0.0
    paired_argsup: Optional[ParameterTuple] = None
    paired_argmin: Optional[FreeJoint] = None
    paired_solves: int = 0


@dataclass(frozen=True)
class ExponentResult:
    point: RateDistortionPoint
    F: float
    argsup: Optional[ParameterTuple]
    argmin: Optional[FreeJoint]
    tilde_f: Optional[float] = None
    certificate: float = 0.0
    rho: Optional[float] = None
    delta: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def updated(self, **changes) -> "ExponentResult":
        return replace(self, **changes)


# ===== SIMULATOR =====

@dataclass(frozen=True)
class EvaluationReport:
    pc: float
    pe: float
    marginal_excess: tuple[float, ...]
    expected_distortions: tuple[float, ...]
    exact: bool
    interval: Optional[tuple[float, float]] = None
    samples: Optional[int] = None
    bound: Optional[float] = None
    bound_satisfied: Optional[bool] = None
    n: Optional[int] = None
    m_sizes: tuple[int, ...] = ()
    decoder_kinds: tuple[str, ...] = ()
