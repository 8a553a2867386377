from app.models.code import Code, DecoderKind, UserDecoder
from app.models.distribution import ConditionalPmf, JointPmf, Pmf
from app.models.problem import (
    AuxiliarySystem,
    CapScheme,
    FreeJoint,
    ParameterTuple,
    RateDistortionPoint,
    SourceProblem,
)
from app.models.results import (
    EvaluationReport,
    ExponentResult,
    HyperplaneValue,
    InnerMinimum,
    MembershipReport,
    OmegaEvaluation,
    SolverStatus,
    TildeExponent,
    Verdict,
)
