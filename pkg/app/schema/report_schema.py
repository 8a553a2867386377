# app/schema/report_schema.py
from typing import Dict, List, Optional

from pydantic import BaseModel

from app.models.problem import SourceProblem
from app.models.results import EvaluationReport, ExponentResult, MembershipReport, SolverStatus, Verdict


# ===== PROBLEM =====

class ProblemSummary(BaseModel):
    k: int
    x_size: int
    y_sizes: List[int]
    xhat_sizes: List[int]
    p_x: List[float]
    d_bar: List[float]

    @classmethod
    def from_problem(cls, problem: SourceProblem) -> "ProblemSummary":
        return cls(
            k=problem.k,
            x_size=problem.x_size,
            y_sizes=list(problem.y_sizes),
            xhat_sizes=list(problem.xhat_sizes),
            p_x=[float(p) for p in problem.p_x],
            d_bar=list(problem.d_bar),
        )


# ===== REGION =====

class MembershipResponse(BaseModel):
    rates_nats: List[float]
    distortions: List[float]
    verdict: Verdict
    margin_nats: float
    witness_alpha: List[float]
    witness_beta: List[float]
    witness_value_nats: Optional[float] = None
    witness_status: Optional[SolverStatus] = None
    nodes_evaluated: int

    @classmethod
    def from_report(cls, report: MembershipReport) -> "MembershipResponse":
        witness = report.witness
        return cls(
            rates_nats=list(report.point.rates),
            distortions=list(report.point.distortions),
            verdict=report.verdict,
            margin_nats=report.margin,
            witness_alpha=list(report.witness_alpha),
            witness_beta=list(report.witness_beta),
            witness_value_nats=witness.value if witness else None,
            witness_status=witness.status if witness else None,
            nodes_evaluated=report.nodes_evaluated,
        )


class BoundaryRow(BaseModel):
    distortion: float
    rate_nats: float
    reference_rate_nats: Optional[float] = None


# ===== EXPONENT =====

class ExponentResponse(BaseModel):
    rates_nats: List[float]
    distortions: List[float]
    F_nats: float
    tilde_F_nats: Optional[float] = None
    certificate_nats: float
    delta_nats: Optional[float] = None
    rho_nats2: Optional[float] = None
    theta: Optional[float] = None
    mu: Optional[float] = None
    alpha: Optional[List[float]] = None
    beta: Optional[List[float]] = None
    diagnostics: Dict = {}

    @classmethod
    def from_result(cls, result: ExponentResult) -> "ExponentResponse":
        argsup = result.argsup
        return cls(
            rates_nats=list(result.point.rates),
            distortions=list(result.point.distortions),
            F_nats=result.F,
            tilde_F_nats=result.tilde_f,
            certificate_nats=result.certificate,
            delta_nats=result.delta,
            rho_nats2=result.rho,
            theta=argsup.theta if argsup else None,
            mu=argsup.mu if argsup else None,
            alpha=list(argsup.alpha) if argsup else None,
            beta=list(argsup.beta) if argsup else None,
            diagnostics=result.diagnostics,
        )


# ===== SIMULATOR =====

class EvaluationResponse(BaseModel):
    n: Optional[int] = None
    m_sizes: List[int] = []
    decoder_kinds: List[str] = []
    pc: float
    pe: float
    exact: bool
    interval_low: Optional[float] = None
    interval_high: Optional[float] = None
    samples: Optional[int] = None
    marginal_excess: List[float]
    expected_distortions: List[float]
    bound: Optional[float] = None
    bound_satisfied: Optional[bool] = None
    distortion_criteria: Optional[List[bool]] = None

    @classmethod
    def from_report(cls, report: EvaluationReport,
                    criteria: Optional[tuple[bool, ...]] = None) -> "EvaluationResponse":
        low, high = report.interval if report.interval else (None, None)
        return cls(
            n=report.n,
            m_sizes=list(report.m_sizes),
            decoder_kinds=list(report.decoder_kinds),
            pc=report.pc,
            pe=report.pe,
            exact=report.exact,
            interval_low=low,
            interval_high=high,
            samples=report.samples,
            marginal_excess=list(report.marginal_excess),
            expected_distortions=list(report.expected_distortions),
            bound=report.bound,
            bound_satisfied=report.bound_satisfied,
            distortion_criteria=list(criteria) if criteria is not None else None,
        )
