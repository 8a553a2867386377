# app/core/simulator.py
"""
Concrete (n, M^k) codes with causal decoders, and their non-excess-distortion
probability by exact enumeration or Monte Carlo.

Sequences are indexed lexicographically with the first symbol most significant.
"""
import itertools
import logging
import math
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError
from scipy.stats import beta as beta_dist

from app.core.region import source_channel_joint
from app.exceptions import BudgetExceededError, InputError
from app.models.code import Code, DecoderKind, UserDecoder, all_sequences, sequence_index
from app.models.problem import AuxiliarySystem, RateDistortionPoint, SourceProblem
from app.models.results import EvaluationReport, ExponentResult
from app.schema.code_schema import CodeDocument, DecoderDocument, Provenance
from app.schema.options_schema import SolverOptions
from app.utils.hashing import array_digest
from app.utils.parallel import ordered_map, spawn_generators
from app.utils.rational import integer_threshold, rationalize_distortions

logger = logging.getLogger(__name__)

THRESHOLD_SLACK = 1e-9
RATE_SLACK = 1e-9
FALLBACK_SAMPLES = 100000


def bound_constant(k: int) -> int:
    return 2 * k + 3


def code_rate_ok(code: Code, point: RateDistortionPoint) -> bool:
    """log M_1 <= n R_1 and log M_j <= n (R_j - sum_{l<j} R_l)."""
    if point.k != code.k:
        return False
    return all(
        math.log(m) <= code.n * r + RATE_SLACK
        for m, r in zip(code.m_sizes, point.stage_rates())
    )


def message_sizes(point: RateDistortionPoint, n: int) -> tuple[int, ...]:
    """Largest message sets meeting the rate hypothesis at blocklength n."""
    return tuple(max(1, math.floor(math.exp(n * r) + 1e-9)) for r in point.stage_rates())


# ===================== CODE CONSTRUCTION =====================

def _broadcast_words(codebooks: Sequence[np.ndarray], m_sizes: tuple[int, ...], n: int) -> list[np.ndarray]:
    """Stage codebooks broadcast to shape (M_1..M_k, n)."""
    k = len(m_sizes)
    out = []
    for l, book in enumerate(codebooks, start=1):
        shaped = book.reshape(book.shape[:-1] + (1,) * (k - l) + (n,))
        out.append(np.broadcast_to(shaped, m_sizes + (n,)))
    return out


def random_code(problem: SourceProblem, aux: AuxiliarySystem, n: int, m_sizes: Sequence[int],
                seed: int, point: Optional[RateDistortionPoint] = None,
                options: Optional[SolverOptions] = None) -> Code:
    """
    Superposition codebooks drawn from the test-channel chain, joint
    maximum-likelihood encoding and the auxiliary system's symbolwise decoders.
    A stage whose message set covers every W_j sequence lists them all.
    """
    options = options or SolverOptions()
    k = problem.k
    m_sizes = tuple(int(m) for m in m_sizes)
    if aux.k != k or len(m_sizes) != k:
        raise InputError(f"Expected {k} users in the auxiliary system and message sizes")
    x_size = problem.x_size
    if x_size ** n * int(np.prod(m_sizes)) > options.enumeration_budget:
        raise BudgetExceededError(
            f"Encoder table of {x_size ** n} x {int(np.prod(m_sizes))} likelihoods exceeds the budget",
            hint="lower n or the rates",
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n,)))

    qxw = source_channel_joint(problem, aux.channels)
    codebooks: list[np.ndarray] = []
    for j in range(1, k + 1):
        marg = qxw.sum(axis=(0,) + tuple(range(j + 1, k + 1)))
        prev = marg.sum(axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(prev > 0, marg / np.where(prev > 0, prev, 1.0), 1.0 / marg.shape[-1])
        shape = m_sizes[:j] + (n,)
        prefix_words = [
            np.broadcast_to(book.reshape(book.shape[:-1] + (1,) * (j - l) + (n,)), shape)
            for l, book in enumerate(codebooks, start=1)
        ]
        probs = cond[tuple(prefix_words)] if prefix_words else np.broadcast_to(cond, shape + cond.shape)
        cumulative = np.cumsum(probs, axis=-1)
        draws = rng.random(shape)
        book = np.minimum((draws[..., None] > cumulative).sum(axis=-1), cond.shape[-1] - 1)
        w_size = aux.w_sizes[j - 1]
        if m_sizes[j - 1] >= w_size ** n:
            book[..., : w_size ** n, :] = all_sequences(w_size, n)
        codebooks.append(book.astype(np.int64))

    with np.errstate(divide="ignore", invalid="ignore"):
        log_q = np.log(qxw / problem.p_x.reshape((-1,) + (1,) * k))
    words = _broadcast_words(codebooks, m_sizes, n)
    likelihood = log_q[(slice(None),) + tuple(words)]
    x_seqs = all_sequences(x_size, n)
    score = np.zeros((x_seqs.shape[0],) + m_sizes)
    for i in range(n):
        score += likelihood[..., i][x_seqs[:, i]]
    flat = np.nan_to_num(score, nan=-np.inf).reshape(x_seqs.shape[0], -1)
    encoder = np.array(np.unravel_index(np.argmax(flat, axis=1), m_sizes)).T

    decoders = tuple(
        UserDecoder(DecoderKind.SYMBOLWISE, table=aux.decoder_table(j)) for j in range(1, k + 1)
    )
    code = Code(
        n=n, m_sizes=m_sizes, encoder=encoder, codebooks=tuple(codebooks), decoders=decoders, seed=seed,
        provenance={"aux_sha256": array_digest(*aux.channels, *aux.decoders)},
    )
    if point is not None and not code_rate_ok(code, point):
        raise InputError(f"Message sizes {m_sizes} violate the rate hypothesis at n={n}")
    return code


# ===================== CAUSAL DP DECODER =====================

def _zero_plan(levels: int, y_size: int) -> list[np.ndarray]:
    return [np.zeros(y_size ** (t + 1), dtype=np.int64) for t in range(levels)]


def dp_decoder(problem: SourceProblem, code: Code, j: int, level: float,
               options: Optional[SolverOptions] = None) -> UserDecoder:
    """
    Optimal causal policy for user j alone: for each message prefix s^j,
    backward induction over y-histories maximising P(sum_i d_j <= n D_j).
    The state carries the posterior mass over future source symbols and the
    integer accumulated distortion.
    """
    options = options or SolverOptions()
    n = code.n
    ints, denominator = rationalize_distortions([problem.distortion[j - 1]])
    d = ints[0]
    limit = integer_threshold(level, n, denominator)
    x_size, y_size = problem.x_size, problem.y_sizes[j - 1]
    xhat_size = problem.xhat_sizes[j - 1]
    messages = code.m_sizes[:j]
    count = int(np.prod(messages))
    states = count * sum((y_size * xhat_size) ** (i + 1) for i in range(n)) * max(limit + 1, 1)
    if states > options.dp_budget:
        raise BudgetExceededError(
            f"Causal DP for user {j} needs about {states} states (budget {options.dp_budget})",
            hint="keep the symbolwise decoder",
        )
    tables = [np.zeros(messages + (y_size ** (i + 1),), dtype=np.int64) for i in range(n)]
    if limit < 0:
        return UserDecoder(DecoderKind.POLICY, tables=tuple(tables))

    p_y = problem.marginal_y_given_x(j)
    x_seqs = all_sequences(x_size, n)
    p_xn = np.prod(problem.p_x[x_seqs], axis=1)
    sent = np.ravel_multi_index(tuple(code.encoder[:, l] for l in range(j)), messages)

    def solve(i: int, mass: np.ndarray) -> tuple[float, list[np.ndarray]]:
        if i == n:
            return float(mass.sum()), []
        by_symbol = mass.reshape(x_size, -1, limit + 1)
        choices = np.zeros(y_size, dtype=np.int64)
        children: list[list[np.ndarray]] = []
        total = 0.0
        for y in range(y_size):
            observed = by_symbol * p_y[:, y][:, None, None]
            best_value, best_plan = 0.0, _zero_plan(n - i - 1, y_size)
            if observed.any():
                best_value = -1.0
                for xhat in range(xhat_size):
                    shifted = np.zeros(observed.shape[1:])
                    for x in range(x_size):
                        step = int(d[x, xhat])
                        if step <= limit:
                            shifted[:, step:] += observed[x, :, : limit + 1 - step]
                    if shifted.any():
                        value, plan = solve(i + 1, shifted)
                    else:
                        value, plan = 0.0, _zero_plan(n - i - 1, y_size)
                    if value > best_value:
                        best_value, best_plan, choices[y] = value, plan, xhat
            total += best_value
            children.append(best_plan)
        plan = [choices] + [
            np.concatenate([child[t] for child in children]) for t in range(n - i - 1)
        ]
        return total, plan

    for s_flat in range(count):
        weights = np.where(sent == s_flat, p_xn, 0.0)
        if not weights.any():
            continue
        mass = np.zeros((x_seqs.shape[0], limit + 1))
        mass[:, 0] = weights
        _, plan = solve(0, mass)
        s = np.unravel_index(s_flat, messages)
        for i in range(n):
            tables[i][s] = plan[i]
    return UserDecoder(DecoderKind.POLICY, tables=tuple(tables))


def with_dp_decoders(problem: SourceProblem, code: Code, levels: Sequence[float],
                     options: Optional[SolverOptions] = None) -> Code:
    """Replace each user's decoder by its DP policy where the budget allows."""
    decoders = list(code.decoders)
    for j in range(1, code.k + 1):
        try:
            decoders[j - 1] = dp_decoder(problem, code, j, levels[j - 1], options)
        except (BudgetExceededError, InputError) as e:
            logger.warning(f"User {j} keeps its symbolwise decoder: {e}")
    return replace(code, decoders=tuple(decoders))


# ===================== EVALUATION =====================

def _side_information_given(problem: SourceProblem, x_seq: np.ndarray) -> np.ndarray:
    """P(y_1^n, ..., y_k^n | x^n) with axis j over the lexicographic index of y_j^n."""
    cond = problem.p_y_given_x
    k = problem.k
    table = np.ones((1,) * k)
    for x in x_seq:
        current = cond[x]
        expanded = table.reshape(tuple(itertools.chain.from_iterable((a, 1) for a in table.shape)))
        factor = current.reshape(tuple(itertools.chain.from_iterable((1, b) for b in current.shape)))
        table = (expanded * factor).reshape(tuple(a * b for a, b in zip(table.shape, current.shape)))
    return table


def _report_kinds(code: Code) -> tuple[str, ...]:
    return tuple(decoder.kind.value for decoder in code.decoders)


def exact_pc(problem: SourceProblem, code: Code, levels: Sequence[float],
             options: Optional[SolverOptions] = None) -> EvaluationReport:
    """Full enumeration of (x^n, y^k sequences)."""
    options = options or SolverOptions()
    k, n = problem.k, code.n
    cells = problem.x_size ** n * int(np.prod([y ** n for y in problem.y_sizes]))
    if cells > options.enumeration_budget:
        raise BudgetExceededError(
            f"{cells} source and side-information sequences exceed the enumeration budget",
            hint="use Monte Carlo mode",
        )
    x_seqs = all_sequences(problem.x_size, n)
    p_xn = np.prod(problem.p_x[x_seqs], axis=1)
    y_seqs = [all_sequences(y, n) for y in problem.y_sizes]
    reconstructions: dict[tuple[int, int], np.ndarray] = {}

    pc = 0.0
    marginal_success = np.zeros(k)
    distortion_sums = np.zeros(k)
    for x_index, x_seq in enumerate(x_seqs):
        if p_xn[x_index] == 0:
            continue
        messages = code.encoder[x_index]
        side = _side_information_given(problem, x_seq)
        ok_all = np.ones(side.shape, dtype=bool)
        for j in range(1, k + 1):
            key = (j, int(np.ravel_multi_index(tuple(messages[:j]), code.m_sizes[:j])))
            if key not in reconstructions:
                rows = np.broadcast_to(messages, (y_seqs[j - 1].shape[0], k))
                reconstructions[key] = code.decode_batch(j, rows, y_seqs[j - 1])
            xhat = reconstructions[key]
            totals = problem.distortion[j - 1][x_seq[None, :], xhat].sum(axis=1)
            ok = totals <= n * levels[j - 1] + THRESHOLD_SLACK
            marginal = side.sum(axis=tuple(a for a in range(k) if a != j - 1))
            marginal_success[j - 1] += p_xn[x_index] * float(np.sum(marginal * ok))
            distortion_sums[j - 1] += p_xn[x_index] * float(np.sum(marginal * totals)) / n
            shape = [1] * k
            shape[j - 1] = ok.size
            ok_all = ok_all & ok.reshape(shape)
        pc += p_xn[x_index] * float(np.sum(side * ok_all))

    pc = min(max(pc, 0.0), 1.0)
    return EvaluationReport(
        pc=pc,
        pe=1.0 - pc,
        marginal_excess=tuple(float(1.0 - s) for s in marginal_success),
        expected_distortions=tuple(float(v) for v in distortion_sums),
        exact=True,
        n=n,
        m_sizes=code.m_sizes,
        decoder_kinds=_report_kinds(code),
    )


def clopper_pearson(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval."""
    tail = (1.0 - confidence) / 2
    lower = 0.0 if successes == 0 else float(beta_dist.ppf(tail, successes, trials - successes + 1))
    upper = 1.0 if successes == trials else float(beta_dist.ppf(1 - tail, successes + 1, trials - successes))
    return lower, upper


def mc_pc(problem: SourceProblem, code: Code, levels: Sequence[float], samples: int, seed: int,
          options: Optional[SolverOptions] = None) -> EvaluationReport:
    """i.i.d. sampling of (x^n, y^k sequences) in seeded chunks, aggregated in chunk order."""
    options = options or SolverOptions()
    if samples < 1:
        raise InputError("samples must be at least 1")
    k, n = problem.k, code.n
    flat_joint = problem.joint.values.ravel()
    sizes = [options.mc_chunk] * (samples // options.mc_chunk)
    if samples % options.mc_chunk:
        sizes.append(samples % options.mc_chunk)
    generators = spawn_generators(seed, len(sizes), key=(n,))

    def run(job: tuple[int, np.random.Generator]) -> tuple[int, np.ndarray, np.ndarray]:
        size, rng = job
        draws = rng.choice(flat_joint.size, size=(size, n), p=flat_joint)
        symbols = np.unravel_index(draws, problem.joint.shape)
        x = symbols[0]
        messages = code.encode(sequence_index(x, problem.x_size))
        ok_all = np.ones(size, dtype=bool)
        ok_counts = np.zeros(k, dtype=np.int64)
        distortion = np.zeros(k)
        for j in range(1, k + 1):
            xhat = code.decode_batch(j, messages, symbols[j])
            totals = problem.distortion[j - 1][x, xhat].sum(axis=1)
            ok = totals <= n * levels[j - 1] + THRESHOLD_SLACK
            ok_counts[j - 1] = int(ok.sum())
            distortion[j - 1] = float(totals.sum()) / n
            ok_all &= ok
        return int(ok_all.sum()), ok_counts, distortion

    results = ordered_map(run, list(zip(sizes, generators)), options.n_jobs)
    successes = sum(r[0] for r in results)
    ok_counts = np.sum([r[1] for r in results], axis=0)
    distortion = np.sum([r[2] for r in results], axis=0)
    pc = successes / samples
    # every reconstruction meets levels at or above the maximal distortion, so P_c is exactly 1
    certain = all(level >= bar for level, bar in zip(levels, problem.d_bar))
    interval = (1.0, 1.0) if certain else clopper_pearson(successes, samples, options.confidence)
    return EvaluationReport(
        pc=pc,
        pe=1.0 - pc,
        marginal_excess=tuple(float(1.0 - c / samples) for c in ok_counts),
        expected_distortions=tuple(float(v / samples) for v in distortion),
        exact=False,
        interval=interval,
        samples=samples,
        n=n,
        m_sizes=code.m_sizes,
        decoder_kinds=_report_kinds(code),
    )


def evaluate_code(problem: SourceProblem, code: Code, levels: Sequence[float], seed: int,
                  samples: int = 0, options: Optional[SolverOptions] = None) -> EvaluationReport:
    """Exact enumeration when it fits the budget and no sample count is forced, Monte Carlo otherwise."""
    options = options or SolverOptions()
    if samples <= 0:
        try:
            return exact_pc(problem, code, levels, options)
        except BudgetExceededError as e:
            logger.warning(f"{e}; falling back to {FALLBACK_SAMPLES} Monte Carlo samples")
            samples = FALLBACK_SAMPLES
    return mc_pc(problem, code, levels, samples, seed, options)


# ===================== BOUND CHECKS =====================

def verify_bound(problem: SourceProblem, code: Code, point: RateDistortionPoint, exponent: ExponentResult,
                 report: Optional[EvaluationReport] = None,
                 options: Optional[SolverOptions] = None) -> EvaluationReport:
    """P_c <= (2k+3) exp(-n F); Monte Carlo reports compare the upper interval end."""
    if not code_rate_ok(code, point):
        raise InputError(f"Code with M={code.m_sizes} at n={code.n} violates the rate hypothesis for {point.rates}")
    report = report or exact_pc(problem, code, point.distortions, options)
    bound = bound_constant(problem.k) * math.exp(-code.n * exponent.F)
    observed = report.pc if report.exact else report.interval[1]
    return replace(report, bound=bound, bound_satisfied=bool(observed <= bound + THRESHOLD_SLACK))


def distortion_criteria_check(problem: SourceProblem, code: Code, levels: Sequence[float],
                              report: Optional[EvaluationReport] = None,
                              options: Optional[SolverOptions] = None) -> tuple[bool, ...]:
    """E[d_j] <= D_j + d_bar_j P_{e,j} per user."""
    report = report or exact_pc(problem, code, levels, options)
    return tuple(
        bool(mean <= level + d_bar * excess + 1e-12)
        for mean, level, d_bar, excess in zip(
            report.expected_distortions, levels, problem.d_bar, report.marginal_excess
        )
    )


def verify_sweep(problem: SourceProblem, point: RateDistortionPoint, exponent: ExponentResult,
                 aux: AuxiliarySystem, n_values: Sequence[int], seed: int,
                 options: Optional[SolverOptions] = None, samples: int = 0,
                 use_dp: bool = True) -> list[EvaluationReport]:
    """Random code at the largest admissible message sizes per n, DP-upgraded, checked against the bound."""
    options = options or SolverOptions()
    rows = []
    for n in n_values:
        code = random_code(problem, aux, n, message_sizes(point, n), seed, point, options)
        if use_dp:
            code = with_dp_decoders(problem, code, point.distortions, options)
        report = evaluate_code(problem, code, point.distortions, seed, samples, options)
        row = verify_bound(problem, code, point, exponent, report, options)
        logger.info(f"n={n}: P_c={row.pc:.6g}, bound={row.bound:.6g}, satisfied={row.bound_satisfied}")
        rows.append(row)
    return rows


# ===================== EXPORT / IMPORT =====================

def export_code(code: Code, problem_sha256: Optional[str] = None) -> str:
    document = CodeDocument(
        n=code.n,
        m_sizes=list(code.m_sizes),
        encoder=code.encoder.tolist(),
        codebooks=[book.tolist() for book in code.codebooks],
        decoders=[
            DecoderDocument(
                kind=decoder.kind,
                table=decoder.table.tolist() if decoder.table is not None else None,
                tables=[t.tolist() for t in decoder.tables],
            )
            for decoder in code.decoders
        ],
        seed=code.seed,
        provenance=Provenance(
            problem_sha256=problem_sha256 or code.provenance.get("problem_sha256"),
            aux_sha256=code.provenance.get("aux_sha256"),
        ),
    )
    return document.model_dump_json(indent=2)


def import_code(text: str) -> Code:
    try:
        document = CodeDocument.model_validate_json(text)
    except ValidationError as e:
        raise InputError(f"Invalid code document: {e}") from e
    decoders = tuple(
        UserDecoder(
            kind=d.kind,
            table=np.asarray(d.table) if d.table is not None else None,
            tables=tuple(np.asarray(t) for t in d.tables),
        )
        for d in document.decoders
    )
    return Code(
        n=document.n,
        m_sizes=tuple(document.m_sizes),
        encoder=np.asarray(document.encoder),
        codebooks=tuple(np.asarray(book) for book in document.codebooks),
        decoders=decoders,
        seed=document.seed,
        provenance=document.provenance.model_dump(exclude_none=True),
    )
