# app/core/region.py
"""
Rate-distortion region through its supporting hyperplanes.

For weights (alpha, beta) the hyperplane value is the minimum over test-channel
chains of alpha_1 I(X;W_1) + sum_j alpha_j I(X;W_j|W^{j-1}) + sum_j beta_j E[d_j].
The decoder part of that objective is linear in Q(xhat_j | w^j, y_j), so every
evaluation picks the best decoder cell by cell and only the channels are searched.
"""
import itertools
import logging
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from app.core.problem import kappa, w_caps
from app.exceptions import BudgetExceededError, ConvergenceError, InputError
from app.models.distribution import Pmf
from app.models.problem import AuxiliarySystem, RateDistortionPoint, SourceProblem, validate_weights
from app.models.results import HyperplaneValue, MembershipReport, SolverStatus, Verdict
from app.schema.options_schema import SolverOptions
from app.utils.lattice import compositions, lattice_size, neighbours, simplex_grid
from app.utils.optimizer import StartResult, best_of, logits_from_pmf, multistart, polish
from app.utils.parallel import ordered_map, spawn_generators

logger = logging.getLogger(__name__)


def region_caps(problem: SourceProblem, options: SolverOptions) -> tuple[int, ...]:
    return w_caps(problem, options.cap_scheme, options.w_caps)


# ===================== OBJECTIVE PIECES =====================

def channel_shapes(x_size: int, caps: Sequence[int]) -> list[tuple[int, ...]]:
    return [(x_size,) + tuple(caps[:j]) for j in range(1, len(caps) + 1)]


def channels_from_logits(z: np.ndarray, shapes: Sequence[tuple[int, ...]]) -> list[np.ndarray]:
    out, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        out.append(softmax(z[offset: offset + size].reshape(shape), axis=-1))
        offset += size
    return out


def source_channel_joint(problem: SourceProblem, channels: Sequence[np.ndarray]) -> np.ndarray:
    """Q(x, w_1..w_k) = P_X(x) prod_j Q(w_j | x, w^{j-1})."""
    k = len(channels)
    values = problem.p_x.reshape((-1,) + (1,) * k)
    for j, channel in enumerate(channels, start=1):
        values = values * channel.reshape(channel.shape + (1,) * (k - j))
    return values


def _prefix(qxw: np.ndarray, j: int) -> np.ndarray:
    """Q(x, w^j) from Q(x, w^k)."""
    later = tuple(range(1 + j, qxw.ndim))
    return qxw.sum(axis=later) if later else qxw


def conditional_entropy_x(qxw: np.ndarray, j: int) -> float:
    """H(X | W^j); j=0 gives H(X)."""
    q = _prefix(qxw, j)
    qw = q.sum(axis=0, keepdims=True)
    mask = q > 0
    ratio = q[mask] / np.broadcast_to(qw, q.shape)[mask]
    return float(-np.sum(q[mask] * np.log(ratio)))


def decoder_costs(problem: SourceProblem, qxw: np.ndarray, j: int) -> np.ndarray:
    """sum_x Q(x, w^j) P(y_j | x) d_j(x, xhat), shape (|W_1|..|W_j|, |Y_j|, |Xhat_j|)."""
    q = _prefix(qxw, j)
    p_y = problem.marginal_y_given_x(j)
    joint = q[..., None] * p_y.reshape((p_y.shape[0],) + (1,) * j + (p_y.shape[1],))
    return np.tensordot(joint, problem.distortion[j - 1], axes=([0], [0]))


def closed_form_decoder(problem: SourceProblem, qxw: np.ndarray, j: int) -> tuple[np.ndarray, float]:
    """Per (w^j, y_j) cell the reconstruction with least expected distortion; ties to the lowest index."""
    costs = decoder_costs(problem, qxw, j)
    table = np.argmin(costs, axis=-1)
    return table, float(np.take_along_axis(costs, table[..., None], axis=-1).sum())


def decoder_distortion(problem: SourceProblem, qxw: np.ndarray, j: int, table: np.ndarray) -> float:
    """E[d_j] when user j decodes with `table`."""
    costs = decoder_costs(problem, qxw, j)
    return float(np.take_along_axis(costs, np.asarray(table)[..., None], axis=-1).sum())


def evaluate_channels(problem: SourceProblem, channels: Sequence[np.ndarray],
                      alpha: Sequence[float], beta: Sequence[float]) -> tuple[float, list[np.ndarray]]:
    """Hyperplane objective of a channel chain with closed-form decoders."""
    qxw = source_channel_joint(problem, channels)
    total = 0.0
    entropies = [conditional_entropy_x(qxw, j) for j in range(len(channels) + 1)]
    decoders = []
    for j in range(1, len(channels) + 1):
        if alpha[j - 1] > 0:
            total += alpha[j - 1] * max(entropies[j - 1] - entropies[j], 0.0)
        table, distortion = closed_form_decoder(problem, qxw, j)
        decoders.append(table)
        if beta[j - 1] > 0:
            total += beta[j - 1] * distortion
    return total, decoders


def enumerate_decoders(problem: SourceProblem, w_sizes: Sequence[int], j: int,
                       budget: int) -> Iterator[np.ndarray]:
    """Every deterministic map (W^j, Y_j) -> Xhat_j exactly once."""
    shape = tuple(w_sizes[:j]) + (problem.y_sizes[j - 1],)
    cells = int(np.prod(shape))
    xhat = problem.xhat_sizes[j - 1]
    count = xhat ** cells
    if count > budget:
        raise BudgetExceededError(
            f"{count} decoder tables for user {j} exceed the budget of {budget}",
            hint="use the closed-form decoder step instead",
        )

    def tables() -> Iterator[np.ndarray]:
        for outputs in itertools.product(range(xhat), repeat=cells):
            yield np.array(outputs, dtype=np.int64).reshape(shape)
    return tables()


# ===================== HYPERPLANE VALUE =====================

def _structured_starts(problem: SourceProblem, shapes: list[tuple[int, ...]]) -> list[np.ndarray]:
    """Constant auxiliaries, then copies of X in the first m stages where the cap allows."""
    x = problem.x_size
    starts = [np.zeros(sum(int(np.prod(s)) for s in shapes))]
    for m in range(1, len(shapes) + 1):
        pieces = []
        for j, shape in enumerate(shapes, start=1):
            if j <= m and shape[-1] >= x:
                rows = np.zeros(shape)
                for symbol in range(x):
                    rows[symbol, ..., symbol] = 1.0
                pieces.append(logits_from_pmf(rows).ravel())
            else:
                pieces.append(np.zeros(int(np.prod(shape))))
        starts.append(np.concatenate(pieces))
    return starts


def _grid_resolution(shapes: list[tuple[int, ...]], budget: int) -> int:
    best = 0
    for total in range(1, 65):
        count = 1
        for shape in shapes:
            rows = int(np.prod(shape[:-1]))
            count *= lattice_size(total, shape[-1]) ** rows
        if count > budget:
            break
        best = total
    return best


def _grid_channels(shapes: list[tuple[int, ...]], resolution: int) -> Iterator[list[np.ndarray]]:
    row_choices = []
    for shape in shapes:
        points = np.array(list(compositions(resolution, shape[-1])), dtype=float) / resolution
        row_choices.extend([points] * int(np.prod(shape[:-1])))
    for combo in itertools.product(*[range(len(c)) for c in row_choices]):
        rows = [row_choices[r][i] for r, i in enumerate(combo)]
        channels, offset = [], 0
        for shape in shapes:
            count = int(np.prod(shape[:-1]))
            channels.append(np.array(rows[offset: offset + count]).reshape(shape))
            offset += count
        yield channels


def _weights_key(alpha: Sequence[float], beta: Sequence[float]) -> tuple[int, ...]:
    return tuple(int(round(float(w) * 2 ** 20)) for w in (*alpha, *beta))


def hyperplane_value(problem: SourceProblem, alpha: Sequence[float], beta: Sequence[float],
                     options: Optional[SolverOptions] = None,
                     caps: Optional[Sequence[int]] = None) -> HyperplaneValue:
    options = options or SolverOptions()
    validate_weights(alpha, beta, problem.k)
    alpha = tuple(float(a) for a in alpha)
    beta = tuple(float(b) for b in beta)
    caps = tuple(caps) if caps is not None else region_caps(problem, options)
    shapes = channel_shapes(problem.x_size, caps)

    def objective(z: np.ndarray) -> float:
        return evaluate_channels(problem, channels_from_logits(z, shapes), alpha, beta)[0]

    size = sum(int(np.prod(s)) for s in shapes)
    rng = spawn_generators(options.seed, 1, key=_weights_key(alpha, beta))[0]
    starts = _structured_starts(problem, shapes)
    starts += [rng.normal(scale=2.0, size=size) for _ in range(options.multistarts)]
    results = multistart(objective, starts, options.max_iter)
    best = best_of(results)
    best_channels = channels_from_logits(best.x, shapes)
    status = SolverStatus.CONVERGED if best.success else SolverStatus.MULTISTART_BEST

    cells = problem.x_size * int(np.prod(problem.y_sizes)) * int(np.prod(caps)) * int(np.prod(problem.xhat_sizes))
    resolution = _grid_resolution(shapes, options.grid_budget) if cells <= options.oracle_max_cells else 0
    if resolution:
        scored = []
        for channels in _grid_channels(shapes, resolution):
            scored.append((evaluate_channels(problem, channels, alpha, beta)[0], len(scored), channels))
        scored.sort(key=lambda item: (item[0], item[1]))
        for value, _, channels in scored[: max(options.grid_polish, 1)]:
            if value < best.fun:
                best, best_channels = StartResult(np.array([]), value, True), channels
            if options.grid_polish:
                start = np.concatenate([logits_from_pmf(c).ravel() for c in channels])
                res = polish(objective, start, options.max_iter)
                if res.fun < best.fun:
                    best, best_channels = res, channels_from_logits(res.x, shapes)
        status = SolverStatus.GRID_CERTIFIED

    value, decoders = evaluate_channels(problem, best_channels, alpha, beta)
    warning = status == SolverStatus.MULTISTART_BEST
    if warning:
        logger.warning(f"Hyperplane solve for alpha={alpha}, beta={beta} did not converge; keeping best start")
    return HyperplaneValue(
        alpha=alpha,
        beta=beta,
        value=value,
        argmin=AuxiliarySystem(tuple(best_channels), tuple(decoders)),
        status=status,
        warning=warning,
    )


class HyperplaneTable:
    """Hyperplane values cached per weight node; they do not depend on the query point."""

    def __init__(self, problem: SourceProblem, options: Optional[SolverOptions] = None,
                 caps: Optional[Sequence[int]] = None):
        self.problem = problem
        self.options = options or SolverOptions()
        self.caps = tuple(caps) if caps is not None else region_caps(problem, self.options)
        self._cache: dict[tuple[int, ...], HyperplaneValue] = {}

    def __len__(self) -> int:
        return len(self._cache)

    def entries(self) -> list[HyperplaneValue]:
        return list(self._cache.values())

    def values(self, nodes: Sequence[np.ndarray]) -> list[HyperplaneValue]:
        k = self.problem.k
        pending: dict[tuple[int, ...], np.ndarray] = {}
        for node in nodes:
            key = _weights_key(node[:k], node[k:])
            if key not in self._cache and key not in pending:
                pending[key] = node
        solved = ordered_map(
            lambda node: hyperplane_value(self.problem, node[:k], node[k:], self.options, self.caps),
            list(pending.values()),
            self.options.n_jobs,
        )
        self._cache.update(zip(pending.keys(), solved))
        return [self._cache[_weights_key(node[:k], node[k:])] for node in nodes]

    def value(self, alpha: Sequence[float], beta: Sequence[float]) -> HyperplaneValue:
        return self.values([np.concatenate([alpha, beta]).astype(float)])[0]

    def margin(self, point: RateDistortionPoint) -> tuple[float, Optional[HyperplaneValue]]:
        """min over cached nodes of kappa - R^{(alpha, beta)}, first node wins ties."""
        best, witness = np.inf, None
        for entry in self._cache.values():
            gap = kappa(point, entry.alpha, entry.beta) - entry.value
            if gap < best:
                best, witness = gap, entry
        return float(best), witness


# ===================== MEMBERSHIP =====================

def membership(problem: SourceProblem, point: RateDistortionPoint,
               options: Optional[SolverOptions] = None,
               table: Optional[HyperplaneTable] = None) -> MembershipReport:
    options = options or SolverOptions()
    if point.k != problem.k:
        raise InputError(f"Point has {point.k} users, problem has {problem.k}")
    table = table or HyperplaneTable(problem, options)
    before = len(table)
    k = problem.k

    grid = list(simplex_grid(2 * k, options.weight_resolution))
    table.values(grid)
    margin, witness = table.margin(point)
    for round_ in range(1, options.refinements + 1):
        center = np.concatenate([witness.alpha, witness.beta])
        step = 1.0 / (options.weight_resolution * 2 ** round_)
        table.values(neighbours(center, step))
        margin, witness = table.margin(point)
    logger.info(f"Membership of {point}: margin {margin:.6g} after {len(table) - before} new nodes")

    if margin > options.boundary_band:
        verdict = Verdict.INSIDE
    elif margin < -options.boundary_band:
        verdict = Verdict.OUTSIDE
    else:
        verdict = Verdict.BOUNDARY
    return MembershipReport(
        point=point,
        verdict=verdict,
        margin=margin,
        witness_alpha=witness.alpha,
        witness_beta=witness.beta,
        nodes_evaluated=len(table) - before,
        witness=witness,
    )


def boundary_rate(problem: SourceProblem, distortions: Sequence[float],
                  options: Optional[SolverOptions] = None,
                  table: Optional[HyperplaneTable] = None, tol: float = 1e-6) -> float:
    """Smallest R_1 with (R_1, D_1) in the region (k=1), by bisection on the membership margin."""
    if problem.k != 1:
        raise InputError("boundary_rate is defined for single-user problems")
    options = options or SolverOptions()
    table = table or HyperplaneTable(problem, options)
    hi = float(np.log(problem.x_size))
    if membership(problem, RateDistortionPoint((hi,), tuple(distortions)), options, table).margin < -options.boundary_band:
        raise InputError(f"Distortion {tuple(distortions)} is not achievable at any rate")
    lo = 0.0
    for _ in range(60):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if membership(problem, RateDistortionPoint((mid,), tuple(distortions)), options, table).margin >= 0:
            hi = mid
        else:
            lo = mid
    return hi


# ===================== CLASSICAL ORACLE =====================

def _ba_iterate(log_px: np.ndarray, distortion: np.ndarray, slope: float,
                max_iter: int, tol: float) -> tuple[float, float]:
    """Blahut-Arimoto in the log domain at a fixed slope; returns (rate, distortion)."""
    xhat = distortion.shape[1]
    log_q = np.full(xhat, -np.log(xhat))
    previous = np.inf
    rate = np.inf
    for _ in range(max_iter):
        log_cond = log_q[None, :] - slope * distortion
        log_cond = log_cond - logsumexp(log_cond, axis=1, keepdims=True)
        log_q = logsumexp(log_px[:, None] + log_cond, axis=0)
        cond = np.exp(log_cond)
        weights = np.exp(log_px)[:, None] * cond
        rate = float(np.sum(weights * (log_cond - log_q[None, :])))
        if abs(rate - previous) < tol:
            return max(rate, 0.0), float(np.sum(weights * distortion))
        previous = rate
    raise ConvergenceError(f"Blahut-Arimoto did not converge at slope {slope}", rate)


def ba_reference(px: Pmf, distortion: np.ndarray, level: float,
                 max_iter: int = 20000, tol: float = 1e-9) -> float:
    """Classical R(D) in nats for a memoryless source without side information."""
    p = px.values
    d = np.asarray(distortion, dtype=float)
    d_min = float(np.sum(p * d.min(axis=1)))
    d_max = float(np.min(p @ d))
    if level < d_min - 1e-12:
        raise InputError(f"D={level} is below the minimum achievable distortion {d_min}")
    if level >= d_max:
        return 0.0
    with np.errstate(divide="ignore"):
        log_px = np.log(p)
    if level <= d_min + 1e-12:
        return _ba_iterate(log_px, d, 200.0, max_iter, tol)[0]

    lo, hi = 0.0, 1.0
    while _ba_iterate(log_px, d, hi, max_iter, tol)[1] > level:
        hi *= 2.0
        if hi > 2 ** 12:
            raise ConvergenceError(f"No slope reaches distortion {level}", float("nan"))
    rate = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        rate, dist = _ba_iterate(log_px, d, mid, max_iter, tol)
        if abs(dist - level) < 1e-12 or hi - lo < 1e-13:
            break
        if dist > level:
            lo = mid
        else:
            hi = mid
    return rate
