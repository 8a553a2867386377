# app/core/exponent.py
"""
Strong converse exponent F and its lower-bound family F-tilde.

Axis positions in T = (X, Y_1..Y_k, W_1..W_k, Xhat_1..Xhat_k):
X is 0, Y_j is j, W_j is k + j and Xhat_j is 2k + j.
"""
import logging
from collections import Counter
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, logsumexp, softmax

from app.core.probability import log_marginal
from app.core.problem import induce_joint, induced_values, kappa, w_caps
from app.core.region import HyperplaneTable, channel_shapes, membership, region_caps
from app.exceptions import InputError, NumericalDomainError
from app.models.distribution import JointPmf
from app.models.problem import (
    AuxiliarySystem,
    FreeJoint,
    ParameterTuple,
    RateDistortionPoint,
    SourceProblem,
    t_axes,
    validate_weights,
)
from app.models.results import ExponentResult, InnerMinimum, OmegaEvaluation, SolverStatus, TildeExponent, Verdict
from app.schema.options_schema import SolverOptions
from app.utils.lattice import compositions, largest_resolution, neighbours, simplex_grid
from app.utils.optimizer import best_of, logits_from_pmf, multistart, polish
from app.utils.parallel import spawn_generators

logger = logging.getLogger(__name__)

ORDERING_SLACK = 1e-6


# ===================== LOG-LIKELIHOOD COMBINATIONS =====================

def _lcond(values: np.ndarray, target: Sequence[int], given: Sequence[int]) -> np.ndarray:
    """log Q(target | given), broadcastable to values.shape."""
    numerator = log_marginal(values, tuple(sorted(set(target) | set(given))))
    if not given:
        return numerator
    with np.errstate(invalid="ignore"):
        return numerator - log_marginal(values, tuple(sorted(given)))


def _trailing(array: np.ndarray, ndim: int) -> np.ndarray:
    return array.reshape(array.shape + (1,) * (ndim - array.ndim))


def _distortion_term(problem: SourceProblem, j: int, ndim: int) -> np.ndarray:
    k = problem.k
    d = problem.distortion[j - 1]
    shape = [1] * ndim
    shape[0], shape[2 * k + j] = d.shape
    return d.reshape(shape)


def _check_terms(terms: list[tuple[str, np.ndarray]], mask: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    total = np.zeros(shape)
    for name, term in terms:
        with np.errstate(invalid="ignore"):
            full = np.broadcast_to(term, shape)
            if not np.all(np.isfinite(full[mask])):
                raise NumericalDomainError(f"{name} is undefined on a positive-mass cell")
            total = total + np.where(mask, full, 0.0)
    return np.where(mask, total, np.nan)


@np.errstate(divide="ignore", invalid="ignore")
def omega_array(problem: SourceProblem, values: np.ndarray, mu: float,
                alpha: Sequence[float], beta: Sequence[float]) -> np.ndarray:
    """omega(t) on every positive-mass cell of `values` (an array over T); NaN elsewhere."""
    k = problem.k
    ndim = values.ndim
    xs, ys = [0], list(range(1, k + 1))
    ws = [k + j for j in range(1, k + 1)]
    xhats = [2 * k + j for j in range(1, k + 1)]
    log_px = _trailing(np.log(problem.p_x), ndim)
    log_py_x = _trailing(np.log(problem.p_y_given_x), ndim)

    terms: list[tuple[str, np.ndarray]] = [
        ("log Q_X/P_X", _lcond(values, xs, []) - log_px),
        ("log Q_{Y^k|XW^k}/P_{Y^k|X}", _lcond(values, ys, xs + ws) - log_py_x),
    ]
    rest = xs + ys[1:] + ws[1:]
    terms.append((
        "log Q_{XY^{k\\1}W^{k\\1}|Y_1W_1Xhat_1}/Q_{XY^{k\\1}W^{k\\1}|Y_1W_1}",
        _lcond(values, rest, [ys[0], ws[0], xhats[0]]) - _lcond(values, rest, [ys[0], ws[0]]),
    ))
    for j in range(2, k + 1):
        terms.append((
            f"log Q_{{Xhat_{j}|XY^kW^kXhat^{j - 1}}}/Q_{{Xhat_{j}|Y_{j}W^{j}}}",
            _lcond(values, [xhats[j - 1]], xs + ys + ws + xhats[: j - 1])
            - _lcond(values, [xhats[j - 1]], [ys[j - 1]] + ws[:j]),
        ))
    if mu > 0:
        if alpha[0] > 0:
            terms.append(("log Q_{X|W_1}/P_X", mu * alpha[0] * (_lcond(values, xs, ws[:1]) - log_px)))
        for j in range(2, k + 1):
            if alpha[j - 1] > 0:
                terms.append((
                    f"log Q_{{X|W^{j}}}/Q_{{X|W^{j - 1}}}",
                    mu * alpha[j - 1] * (_lcond(values, xs, ws[:j]) - _lcond(values, xs, ws[: j - 1])),
                ))
        for j in range(1, k + 1):
            if beta[j - 1] > 0:
                terms.append((f"d_{j}", mu * beta[j - 1] * _distortion_term(problem, j, ndim)))
    return _check_terms(terms, values > 0, values.shape)


def _neg_cgf(values: np.ndarray, omega: np.ndarray, theta: float) -> float:
    """-log sum_t values(t) exp(-theta omega(t)) over positive cells."""
    if theta == 0:
        return 0.0
    mask = values > 0
    return float(-logsumexp(np.log(values[mask]) - theta * omega[mask]))


def omega_cell(problem: SourceProblem, q: FreeJoint, mu: float, alpha: Sequence[float],
               beta: Sequence[float], t: Sequence[int]) -> float:
    t = tuple(t)
    if q.values[t] <= 0:
        raise InputError(f"Cell {t} has zero mass under q")
    return float(omega_values(problem, q, mu, alpha, beta)[t])


def omega_values(problem: SourceProblem, q: FreeJoint, mu: float,
                 alpha: Sequence[float], beta: Sequence[float]) -> np.ndarray:
    validate_weights(alpha, beta, problem.k)
    if mu < 0:
        raise InputError("mu must be non-negative")
    if q.k != problem.k or q.values.shape[0] != problem.x_size:
        raise InputError("Free joint does not match the problem")
    return omega_array(problem, q.values, mu, alpha, beta)


def big_omega(problem: SourceProblem, q: FreeJoint, theta: float, mu: float,
              alpha: Sequence[float], beta: Sequence[float]) -> OmegaEvaluation:
    """Omega(Q_T) = -log E_Q[exp(-theta omega(T))]."""
    if theta < 0:
        raise InputError("theta must be non-negative")
    omega = omega_values(problem, q, mu, alpha, beta)
    omega.setflags(write=False)
    return OmegaEvaluation(
        q=q, theta=float(theta), mu=float(mu),
        alpha=tuple(float(a) for a in alpha), beta=tuple(float(b) for b in beta),
        omega=omega, value=_neg_cgf(q.values, omega, theta),
    )


# ===================== FREE-JOINT MINIMUM =====================

def free_caps(problem: SourceProblem, options: SolverOptions) -> tuple[int, ...]:
    return w_caps(problem, options.free_cap_scheme, options.free_w_caps)


def free_shape(problem: SourceProblem, caps: Sequence[int]) -> tuple[int, ...]:
    return (problem.x_size,) + tuple(problem.y_sizes) + tuple(caps) + tuple(problem.xhat_sizes)


def support_mask(problem: SourceProblem, caps: Sequence[int]) -> np.ndarray:
    """Cells of T with P_{XY^k} > 0; the free joint never puts mass elsewhere."""
    shape = free_shape(problem, caps)
    positive = problem.joint.values > 0
    return np.broadcast_to(positive.reshape(positive.shape + (1,) * (len(shape) - positive.ndim)), shape)


def pad_w_axes(problem: SourceProblem, values: np.ndarray, caps: Sequence[int]) -> Optional[np.ndarray]:
    """Embed a joint over smaller W alphabets into the cap shape with zero padding, or None if it does not fit."""
    k = problem.k
    sizes = values.shape[1 + k: 1 + 2 * k]
    if any(s > c for s, c in zip(sizes, caps)):
        return None
    pad = [(0, 0)] * values.ndim
    for j, (s, c) in enumerate(zip(sizes, caps)):
        pad[1 + k + j] = (0, c - s)
    return np.pad(values, pad)


def min_big_omega(problem: SourceProblem, theta: float, mu: float,
                  alpha: Sequence[float], beta: Sequence[float],
                  options: Optional[SolverOptions] = None,
                  warm_starts: Sequence[np.ndarray] = (),
                  caps: Optional[Sequence[int]] = None,
                  multistarts: Optional[int] = None,
                  key: tuple[int, ...] = ()) -> InnerMinimum:
    """
    Approximate min over free joints of Omega. Warm starts are arrays over T
    (any W sizes up to the caps); each is evaluated exactly and then polished.
    """
    options = options or SolverOptions()
    validate_weights(alpha, beta, problem.k)
    caps = tuple(caps) if caps is not None else free_caps(problem, options)
    shape = free_shape(problem, caps)
    mask = support_mask(problem, caps)
    cells = int(mask.sum())
    multistarts = options.multistarts if multistarts is None else multistarts

    def unpack(z: np.ndarray) -> np.ndarray:
        values = np.zeros(shape)
        values[mask] = softmax(z)
        return values

    def evaluate(values: np.ndarray) -> float:
        return _neg_cgf(values, omega_array(problem, values, mu, alpha, beta), theta)

    def objective(z: np.ndarray) -> float:
        return evaluate(unpack(z))

    product_start = np.where(mask, problem.joint.values.reshape(problem.joint.shape + (1,) * (len(shape) - problem.k - 1)), 0.0)
    product_start = product_start / product_start.sum()
    if theta == 0:
        return InnerMinimum(JointPmf(t_axes(problem.k), product_start), 0.0, SolverStatus.CONVERGED)

    candidates: list[tuple[float, np.ndarray]] = []
    starts: list[np.ndarray] = []
    for warm in warm_starts:
        padded = pad_w_axes(problem, np.asarray(warm, dtype=float), caps)
        if padded is None:
            logger.info("Warm start exceeds the free-joint caps; skipped")
            continue
        padded = np.where(mask, padded, 0.0)
        padded = padded / padded.sum()
        candidates.append((evaluate(padded), padded))
        starts.append(logits_from_pmf(padded[mask]))
    starts.append(logits_from_pmf(product_start[mask]))
    rngs = spawn_generators(options.seed, 1, key=key)
    starts += [rngs[0].normal(scale=2.0, size=cells) for _ in range(multistarts)]

    results = multistart(objective, starts, options.max_iter, options.n_jobs)
    best_run = best_of(results)
    candidates.append((best_run.fun, unpack(best_run.x)))
    status = SolverStatus.CONVERGED if any(r.success for r in results) else SolverStatus.MULTISTART_BEST

    if options.omega_oracle and int(np.prod(shape)) <= options.oracle_max_cells and options.grid_budget > 0:
        resolution = largest_resolution(cells, options.grid_budget)
        if resolution:
            scored = []
            for point in compositions(resolution, cells):
                values = np.zeros(shape)
                values[mask] = np.asarray(point, dtype=float) / resolution
                scored.append((evaluate(values), len(scored), values))
            scored.sort(key=lambda item: (item[0], item[1]))
            for value, _, values in scored[: max(options.grid_polish, 1)]:
                candidates.append((value, values))
                if options.grid_polish:
                    res = polish(objective, logits_from_pmf(values[mask]), options.max_iter)
                    candidates.append((res.fun, unpack(res.x)))
            status = SolverStatus.GRID_CERTIFIED

    value, values = candidates[0]
    for candidate in candidates[1:]:
        if candidate[0] < value:
            value, values = candidate
    warning = status == SolverStatus.MULTISTART_BEST
    if warning:
        logger.warning(f"Inner minimum at theta={theta}, mu={mu} kept the best start without convergence")
    return InnerMinimum(JointPmf(t_axes(problem.k), values / values.sum()), float(value), status, warning)


# ===================== EXPONENT F =====================

def _weights_key(alpha: Sequence[float], beta: Sequence[float], *extra: int) -> tuple[int, ...]:
    return tuple(int(round(float(w) * 2 ** 20)) for w in (*alpha, *beta)) + tuple(extra)


def f_denominator(k: int, theta: float, mu: float, alpha: Sequence[float]) -> float:
    return 1.0 + (2 * k + 2) * theta + sum(2 * theta * mu * a for a in alpha)


def tilde_denominator(k: int, lam: float, alpha: Sequence[float]) -> float:
    return (2 * k + 3 + lam * max(alpha) + sum(lam * (2 * k + 3) * a for a in alpha[1:])
            + sum(2 * lam * a for a in alpha))


def tilde_to_f_parameters(lam: float, alpha: Sequence[float]) -> tuple[float, float]:
    """
    (theta, mu) whose F node dominates the F-tilde node at lambda:
    mu = lambda / (1 + lambda sum_{j>=2} alpha_j) and theta = 1 / (1 + mu max_j alpha_j).
    """
    mu = lam / (1.0 + lam * sum(alpha[1:]))
    return 1.0 / (1.0 + mu * max(alpha)), mu


def _normalise_last(array: np.ndarray) -> np.ndarray:
    totals = array.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = array / totals
    return np.where(totals > 0, out, 1.0 / array.shape[-1])


def sh_projection(problem: SourceProblem, values: np.ndarray) -> np.ndarray:
    """
    P_{XY^k} Q_{W^k|X} prod_j Q_{Xhat_j|Y_j W^j} for a joint Q over T: the channel
    chain sharing Q's test channel and decoders. Undefined conditionals become uniform.
    """
    k = problem.k
    ndim = values.ndim
    ws = [k + j for j in range(1, k + 1)]
    xw = values.sum(axis=tuple(a for a in range(ndim) if a not in [0] + ws))
    channels = [_normalise_last(xw.sum(axis=tuple(range(1 + j, 1 + k)))) for j in range(1, k + 1)]
    decoders = []
    for j in range(1, k + 1):
        keep = [j] + ws[:j] + [2 * k + j]
        marginal = values.sum(axis=tuple(a for a in range(ndim) if a not in keep))
        # (Y_j, W^j, Xhat_j) -> (W^j, Y_j, Xhat_j)
        decoders.append(_normalise_last(np.moveaxis(marginal, 0, j)))
    joint = induced_values(problem, channels, decoders)
    return joint / joint.sum()


def shared_caps(problem: SourceProblem, options: SolverOptions) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(region caps, free caps) with region caps clipped so region argmins embed into free joints."""
    free = free_caps(problem, options)
    region = tuple(min(r, f) for r, f in zip(region_caps(problem, options), free))
    return region, free


def _weight_sweep(problem: SourceProblem, options: SolverOptions, evaluate_node) -> tuple[int, Optional[np.ndarray]]:
    """Grid plus refinement rounds around the running argmax; returns (nodes, best node)."""
    k = problem.k
    seen: set[tuple[int, ...]] = set()
    best_node: Optional[np.ndarray] = None

    def visit(nodes):
        nonlocal best_node
        for node in nodes:
            key = _weights_key(node[:k], node[k:])
            if key in seen:
                continue
            seen.add(key)
            if evaluate_node(node):
                best_node = node

    visit(simplex_grid(2 * k, options.weight_resolution))
    for round_ in range(1, options.refinements + 1):
        if best_node is None:
            break
        visit(neighbours(best_node, 1.0 / (options.weight_resolution * 2 ** round_)))
    return len(seen), best_node


def exponent_F(problem: SourceProblem, point: RateDistortionPoint,
               options: Optional[SolverOptions] = None,
               table: Optional[HyperplaneTable] = None) -> ExponentResult:
    """sup over (theta, mu, alpha, beta) of (Omega - theta mu kappa) / (1 + (2k+2) theta + sum 2 theta mu alpha_j), clamped at 0."""
    options = options or SolverOptions()
    k = problem.k
    if point.k != k:
        raise InputError(f"Point has {point.k} users, problem has {k}")
    caps_region, caps_free = shared_caps(problem, options)
    table = table or HyperplaneTable(problem, options, caps_region)
    thetas = np.geomspace(options.theta_min, options.theta_max, options.theta_points)
    mus = np.geomspace(options.mu_min, options.mu_max, options.mu_points)

    state = {"F": 0.0, "argsup": None, "argmin": None, "solves": 0, "pruned": 0}
    statuses: Counter = Counter()
    previous: dict[tuple[int, ...], np.ndarray] = {}

    def evaluate_node(node: np.ndarray) -> bool:
        alpha, beta = tuple(node[:k]), tuple(node[k:])
        hv = table.value(alpha, beta)
        q_star = induce_joint(problem, hv.argmin).values
        kap = kappa(point, alpha, beta)
        # omega is affine in mu: omega = base + mu * slope
        base = omega_array(problem, q_star, 0.0, alpha, beta)
        slope = omega_array(problem, q_star, 1.0, alpha, beta) - base
        improved = False

        bounds = []
        for ti, theta in enumerate(thetas):
            for mi, mu in enumerate(mus):
                den = f_denominator(k, theta, mu, alpha)
                upper = (_neg_cgf(q_star, base + mu * slope, theta) - theta * mu * kap) / den
                bounds.append((upper, ti, mi))
        bounds.sort(key=lambda item: (-item[0], item[1], item[2]))

        for upper, ti, mi in bounds:
            if upper <= state["F"]:
                state["pruned"] += 1
                continue
            theta, mu = float(thetas[ti]), float(mus[mi])
            warm = [q_star] + ([previous[(ti, mi)]] if (ti, mi) in previous else [])
            inner = min_big_omega(
                problem, theta, mu, alpha, beta, options,
                warm_starts=warm, caps=caps_free, multistarts=options.sweep_multistarts,
                key=_weights_key(alpha, beta, ti, mi),
            )
            state["solves"] += 1
            statuses[inner.status.value] += 1
            previous[(ti, mi)] = inner.joint.values
            value = (inner.value - theta * mu * kap) / f_denominator(k, theta, mu, alpha)
            if value > state["F"]:
                state.update(F=value, argsup=ParameterTuple(theta, alpha, beta, mu), argmin=FreeJoint(inner.joint))
                improved = True
        return improved

    nodes, _ = _weight_sweep(problem, options, evaluate_node)
    argsup = state["argsup"]
    diagnostics = {
        "weight_nodes": nodes,
        "theta_points": options.theta_points,
        "mu_points": options.mu_points,
        "inner_solves": state["solves"],
        "pruned": state["pruned"],
        "multistarts": options.sweep_multistarts,
        "statuses": dict(sorted(statuses.items())),
        "region_caps": list(caps_region),
        "free_caps": list(caps_free),
        "theta_saturated": bool(argsup is not None and argsup.theta >= thetas[-1]),
        "mu_saturated": bool(argsup is not None and argsup.mu >= mus[-1]),
    }
    if diagnostics["theta_saturated"] or diagnostics["mu_saturated"]:
        logger.warning(f"Exponent argmax sits on a sweep limit: theta={argsup.theta}, mu={argsup.mu}")
    logger.info(f"F={state['F']:.6g} after {state['solves']} inner solves, {state['pruned']} pruned")
    return ExponentResult(
        point=point, F=max(state["F"], 0.0), argsup=argsup, argmin=state["argmin"], diagnostics=diagnostics,
    )


# ===================== TILDE FAMILY =====================

@np.errstate(divide="ignore", invalid="ignore")
def tilde_omega_array(problem: SourceProblem, values: np.ndarray,
                      alpha: Sequence[float], beta: Sequence[float]) -> np.ndarray:
    """alpha_1 log P_{X|W_1}/P_X + sum_{j>=2} alpha_j log P_{X|W^j}/P_{X|W_{j-1}} + sum_j beta_j d_j."""
    k = problem.k
    ndim = values.ndim
    ws = [k + j for j in range(1, k + 1)]
    log_px = _trailing(np.log(problem.p_x), ndim)
    terms: list[tuple[str, np.ndarray]] = []
    if alpha[0] > 0:
        terms.append(("log P_{X|W_1}/P_X", alpha[0] * (_lcond(values, [0], ws[:1]) - log_px)))
    for j in range(2, k + 1):
        if alpha[j - 1] > 0:
            terms.append((
                f"log P_{{X|W^{j}}}/P_{{X|W_{j - 1}}}",
                alpha[j - 1] * (_lcond(values, [0], ws[:j]) - _lcond(values, [0], [ws[j - 2]])),
            ))
    for j in range(1, k + 1):
        if beta[j - 1] > 0:
            terms.append((f"d_{j}", beta[j - 1] * _distortion_term(problem, j, ndim)))
    return _check_terms(terms, values > 0, values.shape)


def tilde_omega_values(problem: SourceProblem, p: JointPmf,
                       alpha: Sequence[float], beta: Sequence[float]) -> np.ndarray:
    validate_weights(alpha, beta, problem.k)
    return tilde_omega_array(problem, p.values, alpha, beta)


def tilde_omega_cell(problem: SourceProblem, p: JointPmf, alpha: Sequence[float],
                     beta: Sequence[float], t: Sequence[int]) -> float:
    t = tuple(t)
    if p.values[t] <= 0:
        raise InputError(f"Cell {t} has zero mass under p")
    return float(tilde_omega_values(problem, p, alpha, beta)[t])


def _tilt(values: np.ndarray, omega: np.ndarray, lam: float) -> np.ndarray:
    mask = values > 0
    logs = np.full(values.shape, -np.inf)
    logs[mask] = np.log(values[mask]) - lam * omega[mask]
    return np.exp(logs - logsumexp(logs[mask]))


def tilted_distribution(problem: SourceProblem, p: JointPmf, lam: float,
                        alpha: Sequence[float], beta: Sequence[float]) -> JointPmf:
    """P^{(lambda)}(t) proportional to P(t) exp(-lambda omega-tilde(t))."""
    if lam < 0:
        raise InputError("lambda must be non-negative")
    omega = tilde_omega_values(problem, p, alpha, beta)
    mask = p.values > 0
    if lam == 0 or np.ptp(omega[mask]) == 0:
        return p
    return JointPmf(p.axes, _tilt(p.values, omega, lam))


def _tilted_variance(values: np.ndarray, omega: np.ndarray, lam: float) -> float:
    tilted = _tilt(values, omega, lam)
    mask = tilted > 0
    mean = float(np.sum(tilted[mask] * omega[mask]))
    return float(np.sum(tilted[mask] * (omega[mask] - mean) ** 2))


def tilted_variance(problem: SourceProblem, p: JointPmf, lam: float,
                    alpha: Sequence[float], beta: Sequence[float]) -> float:
    if lam < 0:
        raise InputError("lambda must be non-negative")
    return _tilted_variance(p.values, tilde_omega_values(problem, p, alpha, beta), lam)


def big_tilde_omega(problem: SourceProblem, p: JointPmf, lam: float,
                    alpha: Sequence[float], beta: Sequence[float]) -> float:
    """-log E_P[exp(-lambda omega-tilde)]."""
    return _neg_cgf(p.values, tilde_omega_values(problem, p, alpha, beta), lam)


class ShParameterisation:
    """Logit coordinates for test channels plus stochastic decoders."""

    def __init__(self, problem: SourceProblem, caps: Sequence[int]):
        self.problem = problem
        self.shapes = channel_shapes(problem.x_size, caps)
        self.shapes += [
            tuple(caps[:j]) + (problem.y_sizes[j - 1], problem.xhat_sizes[j - 1])
            for j in range(1, problem.k + 1)
        ]
        self.size = sum(int(np.prod(s)) for s in self.shapes)

    def arrays(self, z: np.ndarray) -> list[np.ndarray]:
        out, offset = [], 0
        for shape in self.shapes:
            n = int(np.prod(shape))
            out.append(softmax(z[offset: offset + n].reshape(shape), axis=-1))
            offset += n
        return out

    def joint(self, z: np.ndarray) -> np.ndarray:
        arrays = self.arrays(z)
        k = self.problem.k
        values = induced_values(self.problem, arrays[:k], arrays[k:])
        return values / values.sum()

    def encode(self, aux: AuxiliarySystem) -> Optional[np.ndarray]:
        k = self.problem.k
        if aux.w_sizes != tuple(s[-1] for s in self.shapes[:k]):
            return None
        pieces = [logits_from_pmf(c).ravel() for c in aux.channels]
        pieces += [logits_from_pmf(aux.decoder_conditional(j, self.problem.xhat_sizes[j - 1])).ravel()
                   for j in range(1, k + 1)]
        return np.concatenate(pieces)


def min_tilde_big_omega(problem: SourceProblem, lam: float, alpha: Sequence[float], beta: Sequence[float],
                        options: Optional[SolverOptions] = None,
                        warm_starts: Sequence[AuxiliarySystem] = (),
                        caps: Optional[Sequence[int]] = None,
                        multistarts: Optional[int] = None,
                        key: tuple[int, ...] = (),
                        candidates: Sequence[np.ndarray] = ()) -> InnerMinimum:
    """
    Approximate min over channel chains with stochastic decoders of -log E[exp(-lambda omega-tilde)].
    `candidates` are channel-chain joints over T (any W sizes) evaluated as they are.
    """
    options = options or SolverOptions()
    validate_weights(alpha, beta, problem.k)
    caps = tuple(caps) if caps is not None else region_caps(problem, options)
    param = ShParameterisation(problem, caps)
    multistarts = options.multistarts if multistarts is None else multistarts

    def evaluate(values: np.ndarray) -> float:
        return _neg_cgf(values, tilde_omega_array(problem, values, alpha, beta), lam)

    def objective(z: np.ndarray) -> float:
        return evaluate(param.joint(z))

    scored: list[tuple[float, np.ndarray]] = [(evaluate(joint), joint) for joint in candidates]
    starts: list[np.ndarray] = []
    for aux in warm_starts:
        exact = induce_joint(problem, aux).values
        scored.append((evaluate(exact), exact))
        encoded = param.encode(aux)
        if encoded is not None:
            starts.append(encoded)
    rngs = spawn_generators(options.seed, 1, key=key)
    starts += [rngs[0].normal(scale=2.0, size=param.size) for _ in range(multistarts)]
    if not starts:
        starts.append(np.zeros(param.size))

    results = multistart(objective, starts, options.max_iter, options.n_jobs)
    best_run = best_of(results)
    scored.append((best_run.fun, param.joint(best_run.x)))
    status = SolverStatus.CONVERGED if any(r.success for r in results) else SolverStatus.MULTISTART_BEST

    value, values = scored[0]
    for candidate in scored[1:]:
        if candidate[0] < value:
            value, values = candidate
    # candidates may carry different W sizes; report on the joint's own axes
    return InnerMinimum(JointPmf(t_axes(problem.k), values / values.sum()), float(value), status,
                        status == SolverStatus.MULTISTART_BEST)


def tilde_F(problem: SourceProblem, point: RateDistortionPoint,
            options: Optional[SolverOptions] = None,
            table: Optional[HyperplaneTable] = None,
            paired: bool = False) -> TildeExponent:
    """
    sup over (lambda, alpha, beta) of (Omega-tilde - lambda kappa) / denominator, clamped at 0.

    With `paired`, every solved node also solves F at tilde_to_f_parameters(lambda, alpha)
    and offers the channel chain of that free-joint minimiser to the Omega-tilde minimum,
    so the paired F value is at least the node's F-tilde value.
    """
    options = options or SolverOptions()
    k = problem.k
    caps_region, caps_free = shared_caps(problem, options)
    table = table or HyperplaneTable(problem, options, caps_region)
    lambdas = np.geomspace(options.lambda_min, options.lambda_max, options.lambda_points)
    state = {"value": 0.0, "argsup": None, "argmin": None,
             "paired_f": 0.0, "paired_argsup": None, "paired_argmin": None, "paired_solves": 0}
    statuses: Counter = Counter()

    def paired_node(lam: float, alpha, beta, kap: float, warm: np.ndarray, li: int) -> np.ndarray:
        theta, mu = tilde_to_f_parameters(lam, alpha)
        inner = min_big_omega(
            problem, theta, mu, alpha, beta, options, warm_starts=[warm], caps=caps_free,
            multistarts=options.sweep_multistarts, key=_weights_key(alpha, beta, li, 1),
        )
        state["paired_solves"] += 1
        value = (inner.value - theta * mu * kap) / f_denominator(k, theta, mu, alpha)
        if value > state["paired_f"]:
            state.update(paired_f=value, paired_argsup=ParameterTuple(theta, alpha, beta, mu),
                         paired_argmin=FreeJoint(inner.joint))
        return sh_projection(problem, inner.joint.values)

    def evaluate_node(node: np.ndarray) -> bool:
        alpha, beta = tuple(node[:k]), tuple(node[k:])
        hv = table.value(alpha, beta)
        p_star = induce_joint(problem, hv.argmin).values
        omega = tilde_omega_array(problem, p_star, alpha, beta)
        kap = kappa(point, alpha, beta)
        improved = False
        bounds = []
        for li, lam in enumerate(lambdas):
            upper = (_neg_cgf(p_star, omega, lam) - lam * kap) / tilde_denominator(k, lam, alpha)
            bounds.append((upper, li))
        bounds.sort(key=lambda item: (-item[0], item[1]))
        for upper, li in bounds:
            if upper <= state["value"]:
                continue
            lam = float(lambdas[li])
            candidates = [paired_node(lam, alpha, beta, kap, p_star, li)] if paired else []
            inner = min_tilde_big_omega(
                problem, lam, alpha, beta, options, warm_starts=[hv.argmin], caps=table.caps,
                multistarts=options.sweep_multistarts, key=_weights_key(alpha, beta, li),
                candidates=candidates,
            )
            statuses[inner.status.value] += 1
            value = (inner.value - lam * kap) / tilde_denominator(k, lam, alpha)
            if value > state["value"]:
                state.update(value=value, argsup=ParameterTuple(lam, alpha, beta), argmin=inner.joint)
                improved = True
        return improved

    _weight_sweep(problem, options, evaluate_node)
    return TildeExponent(
        max(state["value"], 0.0), state["argsup"], state["argmin"], dict(sorted(statuses.items())),
        paired_f=max(state["paired_f"], 0.0), paired_argsup=state["paired_argsup"],
        paired_argmin=state["paired_argmin"], paired_solves=state["paired_solves"],
    )


def dispersion_rho(problem: SourceProblem, options: Optional[SolverOptions] = None,
                   table: Optional[HyperplaneTable] = None) -> float:
    """
    Best-found sup of the tilted variance of omega-tilde over channel chains,
    weights and lambda in (0, lambda_max]. A lower bound on the true supremum.
    """
    options = options or SolverOptions()
    k = problem.k
    caps_region, _ = shared_caps(problem, options)
    table = table or HyperplaneTable(problem, options, caps_region)
    lambdas = np.geomspace(options.lambda_min, options.lambda_max, options.lambda_points)
    param = ShParameterisation(problem, table.caps)

    best, best_start = 0.0, None
    for node in simplex_grid(2 * k, options.weight_resolution):
        alpha, beta = tuple(node[:k]), tuple(node[k:])
        hv = table.value(alpha, beta)
        p_star = induce_joint(problem, hv.argmin).values
        omega = tilde_omega_array(problem, p_star, alpha, beta)
        for lam in lambdas:
            variance = _tilted_variance(p_star, omega, float(lam))
            if variance > best:
                best = variance
                encoded = param.encode(hv.argmin)
                if encoded is not None:
                    u = np.log(lam / options.lambda_max) - np.log1p(-min(lam / options.lambda_max, 1 - 1e-9))
                    best_start = np.concatenate([encoded, np.log(node + 1e-9), [u]])

    # z = (channel and decoder logits, 2k weight logits, lambda logit)
    def objective(z: np.ndarray) -> float:
        weights = softmax(z[param.size: param.size + 2 * k])
        lam = options.lambda_max * float(expit(z[-1]))
        values = param.joint(z[: param.size])
        omega = tilde_omega_array(problem, values, weights[:k], weights[k:])
        return -_tilted_variance(values, omega, lam)

    rng = spawn_generators(options.seed, 1, key=(0xD15,))[0]
    starts = [best_start] if best_start is not None else []
    starts += [rng.normal(scale=2.0, size=param.size + 2 * k + 1) for _ in range(options.multistarts)]
    if starts:
        found = best_of(multistart(objective, starts, options.max_iter, options.n_jobs))
        best = max(best, -found.fun)
    logger.info(f"Dispersion rho (best found, lower bound): {best:.6g}")
    return float(best)


def certificate(problem: SourceProblem, point: RateDistortionPoint,
                options: Optional[SolverOptions] = None,
                margin: Optional[float] = None, rho: Optional[float] = None,
                table: Optional[HyperplaneTable] = None) -> float:
    """min(delta, rho)^2 / (2 (2k+9) rho) for a point outside the region with margin -delta."""
    options = options or SolverOptions()
    if margin is None:
        margin = membership(problem, point, options, table).margin
    if margin >= 0:
        raise InputError(f"Point is not outside the region (margin {margin:.6g})")
    rho = dispersion_rho(problem, options, table) if rho is None else rho
    if rho <= 0:
        logger.warning("Dispersion is zero; no certificate")
        return 0.0
    delta = min(-margin, rho)
    return float(delta ** 2 / (2 * (2 * problem.k + 9) * rho))


def exponent_report(problem: SourceProblem, point: RateDistortionPoint,
                    options: Optional[SolverOptions] = None,
                    table: Optional[HyperplaneTable] = None) -> ExponentResult:
    """
    F, F-tilde, rho, delta and the certificate from one shared hyperplane table.
    F is the best of the exponent sweep and the (theta, mu) nodes paired with the F-tilde sweep.
    """
    options = options or SolverOptions()
    caps_region, _ = shared_caps(problem, options)
    table = table or HyperplaneTable(problem, options, caps_region)
    report = membership(problem, point, options, table)
    result = exponent_F(problem, point, options, table)
    tilde = tilde_F(problem, point, options, table, paired=True)
    if tilde.paired_f > result.F:
        logger.info(f"Paired node raises F from {result.F:.6g} to {tilde.paired_f:.6g}")
        result = result.updated(F=tilde.paired_f, argsup=tilde.paired_argsup, argmin=tilde.paired_argmin)

    rho = delta = None
    cert = 0.0
    if report.verdict == Verdict.OUTSIDE:
        delta = -report.margin
        rho = dispersion_rho(problem, options, table)
        cert = certificate(problem, point, options, margin=report.margin, rho=rho)

    diagnostics = dict(result.diagnostics)
    diagnostics.update({
        "verdict": report.verdict.value,
        "margin": report.margin,
        "tilde_statuses": tilde.statuses,
        "paired_solves": tilde.paired_solves,
        "f_at_least_tilde": bool(result.F >= tilde.value - ORDERING_SLACK),
        "tilde_at_least_certificate": bool(tilde.value >= cert - ORDERING_SLACK),
        "rho_is_lower_bound": rho is not None,
    })
    return result.updated(tilde_f=tilde.value, certificate=cert, rho=rho, delta=delta, diagnostics=diagnostics)
