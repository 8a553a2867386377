# app/core/probability.py
"""
Finite-alphabet probability primitives. All logarithms are natural (nats).
Terms with zero outer weight are skipped; a positive numerator over a zero
denominator inside a weighted term raises NumericalDomainError.
"""
from typing import Iterable, Sequence

import numpy as np
from scipy.special import softmax

from app.exceptions import InputError, NumericalDomainError
from app.models.distribution import ConditionalPmf, JointPmf, Pmf


def _axis_set(joint: JointPmf, names: Iterable[str]) -> tuple[int, ...]:
    return tuple(sorted(joint.positions(list(names))))


def _keepdims_sum(values: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    drop = tuple(a for a in range(values.ndim) if a not in keep)
    return values.sum(axis=drop, keepdims=True) if drop else values


def marginalize(joint: JointPmf, keep: Iterable[str]) -> JointPmf:
    """Sum out every axis not in `keep`; kept axes stay in their original order."""
    positions = _axis_set(joint, keep)
    drop = tuple(a for a in range(len(joint.axes)) if a not in positions)
    values = joint.values.sum(axis=drop) if drop else np.array(joint.values)
    return JointPmf(tuple(joint.axes[a] for a in positions), values / values.sum())


def condition(joint: JointPmf, given: Iterable[str]) -> ConditionalPmf:
    """P(rest | given). Slices with zero conditioning mass are NaN and flagged undefined."""
    given_pos = _axis_set(joint, given)
    if len(given_pos) >= len(joint.axes):
        raise InputError("Conditioning must leave at least one target axis")
    target_pos = tuple(a for a in range(len(joint.axes)) if a not in given_pos)
    ordered = np.transpose(joint.values, given_pos + target_pos)
    n_given = len(given_pos)
    marginal = ordered.sum(axis=tuple(range(n_given, ordered.ndim)))
    defined = marginal > 0
    shaped = marginal.reshape(marginal.shape + (1,) * len(target_pos))
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(shaped > 0, ordered / np.where(shaped > 0, shaped, 1.0), np.nan)
    return ConditionalPmf(
        given=tuple(joint.axes[a] for a in given_pos),
        target=tuple(joint.axes[a] for a in target_pos),
        values=values,
        defined=defined,
    )


def log_marginal(values: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """log of the marginal over `keep`, broadcastable against `values`; -inf where zero."""
    with np.errstate(divide="ignore"):
        return np.log(_keepdims_sum(values, keep))


def log_conditional(joint: JointPmf, target: Iterable[str], given: Iterable[str]) -> np.ndarray:
    """
    log Q(target | given) evaluated at every cell of `joint`, broadcastable to
    its full shape. Cells whose conditioning event has zero mass are NaN.
    """
    target_pos = _axis_set(joint, target)
    given_pos = _axis_set(joint, given)
    if set(target_pos) & set(given_pos):
        raise InputError("target and given axes overlap")
    numerator = log_marginal(joint.values, target_pos + given_pos)
    if not given_pos:
        return numerator
    denominator = log_marginal(joint.values, given_pos)
    with np.errstate(invalid="ignore"):
        return np.where(np.isneginf(denominator), np.nan, numerator - denominator)


def entropy(pmf: Pmf) -> float:
    p = pmf.values[pmf.values > 0]
    return float(-np.sum(p * np.log(p)))


def kl_divergence(p: Pmf, q: Pmf) -> float:
    mask = p.values > 0
    if np.any(q.values[mask] == 0):
        raise NumericalDomainError("KL divergence: p has mass where q has none")
    return float(np.sum(p.values[mask] * np.log(p.values[mask] / q.values[mask])))


def mutual_information(px: Pmf, channel: ConditionalPmf) -> float:
    """I(P_X, P_{Y|X}) in nats for a channel conditioned on a single axis."""
    if len(channel.given) != 1 or channel.values.shape[0] != px.size:
        raise InputError("Channel conditioning axis does not match the input pmf")
    matrix = channel.values.reshape(px.size, -1)
    joint = px.values[:, None] * np.nan_to_num(matrix)
    q = joint.sum(axis=0)
    mask = joint > 0
    ratio = joint[mask] / (px.values[:, None] * q[None, :])[mask]
    return max(float(np.sum(joint[mask] * np.log(ratio))), 0.0)


def conditional_mutual_information(
    joint: JointPmf, a: Iterable[str], b: Iterable[str], given: Iterable[str] = ()
) -> float:
    """I(A; B | G) in nats; cells with zero probability contribute nothing."""
    a_pos, b_pos, g_pos = _axis_set(joint, a), _axis_set(joint, b), _axis_set(joint, given)
    if set(a_pos) & set(b_pos) or set(a_pos) & set(g_pos) or set(b_pos) & set(g_pos):
        raise InputError("Axis sets for conditional mutual information must be disjoint")
    values = joint.values
    keep_all = a_pos + b_pos + g_pos
    p_abg = _keepdims_sum(values, keep_all)
    p_ag = _keepdims_sum(values, a_pos + g_pos)
    p_bg = _keepdims_sum(values, b_pos + g_pos)
    p_g = _keepdims_sum(values, g_pos) if g_pos else np.ones((1,) * values.ndim)
    p_abg, p_ag, p_bg, p_g = np.broadcast_arrays(p_abg, p_ag, p_bg, p_g)
    # Evaluate on the reduced grid only, one cell per (a, b, g) combination
    drop = tuple(ax for ax in range(values.ndim) if ax not in keep_all)
    index = tuple(slice(0, 1) if ax in drop else slice(None) for ax in range(values.ndim))
    p_abg, p_ag, p_bg, p_g = p_abg[index], p_ag[index], p_bg[index], p_g[index]
    mask = p_abg > 0
    terms = p_abg[mask] * np.log(p_abg[mask] * p_g[mask] / (p_ag[mask] * p_bg[mask]))
    return max(float(terms.sum()), 0.0)


# ===== SIMPLEX PARAMETERISATIONS =====

def simplex_embed(free_params: Sequence[float]) -> Pmf:
    """Exponential normalisation of unconstrained reals onto the open simplex."""
    return Pmf(softmax(np.asarray(free_params, dtype=float)))


def simplex_project(vector: Sequence[float]) -> tuple[Pmf, bool]:
    """
    Euclidean projection onto the probability simplex (sort-and-threshold).
    Returns (pmf, degenerate); an all-zero input gives the uniform pmf and
    degenerate=True.
    """
    c = np.asarray(vector, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise InputError("simplex_project expects a non-empty vector")
    if np.any(c < 0):
        raise InputError("simplex_project expects a non-negative vector")
    if not np.any(c > 0):
        return Pmf(np.full(c.size, 1.0 / c.size)), True
    a = -np.sort(-c)
    thresholds = (np.cumsum(a) - 1) / np.arange(1, c.size + 1)
    rho = np.nonzero(a > thresholds)[0][-1]
    projected = np.maximum(c - thresholds[rho], 0)
    return Pmf(projected / projected.sum()), False
