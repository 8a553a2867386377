# tests/test_region.py
import numpy as np
import pytest

from app.core.problem import induce_joint, rate_objective
from app.core.region import (
    HyperplaneTable,
    ba_reference,
    boundary_rate,
    enumerate_decoders,
    hyperplane_value,
    membership,
)
from app.exceptions import BudgetExceededError, InputError
from app.models.distribution import Pmf
from app.models.problem import RateDistortionPoint
from app.models.results import Verdict
from app.utils.fixtures import bsc, hamming, product_problem
from app.utils.lattice import compositions, lattice_size, neighbours, simplex_grid
from tests.helpers import fast_options, h


def zero_rate_estimate(problem) -> float:
    """Least E[d] of a decoder that sees Y alone."""
    pair = problem.joint.values[:, :, None] * problem.distortion[0][:, None, :]
    return float(pair.sum(axis=0).min(axis=-1).sum())


# ===== LATTICES =====

def test_compositions_cover_lattice():
    points = list(compositions(4, 3))
    assert len(points) == lattice_size(4, 3) == 15
    assert len(set(points)) == 15
    assert all(sum(p) == 4 for p in points)


def test_simplex_grid_rows_sum_to_one():
    grid = simplex_grid(4, 4)
    assert np.allclose(grid.sum(axis=1), 1.0)


def test_neighbours_stay_on_simplex():
    for point in neighbours(np.array([0.5, 0.5, 0.0]), 0.25):
        assert point.min() >= 0
        assert point.sum() == pytest.approx(1.0)


# ===== DECODER ENUMERATION =====

def test_enumerate_binary_decoders(problems):
    tables = list(enumerate_decoders(problems["k1_bsc01"], (1,), 1, budget=100))
    assert len(tables) == 4
    assert len({t.tobytes() for t in tables}) == 4


def test_enumerate_single_output_decoder():
    problem = product_problem([0.5, 0.5], [bsc(0.1)], [np.array([[0.0], [1.0]])])
    assert len(list(enumerate_decoders(problem, (1,), 1, budget=100))) == 1


def test_enumerate_ternary_reconstruction():
    distortion = np.array([[0.0, 1.0, 0.5], [1.0, 0.0, 0.5]])
    problem = product_problem([0.5, 0.5], [bsc(0.1)], [distortion])
    tables = list(enumerate_decoders(problem, (2,), 1, budget=100))
    assert len(tables) == 81
    assert tables[0].shape == (2, 2)
    assert len({t.tobytes() for t in tables}) == 81


def test_enumerate_over_budget(problems):
    with pytest.raises(BudgetExceededError) as excinfo:
        enumerate_decoders(problems["k1_bsc01"], (4,), 1, budget=100)
    assert "closed-form" in str(excinfo.value)


# ===== HYPERPLANE VALUES =====

def test_rate_only_weight_is_zero(problems):
    value = hyperplane_value(problems["k1_bsc01"], (1.0,), (0.0,), fast_options())
    assert value.value == pytest.approx(0.0, abs=1e-9)


def test_distortion_only_weight_with_constant_auxiliary(problems):
    problem = problems["k1_bsc01"]
    value = hyperplane_value(problem, (0.0,), (1.0,), fast_options(w_caps=(1,)))
    assert value.value == pytest.approx(zero_rate_estimate(problem), abs=1e-12)
    assert value.value == pytest.approx(0.1, abs=1e-12)


def test_equal_weights_match_closed_form(problems):
    # With side information independent of X the region is R >= h(0.3) - h(D)
    grid = np.linspace(1e-6, 0.3, 30001)
    entropy = -grid * np.log(grid) - (1 - grid) * np.log(1 - grid)
    curve = 0.5 * np.maximum(h(0.3) - entropy, 0.0) + 0.5 * grid
    expected = float(curve.min())
    value = hyperplane_value(problems["k1_independent"], (0.5,), (0.5,), fast_options())
    assert value.value == pytest.approx(expected, abs=5e-4)


def test_hyperplane_value_is_concave_in_weights(problems):
    problem = problems["k1_bsc01"]
    options = fast_options()
    left = hyperplane_value(problem, (0.2,), (0.8,), options).value
    right = hyperplane_value(problem, (0.8,), (0.2,), options).value
    middle = hyperplane_value(problem, (0.5,), (0.5,), options).value
    assert middle >= 0.5 * (left + right) - 1e-3


def test_hyperplane_argmin_is_consistent(problems):
    problem = problems["k2_independent"]
    options = fast_options(k=2)
    alpha, beta = (0.25, 0.25), (0.3, 0.2)
    value = hyperplane_value(problem, alpha, beta, options)
    joint = induce_joint(problem, value.argmin)
    assert rate_objective(problem, joint, alpha, beta) == pytest.approx(value.value, abs=1e-9)


def test_hyperplane_rejects_bad_weights(problems):
    with pytest.raises(InputError):
        hyperplane_value(problems["k1_bsc01"], (0.5,), (0.6,), fast_options())


def test_table_caches_nodes(problems):
    table = HyperplaneTable(problems["k1_bsc01"], fast_options())
    table.value((0.5,), (0.5,))
    table.value((0.5,), (0.5,))
    assert len(table) == 1


# ===== MEMBERSHIP =====

def test_membership_either_side_of_boundary(problems):
    problem = problems["k1_independent"]
    options = fast_options()
    table = HyperplaneTable(problem, options)
    edge = h(0.3) - h(0.1)
    inside = membership(problem, RateDistortionPoint((edge + 0.05,), (0.1,)), options, table)
    outside = membership(problem, RateDistortionPoint((edge - 0.05,), (0.1,)), options, table)
    assert inside.verdict == Verdict.INSIDE
    assert inside.margin > 0
    assert outside.verdict == Verdict.OUTSIDE
    assert outside.margin < 0


def test_membership_generous_point_is_inside(problems):
    problem = problems["k1_independent"]
    report = membership(problem, RateDistortionPoint((np.log(2) + 0.1,), (1.0,)), fast_options())
    assert report.verdict == Verdict.INSIDE


def test_membership_origin_is_outside(problems):
    problem = problems["k1_independent"]
    report = membership(problem, RateDistortionPoint((0.0,), (0.0,)), fast_options())
    assert report.verdict == Verdict.OUTSIDE
    assert report.witness is not None
    assert report.nodes_evaluated > 0


def test_membership_two_users(problems):
    problem = problems["k2_independent"]
    options = fast_options(k=2)
    table = HyperplaneTable(problem, options)
    assert membership(problem, RateDistortionPoint((1.0, 1.5), (0.3, 0.3)), options, table).verdict == Verdict.INSIDE
    assert membership(problem, RateDistortionPoint((0.0, 0.0), (0.0, 0.0)), options, table).verdict == Verdict.OUTSIDE


def test_membership_user_count_mismatch(problems):
    with pytest.raises(InputError):
        membership(problems["k1_bsc01"], RateDistortionPoint((1.0, 1.0), (0.1, 0.1)), fast_options())


@pytest.mark.parametrize("level", [0.02, 0.05, 0.1, 0.15, 0.2])
def test_boundary_rate_independent_side_information(problems, level):
    problem = problems["k1_independent"]
    options = fast_options(weight_resolution=16, refinements=2, max_iter=300)
    rate = boundary_rate(problem, (level,), options)
    reference = ba_reference(Pmf(problem.p_x), problem.distortion[0], level)
    assert reference == pytest.approx(h(0.3) - h(level), abs=1e-5)
    assert rate == pytest.approx(reference, abs=5e-3)


def test_boundary_rate_needs_one_user(problems):
    with pytest.raises(InputError):
        boundary_rate(problems["k2_second"], (0.1, 0.1), fast_options(k=2))


# ===== CLASSICAL ORACLE =====

def test_ba_reference_beyond_max_distortion():
    assert ba_reference(Pmf([0.7, 0.3]), hamming(), 0.3) == 0.0


def test_ba_reference_lossless_uniform():
    assert ba_reference(Pmf([0.5, 0.5]), hamming(), 0.0) == pytest.approx(np.log(2), abs=1e-6)


def test_ba_reference_binary_source():
    value = ba_reference(Pmf([0.7, 0.3]), hamming(), 0.1)
    assert value == pytest.approx(h(0.3) - h(0.1), abs=1e-5)
    assert value == pytest.approx(0.28578, abs=1e-4)


def test_ba_reference_below_minimum_distortion():
    with pytest.raises(InputError):
        ba_reference(Pmf([0.7, 0.3]), hamming(), -0.1)
