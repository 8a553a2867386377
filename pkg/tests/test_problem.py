# tests/test_problem.py
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from app.core.probability import marginalize
from app.core.problem import (
    dump_problem,
    induce_joint,
    kappa,
    load_problem,
    problem_hash,
    rate_objective,
    w_caps,
)
from app.exceptions import InputError
from app.models.problem import AuxiliarySystem, CapScheme, RateDistortionPoint, validate_weights
from app.utils.fixtures import bsc, copy_aux, degenerate_aux
from tests.helpers import h


# ===== INGESTION =====

def test_load_dsbs_file(problem_path):
    problem = load_problem(Path(problem_path("k1_dsbs")).read_text())
    assert problem.k == 1
    assert problem.d_bar == (1.0,)
    assert np.allclose(problem.p_x, [0.5, 0.5])
    assert np.allclose(problem.marginal_y_given_x(1), bsc(0.2))


def test_load_rejects_joint_not_summing_to_one():
    document = {
        "k": 1,
        "alphabets": {"x": 2, "y": [2], "xhat": [2]},
        "joint": [[0.4, 0.1], [0.1, 0.399]],
        "distortion": [[[0, 1], [1, 0]]],
    }
    with pytest.raises(InputError, match="sums to"):
        load_problem(document)


def test_load_rejects_wrong_distortion_shape():
    document = {
        "k": 1,
        "alphabets": {"x": 2, "y": [2], "xhat": [3]},
        "joint": [[0.25, 0.25], [0.25, 0.25]],
        "distortion": [[[0, 1], [1, 0]]],
    }
    with pytest.raises(InputError):
        load_problem(document)


def test_load_rejects_zero_probability_source_symbol():
    document = {
        "k": 1,
        "alphabets": {"x": 2, "y": [2], "xhat": [2]},
        "joint": [[0.5, 0.5], [0.0, 0.0]],
        "distortion": [[[0, 1], [1, 0]]],
    }
    with pytest.raises(InputError, match="zero probability"):
        load_problem(document)


def test_load_malformed_json():
    with pytest.raises(InputError):
        load_problem("{not json")


def test_two_user_marginals(problems):
    problem = problems["k2_independent"]
    assert problem.y_sizes == (2, 2)
    assert np.allclose(problem.marginal_y_given_x(1), bsc(0.2))
    assert np.allclose(problem.marginal_y_given_x(2), bsc(0.1))


def test_dump_then_load_keeps_joint(problems):
    problem = problems["k2_second"]
    reloaded = load_problem(dump_problem(problem))
    assert np.allclose(reloaded.joint.values, problem.joint.values, atol=1e-15)
    assert reloaded.d_bar == problem.d_bar


def test_problem_hash_is_content_hash(problem_path):
    text = Path(problem_path("k1_bsc01")).read_text()
    assert problem_hash(text) == problem_hash(text.encode())
    assert problem_hash(text) == hashlib.sha256(text.encode()).hexdigest()
    assert problem_hash(text) != problem_hash(text + " ")


def test_fixture_files_match_builders(problems, problem_path):
    for name, problem in problems.items():
        loaded = load_problem(Path(problem_path(name)).read_text())
        assert np.allclose(loaded.joint.values, problem.joint.values, atol=1e-12), name


# ===== JOINT CONSTRUCTION =====

def test_induce_joint_degenerate_aux(problems):
    problem = problems["k1_bsc01"]
    joint = induce_joint(problem, degenerate_aux(problem, [1]))
    assert joint.axes == ("X", "Y1", "W1", "Xhat1")
    assert np.allclose(marginalize(joint, ["Xhat1"]).values, [0.0, 1.0])
    assert np.allclose(marginalize(joint, ["X", "Y1"]).values, problem.joint.values)


def test_induce_joint_copy_aux_reconstructs_source(problems):
    problem = problems["k2_independent"]
    joint = induce_joint(problem, copy_aux(problem))
    for xhat in ("Xhat1", "Xhat2"):
        pair = marginalize(joint, ["X", xhat]).values
        assert np.allclose(pair, np.diag(problem.p_x))


def test_induce_joint_preserves_source_marginal(problems, rng):
    problem = problems["k2_second"]
    c1 = rng.random((2, 3))
    c1 /= c1.sum(axis=-1, keepdims=True)
    c2 = rng.random((2, 3, 2))
    c2 /= c2.sum(axis=-1, keepdims=True)
    d1 = rng.integers(0, 2, size=(3, 2))
    d2 = rng.integers(0, 2, size=(3, 2, 2))
    aux = AuxiliarySystem((c1, c2), (d1, d2))
    joint = induce_joint(problem, aux)
    source = marginalize(joint, ["X", "Y1", "Y2"]).values
    assert np.max(np.abs(source - problem.joint.values)) <= 1e-12


def test_induce_joint_rejects_user_mismatch(problems):
    with pytest.raises(InputError):
        induce_joint(problems["k2_second"], degenerate_aux(problems["k1_dsbs"]))


def test_aux_rejects_non_stochastic_channel():
    with pytest.raises(InputError):
        AuxiliarySystem((np.array([[0.5, 0.4], [0.5, 0.5]]),), (np.zeros((2, 2), dtype=np.int64),))


# ===== OBJECTIVES =====

def test_kappa_two_users():
    point = RateDistortionPoint((1.0, 2.0), (0.1, 0.05))
    value = kappa(point, (0.25, 0.25), (0.25, 0.25))
    assert value == pytest.approx(0.5375, abs=1e-15)


def test_kappa_distortion_only_weights():
    point = RateDistortionPoint((0.7,), (0.2,))
    assert kappa(point, (0.0,), (1.0,)) == pytest.approx(0.2)


def test_kappa_rejects_bad_weights():
    point = RateDistortionPoint((0.7,), (0.2,))
    with pytest.raises(InputError):
        kappa(point, (0.6,), (0.6,))


def test_validate_weights_length():
    with pytest.raises(InputError):
        validate_weights((0.5,), (0.5,), k=2)


def test_rate_objective_copy_aux(problems):
    problem = problems["k1_independent"]
    joint = induce_joint(problem, copy_aux(problem))
    assert rate_objective(problem, joint, (1.0,), (0.0,)) == pytest.approx(h(0.3), abs=1e-12)
    assert rate_objective(problem, joint, (0.0,), (1.0,)) == pytest.approx(0.0, abs=1e-15)


def test_rate_objective_conditional_stage_is_zero_for_repeated_copy(problems):
    problem = problems["k2_independent"]
    joint = induce_joint(problem, copy_aux(problem))
    # W2 = W1 = X, so the second stage carries no new information
    assert rate_objective(problem, joint, (0.0, 1.0), (0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)


# ===== RATES AND CAPS =====

def test_stage_rates():
    point = RateDistortionPoint((1.0, 2.5), (0.1, 0.1))
    assert point.stage_rates() == pytest.approx((1.0, 1.5))
    assert RateDistortionPoint.from_stage_rates((1.0, 1.5), (0.1, 0.1)).rates == pytest.approx((1.0, 2.5))


def test_decreasing_cumulative_rates_rejected():
    with pytest.raises(InputError):
        RateDistortionPoint((1.0, 0.5), (0.1, 0.1))


def test_negative_distortion_rejected():
    with pytest.raises(InputError):
        RateDistortionPoint((1.0,), (-0.1,))


@pytest.mark.parametrize("scheme, expected", [
    (CapScheme.P_STAR, (5, 11)),
    (CapScheme.P, (3, 7)),
    (CapScheme.P_SH, (2, 4)),
    (CapScheme.Q_DEFAULT, (32, 1024)),
])
def test_w_caps_schemes(problems, scheme, expected):
    assert w_caps(problems["k2_independent"], scheme) == expected


def test_w_caps_override(problems):
    problem = problems["k2_independent"]
    assert w_caps(problem, CapScheme.P_STAR, override=(2, 3)) == (2, 3)
    with pytest.raises(InputError):
        w_caps(problem, CapScheme.P_STAR, override=(2,))


def test_problem_document_is_json(problems):
    document = json.loads(dump_problem(problems["k1_dsbs"]))
    assert document["k"] == 1
    assert document["alphabets"] == {"x": 2, "y": [2], "xhat": [2]}
