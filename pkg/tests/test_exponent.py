# tests/test_exponent.py
import numpy as np
import pytest

from app.core.exponent import (
    big_omega,
    big_tilde_omega,
    certificate,
    dispersion_rho,
    exponent_F,
    exponent_report,
    f_denominator,
    free_caps,
    min_big_omega,
    omega_cell,
    omega_values,
    sh_projection,
    tilde_denominator,
    tilde_F,
    tilde_omega_values,
    tilde_to_f_parameters,
    tilted_distribution,
    tilted_variance,
)
from app.core.problem import induce_joint, rate_objective
from app.exceptions import InputError
from app.models.distribution import JointPmf
from app.models.problem import AuxiliarySystem, FreeJoint, RateDistortionPoint, t_axes
from app.models.results import SolverStatus, Verdict
from app.schema.options_schema import SolverOptions
from app.utils.fixtures import FIXTURES, bsc, copy_aux, degenerate_aux, product_problem
from tests.helpers import fast_options, h

FIXTURE_NAMES = list(FIXTURES)
TWO_USERS = [name for name, fixture in FIXTURES.items() if fixture.outside.k == 2]


def sweep_options(k: int, **overrides) -> SolverOptions:
    """fast_options with a coarser weight grid for two users."""
    if k == 2:
        overrides.setdefault("weight_resolution", 2)
    return fast_options(k=k, **overrides)


def random_aux(rng, problem, w_size=2) -> AuxiliarySystem:
    """Stochastic test channels with deterministic decoders, W_j of size w_size."""
    channels, decoders = [], []
    for j in range(1, problem.k + 1):
        shape = (problem.x_size,) + (w_size,) * j
        channel = rng.random(shape) + 0.05
        channels.append(channel / channel.sum(axis=-1, keepdims=True))
        decoders.append(rng.integers(0, problem.xhat_sizes[j - 1], (w_size,) * j + (problem.y_sizes[j - 1],)))
    return AuxiliarySystem(tuple(channels), tuple(decoders))


def random_free_joint(rng, problem, w_size=2) -> FreeJoint:
    shape = (problem.x_size,) + problem.y_sizes + (w_size,) * problem.k + problem.xhat_sizes
    values = rng.random(shape) + 0.05
    return FreeJoint(JointPmf(t_axes(problem.k), values / values.sum()))


def single_user_omega(problem, q, mu, alpha, beta):
    """omega for k=1 from explicit marginals, cell by cell."""
    v = q.values
    px, pyx, d = problem.p_x, problem.p_y_given_x, problem.distortion[0]
    qx, qxw, qw = v.sum(axis=(1, 2, 3)), v.sum(axis=(1, 3)), v.sum(axis=(0, 1, 3))
    qxyw, qyw, qywxh = v.sum(axis=3), v.sum(axis=(0, 3)), v.sum(axis=0)
    out = np.zeros(v.shape)
    for x, y, w, xh in np.ndindex(v.shape):
        value = np.log(qx[x] / px[x])
        value += np.log(qxyw[x, y, w] / qxw[x, w]) - np.log(pyx[x, y])
        value += np.log(v[x, y, w, xh] / qywxh[y, w, xh]) - np.log(qxyw[x, y, w] / qyw[y, w])
        value += mu * (alpha * np.log(qxw[x, w] / qw[w] / px[x]) + beta * d[x, xh])
        out[x, y, w, xh] = value
    return out


# ===== OMEGA =====

def test_omega_vanishes_on_degenerate_system(problems):
    problem = problems["k1_bsc01"]
    q = FreeJoint(induce_joint(problem, degenerate_aux(problem)))
    omega = omega_values(problem, q, 0.0, (0.5,), (0.5,))
    mask = q.values > 0
    assert np.allclose(omega[mask], 0.0, atol=1e-12)
    assert np.isnan(omega[~mask]).all()


def test_omega_matches_explicit_marginals(problems, rng):
    problem = problems["k1_bsc01"]
    q = random_free_joint(rng, problem)
    omega = omega_values(problem, q, 1.7, (0.4,), (0.6,))
    assert np.allclose(omega, single_user_omega(problem, q, 1.7, 0.4, 0.6), atol=1e-12)


def test_omega_cell_agrees_with_array(problems, rng):
    problem = problems["k1_dsbs"]
    q = random_free_joint(rng, problem)
    full = omega_values(problem, q, 2.0, (0.3,), (0.7,))
    assert omega_cell(problem, q, 2.0, (0.3,), (0.7,), (1, 0, 1, 0)) == pytest.approx(full[1, 0, 1, 0])


def test_omega_cell_rejects_zero_mass(problems):
    problem = problems["k1_bsc01"]
    q = FreeJoint(induce_joint(problem, degenerate_aux(problem)))
    with pytest.raises(InputError):
        omega_cell(problem, q, 1.0, (0.5,), (0.5,), (0, 0, 0, 1))


def test_omega_rejects_negative_mu(problems, rng):
    problem = problems["k1_bsc01"]
    with pytest.raises(InputError):
        omega_values(problem, random_free_joint(rng, problem), -1.0, (0.5,), (0.5,))


def test_constant_distortion_shifts_omega(problems, rng):
    base = problems["k1_bsc01"]
    shifted = product_problem([0.7, 0.3], [bsc(0.1)], [1.0 - np.eye(2) + 0.25])
    q = random_free_joint(rng, base)
    mu, beta = 2.0, 0.6
    difference = omega_values(shifted, q, mu, (0.4,), (beta,)) - omega_values(base, q, mu, (0.4,), (beta,))
    assert np.allclose(difference, mu * beta * 0.25, atol=1e-12)


def test_induced_joint_expectation_is_hyperplane_objective(problems, rng):
    problem = problems["k2_independent"]
    c1 = rng.random((2, 2))
    c1 /= c1.sum(axis=-1, keepdims=True)
    c2 = rng.random((2, 2, 2))
    c2 /= c2.sum(axis=-1, keepdims=True)
    aux = AuxiliarySystem((c1, c2), (rng.integers(0, 2, (2, 2)), rng.integers(0, 2, (2, 2, 2))))
    joint = induce_joint(problem, aux)
    alpha, beta, mu = (0.2, 0.3), (0.1, 0.4), 1.5
    evaluation = big_omega(problem, FreeJoint(joint), 0.5, mu, alpha, beta)
    expected = mu * rate_objective(problem, joint, alpha, beta)
    assert evaluation.expected_omega() == pytest.approx(expected, abs=1e-10)
    assert evaluation.value <= 0.5 * evaluation.expected_omega() + 1e-12


# ===== BIG OMEGA =====

def test_big_omega_constant_omega():
    problem = product_problem([0.7, 0.3], [bsc(0.1)], [np.full((2, 2), 0.5)])
    q = FreeJoint(induce_joint(problem, degenerate_aux(problem)))
    # alpha = 0 leaves omega = mu * 0.5 everywhere
    assert big_omega(problem, q, 0.3, 2.0, (0.0,), (1.0,)).value == pytest.approx(0.3, abs=1e-12)
    assert big_omega(problem, q, 0.0, 2.0, (0.0,), (1.0,)).value == 0.0


def test_big_omega_direct_summation(problems, rng):
    problem = problems["k1_dsbs"]
    q = random_free_joint(rng, problem)
    evaluation = big_omega(problem, q, 0.3, 1.2, (0.5,), (0.5,))
    omega = single_user_omega(problem, q, 1.2, 0.5, 0.5)
    expected = -np.log(np.sum(q.values * np.exp(-0.3 * omega)))
    assert evaluation.value == pytest.approx(expected, abs=1e-12)
    assert evaluation.recompute() == pytest.approx(expected, abs=1e-12)


def test_big_omega_slope_at_zero_is_mean(problems, rng):
    problem = problems["k1_bsc01"]
    q = random_free_joint(rng, problem)
    theta = 1e-6
    evaluation = big_omega(problem, q, theta, 1.0, (0.5,), (0.5,))
    assert evaluation.value / theta == pytest.approx(evaluation.expected_omega(), rel=1e-4, abs=1e-6)


def test_big_omega_is_concave_and_below_tangent(problems, rng):
    problem = problems["k1_bsc01"]
    q = random_free_joint(rng, problem)
    args = (1.0, (0.5,), (0.5,))
    low, high = big_omega(problem, q, 0.2, *args), big_omega(problem, q, 1.0, *args)
    middle = big_omega(problem, q, 0.6, *args)
    assert middle.value >= 0.5 * (low.value + high.value) - 1e-12
    for evaluation in (low, middle, high):
        assert evaluation.value <= evaluation.theta * evaluation.expected_omega() + 1e-12


def test_big_omega_rejects_negative_theta(problems, rng):
    problem = problems["k1_bsc01"]
    with pytest.raises(InputError):
        big_omega(problem, random_free_joint(rng, problem), -0.1, 1.0, (0.5,), (0.5,))


# ===== INNER MINIMUM =====

def test_min_big_omega_at_zero_theta(problems):
    inner = min_big_omega(problems["k1_bsc01"], 0.0, 1.0, (0.5,), (0.5,), fast_options())
    assert inner.value == 0.0


def test_min_big_omega_improves_on_warm_start(problems):
    problem = problems["k1_bsc01"]
    warm = induce_joint(problem, copy_aux(problem)).values
    start = big_omega(problem, FreeJoint(JointPmf(t_axes(1), warm)), 0.5, 1.0, (0.5,), (0.5,)).value
    inner = min_big_omega(problem, 0.5, 1.0, (0.5,), (0.5,), fast_options(), warm_starts=[warm])
    assert inner.value <= start + 1e-12
    assert inner.joint.axes == t_axes(1)


def test_min_big_omega_grid_oracle(problems):
    problem = problems["k1_bsc01"]
    plain = fast_options(free_w_caps=(1,))
    gridded = fast_options(free_w_caps=(1,), omega_oracle=True, oracle_max_cells=64, grid_budget=2000)
    without = min_big_omega(problem, 0.5, 1.0, (0.5,), (0.5,), plain)
    with_grid = min_big_omega(problem, 0.5, 1.0, (0.5,), (0.5,), gridded)
    assert with_grid.status == SolverStatus.GRID_CERTIFIED
    assert with_grid.value <= without.value + 1e-12


def test_grid_oracle_is_opt_in(problems):
    options = fast_options(free_w_caps=(1,), oracle_max_cells=64, grid_budget=2000)
    assert not SolverOptions().omega_oracle
    inner = min_big_omega(problems["k1_bsc01"], 0.5, 1.0, (0.5,), (0.5,), options)
    assert inner.status != SolverStatus.GRID_CERTIFIED


@pytest.mark.parametrize("theta", [0.2, 0.5, 1.0])
@pytest.mark.parametrize("mu", [0.5, 2.0])
@pytest.mark.parametrize("alpha, beta", [((0.5,), (0.5,)), ((0.2,), (0.8,)), ((0.8,), (0.2,)), ((1.0,), (0.0,))])
def test_multistart_matches_grid_oracle(problems, theta, mu, alpha, beta):
    problem = problems["k1_bsc01"]
    plain = fast_options(free_w_caps=(1,), max_iter=500)
    gridded = fast_options(free_w_caps=(1,), max_iter=500, omega_oracle=True, oracle_max_cells=64, grid_budget=2000)
    without = min_big_omega(problem, theta, mu, alpha, beta, plain)
    with_grid = min_big_omega(problem, theta, mu, alpha, beta, gridded)
    assert with_grid.value <= without.value + 1e-12
    assert without.value == pytest.approx(with_grid.value, abs=1e-4)


def test_default_free_caps_follow_the_chain_bound(problems):
    assert free_caps(problems["k1_dsbs"], SolverOptions()) == (2,)
    assert free_caps(problems["k2_independent"], SolverOptions()) == (2, 4)


# ===== EXPONENT =====

def test_denominator():
    assert f_denominator(1, 1.0, 1.0, (0.5,)) == pytest.approx(6.0)


def test_exponent_vanishes_inside(problems):
    fixture_point = RateDistortionPoint((0.5,), (0.1,))
    result = exponent_F(problems["k1_independent"], fixture_point, fast_options())
    assert result.F <= 1e-3
    assert result.diagnostics["pruned"] > 0


def test_exponent_positive_outside(problems):
    point = RateDistortionPoint((h(0.3) - h(0.1) - 0.1,), (0.1,))
    result = exponent_F(problems["k1_independent"], point, fast_options())
    assert result.F > 0
    assert result.argsup is not None
    assert result.argmin is not None


def test_exponent_point_mismatch(problems):
    with pytest.raises(InputError):
        exponent_F(problems["k1_bsc01"], RateDistortionPoint((1.0, 1.0), (0.1, 0.1)), fast_options())


def test_exponent_report_inside(problems):
    result = exponent_report(problems["k1_independent"], RateDistortionPoint((0.5,), (0.1,)), fast_options())
    assert result.F == 0.0
    assert result.tilde_f == 0.0
    assert result.certificate == 0.0
    assert result.rho is None
    assert result.diagnostics["verdict"] == "inside"
    assert result.diagnostics["f_at_least_tilde"]


def test_paired_parameters_match_denominators():
    for lam, alpha in [(0.3, (1.0,)), (0.7, (0.25,)), (0.5, (0.2, 0.3)), (1.0, (0.0, 0.6)), (0.05, (0.4, 0.1))]:
        theta, mu = tilde_to_f_parameters(lam, alpha)
        k = len(alpha)
        scale = theta * (1.0 - mu * sum(alpha[1:]))
        assert scale / f_denominator(k, theta, mu, alpha) == pytest.approx(1.0 / tilde_denominator(k, lam, alpha))
        assert theta * mu == pytest.approx(scale * lam)


def test_projection_keeps_channel_chains(problems, rng):
    for name in ("k1_dsbs", "k2_independent"):
        problem = problems[name]
        joint = induce_joint(problem, random_aux(rng, problem))
        assert np.allclose(sh_projection(problem, joint.values), joint.values, atol=1e-12)


def test_projection_of_free_joint_is_a_chain(problems, rng):
    problem = problems["k1_bsc01"]
    projected = sh_projection(problem, random_free_joint(rng, problem).values)
    assert projected.sum() == pytest.approx(1.0)
    # the (X, Y) marginal is the source's
    assert np.allclose(projected.sum(axis=(2, 3)), problem.joint.values, atol=1e-12)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_report_ordering_on_outside_points(problems, name):
    problem, point = problems[name], FIXTURES[name].outside
    options = sweep_options(problem.k)
    result = exponent_report(problem, point, options)
    assert result.diagnostics["verdict"] == Verdict.OUTSIDE.value
    assert result.tilde_f > 0
    assert result.F >= result.tilde_f - 1e-5
    assert result.tilde_f >= result.certificate - 1e-5
    assert result.certificate >= 0.0
    assert result.delta == pytest.approx(-result.diagnostics["margin"])
    assert result.rho is not None and result.rho >= 0.0
    assert result.diagnostics["paired_solves"] > 0
    assert result.diagnostics["f_at_least_tilde"]


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_tilde_and_dispersion_on_outside_points(problems, name):
    problem, point = problems[name], FIXTURES[name].outside
    options = sweep_options(problem.k)
    paired = tilde_F(problem, point, options, paired=True)
    assert paired.value > 0
    assert paired.paired_f >= paired.value - 1e-5
    assert paired.argsup is not None and paired.argsup.is_tilde
    assert paired.paired_argsup is not None and not paired.paired_argsup.is_tilde
    assert sum(paired.statuses.values()) == paired.paired_solves
    rho = dispersion_rho(problem, options)
    assert rho > 0
    assert certificate(problem, point, options, rho=rho) >= 0.0


@pytest.mark.parametrize("name", TWO_USERS)
def test_two_user_dichotomy(problems, name):
    problem, fixture = problems[name], FIXTURES[name]
    options = sweep_options(2)
    assert exponent_F(problem, fixture.inside, options).F <= 1e-6
    assert exponent_F(problem, fixture.outside, options).F > 0


def test_exponent_grows_away_from_the_region(problems):
    edge = h(0.3) - h(0.1)
    values = [
        exponent_F(problems["k1_independent"], RateDistortionPoint((edge - gap,), (0.1,)), fast_options()).F
        for gap in (0.05, 0.1, 0.15)
    ]
    assert 0 < values[0] < values[1] < values[2]


def test_report_on_boundary_band_has_no_certificate(problems):
    point = RateDistortionPoint((h(0.3) - h(0.1) - 0.005,), (0.1,))
    result = exponent_report(problems["k1_independent"], point, fast_options(boundary_band=0.05))
    assert result.diagnostics["verdict"] == Verdict.BOUNDARY.value
    assert result.certificate == 0.0
    assert result.rho is None
    assert result.delta is None


# ===== TILDE FAMILY =====

def test_tilde_omega_copy_system(problems):
    problem = problems["k1_independent"]
    p = induce_joint(problem, copy_aux(problem))
    omega = tilde_omega_values(problem, p, (1.0,), (0.0,))
    for cell in zip(*np.nonzero(p.values > 0)):
        assert omega[cell] == pytest.approx(-np.log(problem.p_x[cell[0]]), abs=1e-12)


def test_tilted_distribution_at_zero_is_identity(problems):
    problem = problems["k1_bsc01"]
    p = induce_joint(problem, copy_aux(problem))
    assert tilted_distribution(problem, p, 0.0, (0.5,), (0.5,)) is p


def test_tilted_distribution_reweights(problems):
    problem = problems["k1_dsbs"]
    p = induce_joint(problem, degenerate_aux(problem))
    tilted = tilted_distribution(problem, p, 0.7, (0.0,), (1.0,))
    assert tilted.values.sum() == pytest.approx(1.0)
    # omega-tilde is d(x, 0): cells with x = 1 lose weight by exp(-0.7)
    ratio = tilted.values[1].sum() / tilted.values[0].sum()
    assert ratio == pytest.approx(np.exp(-0.7), rel=1e-12)


def test_tilted_variance_of_fair_coin_distortion(problems):
    problem = problems["k1_dsbs"]
    p = induce_joint(problem, degenerate_aux(problem))
    assert tilted_variance(problem, p, 0.0, (0.0,), (1.0,)) == pytest.approx(0.25, abs=1e-12)


def test_big_tilde_omega_closed_form(problems):
    problem = problems["k1_dsbs"]
    p = induce_joint(problem, degenerate_aux(problem))
    expected = -np.log(0.5 + 0.5 * np.exp(-0.4))
    assert big_tilde_omega(problem, p, 0.4, (0.0,), (1.0,)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name", ["k1_dsbs", "k2_independent"])
def test_cumulant_invariants_over_random_chains(problems, rng, name):
    problem = problems[name]
    k = problem.k
    for _ in range(5):
        p = induce_joint(problem, random_aux(rng, problem))
        weights = rng.dirichlet(np.ones(2 * k))
        alpha, beta = tuple(weights[:k]), tuple(weights[k:])
        lam = float(rng.uniform(0.1, 1.0))
        omega = tilde_omega_values(problem, p, alpha, beta)
        mask = p.values > 0
        mean = float(np.sum(p.values[mask] * omega[mask]))

        cumulant = big_tilde_omega(problem, p, lam, alpha, beta)
        assert cumulant <= lam * mean + 1e-12
        assert big_tilde_omega(problem, p, 1e-6, alpha, beta) / 1e-6 == pytest.approx(mean, rel=1e-4, abs=1e-6)
        low, high = big_tilde_omega(problem, p, 0.5 * lam, alpha, beta), big_tilde_omega(problem, p, 1.5 * lam, alpha, beta)
        assert cumulant >= 0.5 * (low + high) - 1e-12

        variance = tilted_variance(problem, p, lam, alpha, beta)
        assert variance >= 0.0
        step = 1e-3
        curvature = (big_tilde_omega(problem, p, lam + step, alpha, beta) - 2 * cumulant
                     + big_tilde_omega(problem, p, lam - step, alpha, beta)) / step ** 2
        assert -curvature == pytest.approx(variance, rel=1e-3, abs=1e-5)

        tilted = tilted_distribution(problem, p, lam, alpha, beta)
        assert tilted.values.sum() == pytest.approx(1.0)
        assert np.all(tilted.values[~mask] == 0.0)


# ===== CERTIFICATE =====

def test_certificate_formula(problems):
    point = RateDistortionPoint((0.05,), (0.05,))
    value = certificate(problems["k1_dsbs"], point, fast_options(), margin=-0.2, rho=0.5)
    assert value == pytest.approx(0.04 / 11)


def test_certificate_caps_delta_at_rho(problems):
    point = RateDistortionPoint((0.05,), (0.05,))
    value = certificate(problems["k1_dsbs"], point, fast_options(), margin=-0.5, rho=0.2)
    assert value == pytest.approx(0.04 / (2 * 11 * 0.2))


def test_certificate_without_dispersion(problems):
    point = RateDistortionPoint((0.05,), (0.05,))
    assert certificate(problems["k1_dsbs"], point, fast_options(), margin=-0.2, rho=0.0) == 0.0


def test_certificate_inside_rejected(problems):
    point = RateDistortionPoint((0.5,), (0.1,))
    with pytest.raises(InputError):
        certificate(problems["k1_dsbs"], point, fast_options(), margin=0.1, rho=0.5)
