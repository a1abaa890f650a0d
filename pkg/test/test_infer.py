import numpy as np
import pytest
from conftest import CYCLIC3_THETA, CYCLIC3_Y, noise_free

from qrlma_lib.error import InactiveDesignError, InvalidInputError
from qrlma_lib.forecast import TransitionBatch
from qrlma_lib.gillespie import simulate_dataset
from qrlma_lib.infer import (
    FitConfig,
    FitResult,
    _initial_theta,
    gaussian_bic,
    lla_estimate,
    lma_fit,
    lma_gradient,
    lma_objective,
)
from qrlma_lib.reaction import ReactionSystem
from qrlma_lib.types import ObservationSet, Replicate
from qrlma_lib.uncertainty import predict_sensitivity


def _single(times, states, species=("X",)) -> ObservationSet:
    return ObservationSet(
        species=list(species),
        replicates=[Replicate(times=times, states=np.asarray(states, dtype=float))],
    )


@pytest.fixture
def cyclic3_data(cyclic3):
    return simulate_dataset(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, 3, keep_every=1, T=10, seed=17)


def test_lla_single_transition(pure_death):
    data = _single([0.0, 0.1], [[100], [90]])
    assert lla_estimate(data, pure_death)[0] == pytest.approx(1.0, rel=1e-10)


def test_lla_constant_trajectory(pure_death):
    data = _single([0.0, 1.0, 2.0], [[50], [50], [50]])
    assert lla_estimate(data, pure_death)[0] == 0.0


def test_lla_inactive_design(cyclic3):
    data = _single([0.0, 1.0], [[1, 0, 1], [1, 0, 1]], species=cyclic3.species)
    with pytest.raises(InactiveDesignError) as info:
        lla_estimate(data, cyclic3)
    assert info.value.labels == ["R1", "R2", "R3"]


def test_lla_is_nonnegative(cyclic3, cyclic3_data):
    theta = lla_estimate(cyclic3_data, cyclic3)
    assert theta.shape == (3,)
    assert np.all(theta >= 0)


def test_objective_zero_on_noise_free_data(chain3):
    theta = [5.0, 0.3, 0.2, 0.1]
    data = noise_free(chain3, theta, [[10, 5, 2], [3, 8, 1]], [0.5, 0.7, 1.1])
    value, m = lma_objective(theta, data, chain3)
    assert value == pytest.approx(0.0, abs=1e-18)
    assert m.shape == (6, 3)


def test_objective_grows_away_from_optimum(chain3):
    theta = np.array([5.0, 0.3, 0.2, 0.1])
    data = noise_free(chain3, theta, [[10, 5, 2]], [0.5, 0.7, 1.1])
    for j in range(4):
        for factor in (0.99, 1.01):
            bumped = theta.copy()
            bumped[j] *= factor
            assert lma_objective(bumped, data, chain3)[0] > 0


def test_objective_positive_on_stochastic_data(cyclic3, cyclic3_data):
    value, _ = lma_objective(CYCLIC3_THETA, cyclic3_data, cyclic3)
    assert 0 < value < np.inf


def test_objective_invariant_to_replicate_order(cyclic3, cyclic3_data):
    reordered = cyclic3_data.subset([2, 0, 1])
    assert lma_objective(CYCLIC3_THETA, reordered, cyclic3)[0] == pytest.approx(
        lma_objective(CYCLIC3_THETA, cyclic3_data, cyclic3)[0], rel=1e-12
    )


def test_objective_invariant_to_species_order(cyclic3, cyclic3_data):
    order = [2, 0, 1]
    permuted = ReactionSystem(
        species=[cyclic3.species[i] for i in order],
        reactant_matrix=cyclic3.reactant_matrix[order],
        product_matrix=cyclic3.product_matrix[order],
    )
    value = lma_objective(CYCLIC3_THETA, cyclic3_data.select_species(order), permuted)[0]
    assert value == pytest.approx(
        lma_objective(CYCLIC3_THETA, cyclic3_data, cyclic3)[0], rel=1e-10
    )


def test_gradient_matches_finite_differences(cyclic3, cyclic3_data):
    rng = np.random.default_rng(0)
    batch = TransitionBatch(cyclic3, cyclic3_data)
    for _ in range(10):
        theta = rng.uniform(0.05, 0.4, 3)
        grad = lma_gradient(theta, cyclic3_data, cyclic3, batch)
        fd = np.empty(3)
        for j in range(3):
            h = 1e-6 * max(theta[j], 1.0)
            up, down = theta.copy(), theta.copy()
            up[j] += h
            down[j] -= h
            fd[j] = (
                lma_objective(up, cyclic3_data, cyclic3, batch)[0]
                - lma_objective(down, cyclic3_data, cyclic3, batch)[0]
            ) / (2 * h)
        np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-5 * np.abs(grad).max())


def test_gradient_assembled_from_sensitivities(cyclic3, cyclic3_data):
    theta = np.array([0.25, 0.08, 0.15])
    batch = TransitionBatch(cyclic3, cyclic3_data)
    _, m = lma_objective(theta, cyclic3_data, cyclic3, batch)
    expected = np.zeros(3)
    for n in range(batch.n_transitions):
        xi = predict_sensitivity(
            cyclic3, theta, batch.anchors[n], batch.horizons[n], method="phi1"
        )
        expected += -2.0 * xi.T @ (batch.targets[n] - m[n])
    np.testing.assert_allclose(
        lma_gradient(theta, cyclic3_data, cyclic3, batch), expected, rtol=1e-10
    )


def test_gradient_scalar_death_by_hand(pure_death):
    theta, y0, y1, s = 0.5, 100.0, 30.0, 2.0
    data = _single([0.0, s], [[y0], [y1]])
    m = y0 * np.exp(-theta * s)
    expected = -2.0 * (y1 - m) * (-s * y0 * np.exp(-theta * s))
    assert lma_gradient([theta], data, pure_death)[0] == pytest.approx(expected, rel=1e-10)


def test_gradient_vanishes_at_noise_free_optimum(chain3):
    theta = [5.0, 0.3, 0.2, 0.1]
    data = noise_free(chain3, theta, [[10, 5, 2]], [0.5, 0.7])
    assert np.abs(lma_gradient(theta, data, chain3)).max() < 1e-6


def test_fit_recovers_noise_free_pure_death(pure_death):
    data = noise_free(pure_death, [0.5], [[100.0]], [0.5] * 10)
    fit = lma_fit(data, pure_death, FitConfig(compute_stderr=False))
    assert fit.converged
    assert fit.theta_hat[0] == pytest.approx(0.5, abs=1e-6)
    assert fit.objective == pytest.approx(0.0, abs=1e-6)
    assert fit.lla_theta is not None


def test_fit_recovers_noise_free_chain(chain3):
    theta = [5.0, 0.3, 0.2, 0.1]
    data = noise_free(chain3, theta, [[10, 5, 2], [30, 1, 12], [2, 20, 4]], [0.4, 0.8, 1.2, 0.6])
    fit = lma_fit(data, chain3, FitConfig(compute_stderr=False))
    np.testing.assert_allclose(fit.theta_hat, theta, rtol=1e-4)


def test_fit_result_bookkeeping(cyclic3, cyclic3_data):
    fit = lma_fit(cyclic3_data, cyclic3, FitConfig(compute_stderr=True))
    assert isinstance(fit, FitResult)
    assert fit.reaction_labels == ["R1", "R2", "R3"]
    assert all(t >= 1e-12 for t in fit.theta_hat)
    assert fit.objective >= 0
    assert len(fit.boundary_active) == 3
    assert fit.stderr is not None and len(fit.stderr) == 3
    assert len(fit.residuals_by_observation) == cyclic3_data.n_transitions
    assert fit.bic == pytest.approx(
        gaussian_bic(fit.objective, cyclic3_data.n_residual_entries, 3)
    )
    history = fit.objective_history
    assert all(b <= a + 1e-9 * abs(a) for a, b in zip(history, history[1:]))
    dumped = fit.model_dump(mode="json")
    assert "residuals_by_observation" not in dumped
    assert dumped["config_echo"]["initializer"] == "lla"


def test_fit_user_supplied_start(pure_death):
    data = noise_free(pure_death, [0.5], [[100.0]], [0.5] * 5)
    config = FitConfig(initializer="user_supplied", initial_theta=[2.0], compute_stderr=False)
    fit = lma_fit(data, pure_death, config)
    assert fit.lla_theta is None
    assert fit.theta_hat[0] == pytest.approx(0.5, abs=1e-5)


def test_fit_finite_difference_gradient(pure_death):
    data = noise_free(pure_death, [0.5], [[100.0]], [0.5] * 5)
    config = FitConfig(gradient_mode="finite_difference", compute_stderr=False)
    assert lma_fit(data, pure_death, config).theta_hat[0] == pytest.approx(0.5, rel=1e-4)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gradient_tolerance": 0.0},
        {"theta_lower_bound": -1.0},
        {"max_iterations": 0},
        {"initializer": "user_supplied"},
    ],
)
def test_fit_config_validation(kwargs):
    with pytest.raises(InvalidInputError):
        FitConfig(**kwargs)


def test_bic_arithmetic():
    n = 120
    assert gaussian_bic(5.0, n, 3) - gaussian_bic(10.0, n, 3) == pytest.approx(-n * np.log(2))
    assert gaussian_bic(10.0, n, 4) - gaussian_bic(10.0, n, 3) == pytest.approx(np.log(n))
    assert gaussian_bic(float("inf"), n, 3) == float("inf")
    with pytest.raises(InvalidInputError):
        gaussian_bic(1.0, 0, 1)


def test_lla_start_floors_only_non_positive_rates(monkeypatch, cyclic3, cyclic3_data):
    monkeypatch.setattr(
        "qrlma_lib.infer.lla_estimate", lambda *args: np.array([1e-8, 0.0, -0.2])
    )
    config = FitConfig(lla_floor=1e-6)
    batch = TransitionBatch(cyclic3, cyclic3_data)
    theta0, lla = _initial_theta(cyclic3_data, cyclic3, config, batch)
    np.testing.assert_array_equal(theta0, [1e-8, 1e-6, 1e-6])
    np.testing.assert_array_equal(lla, [1e-8, 0.0, -0.2])
