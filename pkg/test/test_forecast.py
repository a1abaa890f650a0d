import numpy as np
import pytest
from conftest import CYCLIC3_THETA, CYCLIC3_Y

from qrlma_lib import matfun
from qrlma_lib.error import IntegrationDivergenceError, InvalidInputError
from qrlma_lib.fixtures import load_preset
from qrlma_lib.forecast import (
    PredictionRequest,
    TransitionBatch,
    batch_predict,
    lma_predict,
    ode_solve,
    stiffness_report,
)
from qrlma_lib.gillespie import simulate_dataset
from qrlma_lib.reaction import hazard, lma_coefficients


def test_zero_horizon_returns_anchor(cyclic3):
    np.testing.assert_array_equal(lma_predict(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, 0.0), CYCLIC3_Y)


def test_pure_death_closed_form(pure_death):
    m = lma_predict(pure_death, [0.5], [100.0], 2.0)
    assert m[0] == pytest.approx(100 * np.exp(-1), rel=1e-12)


def test_source_only_singular_generator(source_only):
    m = lma_predict(source_only, [3.0], [0.0], 2.0)
    assert m[0] == pytest.approx(6.0, rel=1e-12)


def test_negative_horizon_rejected(pure_death):
    with pytest.raises(InvalidInputError):
        lma_predict(pure_death, [0.5], [100.0], -1.0)


def test_anchor_derivative_is_net_hazard(cyclic3):
    s = 1e-6
    slope = (lma_predict(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, s) - CYCLIC3_Y) / s
    np.testing.assert_allclose(
        slope, cyclic3.net_matrix @ hazard(cyclic3, CYCLIC3_Y, CYCLIC3_THETA), rtol=1e-4
    )


def test_rk4_single_step(pure_death):
    m = ode_solve(pure_death, [1.0], [100.0], 1.0, 1.0, "rk4")
    assert m[0] == pytest.approx(37.5, rel=1e-12)


def test_rk4_small_step_matches_closed_form(pure_death):
    m = ode_solve(pure_death, [1.0], [100.0], 1.0, 0.01, "rk4")
    assert m[0] == pytest.approx(100 * np.exp(-1), rel=1e-6)


def test_euler_constant_field(source_only):
    m = ode_solve(source_only, [3.0], [2.0], 1.0, 0.3, "euler")
    assert m[0] == pytest.approx(2.0 + 3.0, rel=1e-12)


def test_ode_solve_rejects_bad_step(pure_death):
    with pytest.raises(InvalidInputError):
        ode_solve(pure_death, [1.0], [100.0], 1.0, 0.0, "rk4")
    with pytest.raises(InvalidInputError):
        ode_solve(pure_death, [1.0], [100.0], 1.0, 0.1, "midpoint")


def test_rk4_agrees_on_non_stiff_systems(cyclic3):
    rng = np.random.default_rng(6)
    for _ in range(5):
        y = rng.integers(5, 30, 3).astype(float)
        theta = rng.uniform(0.01, 0.2, 3)
        op = lma_coefficients(cyclic3, y, theta)
        s = 1.0 / np.abs(op.P).sum(axis=0).max()
        np.testing.assert_allclose(
            ode_solve(cyclic3, theta, y, s, s / 1000, "rk4"),
            lma_predict(cyclic3, theta, y, s),
            rtol=1e-6,
            atol=1e-8,
        )


def test_euler_diverges_on_stiff_fixture():
    preset = load_preset("cyclic3-stiff")
    with pytest.raises(IntegrationDivergenceError) as info:
        ode_solve(preset.system, preset.theta, preset.initial_state, 5000.0, 1.0, "euler")
    assert info.value.step >= 1


def test_stiff_eigenvalues():
    preset = load_preset("cyclic3-stiff")
    op = lma_coefficients(preset.system, preset.initial_state, preset.theta)
    eigs = np.sort(np.real(matfun.eigenvalues(op.P)))
    np.testing.assert_allclose(eigs, [-3.8, -3.61e-5, 1.05e-6], rtol=2e-2)


def test_stiffness_report_stiff_fixture():
    preset = load_preset("cyclic3-stiff")
    report = stiffness_report(
        preset.system, preset.theta, preset.initial_state, dt_grid=[0.01, 0.05, 0.25, 1.0]
    )
    assert report.stiff
    assert report.stiffness_ratio >= 1e6
    assert list(report.table.columns) == ["method", "dt", "mae", "diverged"]
    assert report.horizons == pytest.approx([2.0, 4.0, 6.0, 8.0, 10.0])
    for method in ("euler", "rk4"):
        mae = report.table[report.table["method"] == method]["mae"].to_numpy()
        assert mae[0] < mae[1]
        assert mae[-1] > 10 * mae[0]
    euler = report.table[report.table["method"] == "euler"]
    assert euler["diverged"].iloc[-1] or euler["mae"].iloc[-1] > 1.0
    small = report.table[report.table["dt"] == 0.01].set_index("method")["mae"]
    assert small["rk4"] < small["euler"]


def test_stiffness_report_non_stiff(pure_death):
    report = stiffness_report(pure_death, [0.1], [100.0], dt_grid=[0.1, 0.5], span=5.0)
    assert not report.stiff
    assert not report.table["diverged"].any()


def test_stiffness_report_empty_grid(pure_death):
    with pytest.raises(InvalidInputError):
        stiffness_report(pure_death, [0.1], [100.0], dt_grid=[])


def test_prediction_request_validation(pure_death):
    with pytest.raises(InvalidInputError):
        PredictionRequest(system=pure_death, theta=[1.0], y0=[10.0], horizon=1.0, method="rk4")
    with pytest.raises(InvalidInputError):
        PredictionRequest(
            system=pure_death, theta=[1.0], y0=[10.0], horizon=1.0, method="euler", dt=2.0
        )
    request = PredictionRequest(system=pure_death, theta=[1.0], y0=[100.0], horizon=1.0)
    assert request.run()[0] == pytest.approx(100 * np.exp(-1))


def test_batch_predict_matches_single(cyclic3):
    data = simulate_dataset(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, 3, keep_every=2, T=5, seed=1)
    batch = TransitionBatch(cyclic3, data)
    theta = np.array([0.3, 0.05, 0.1])
    batched = batch_predict(batch, theta)
    for n in range(batch.n_transitions):
        np.testing.assert_allclose(
            batched[n],
            lma_predict(cyclic3, theta, batch.anchors[n], batch.horizons[n]),
            rtol=1e-10,
            atol=1e-10,
        )


def test_batch_restrict(cyclic3):
    data = simulate_dataset(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, 2, T=4, seed=2)
    batch = TransitionBatch(cyclic3, data)
    sub = batch.restrict([0, 2])
    direct = TransitionBatch(cyclic3.subsystem([0, 2]), data)
    theta = np.array([0.2, 0.2])
    np.testing.assert_allclose(batch_predict(sub, theta), batch_predict(direct, theta))


def test_batch_rejects_species_mismatch(cyclic3, pure_death):
    data = simulate_dataset(pure_death, [0.1], [50], 1, T=3, seed=0)
    with pytest.raises(InvalidInputError):
        TransitionBatch(cyclic3, data)
