import numpy as np
import pytest
from conftest import CYCLIC3_THETA, CYCLIC3_Y
from scipy.special import gamma

from qrlma_lib.error import DimensionError, InvalidInputError
from qrlma_lib.reaction import (
    ReactionSystem,
    hazard,
    hazard_jacobian,
    kappa,
    lma_coefficients,
    unitary_coefficients,
)


def test_system_defaults(cyclic3):
    assert cyclic3.n_species == 3
    assert cyclic3.n_reactions == 3
    np.testing.assert_array_equal(
        cyclic3.net_matrix, [[-2, -1, 2], [2, -1, 0], [0, 3, -2]]
    )
    assert cyclic3.describe_reaction(1) == "A + B -> 3C"


def test_system_labels_generated():
    system = ReactionSystem(species=["X"], reactant_matrix=[[1, 0]], product_matrix=[[0, 1]])
    assert system.reaction_labels == ["R1", "R2"]


@pytest.mark.parametrize(
    "kwargs, error",
    [
        ({"species": ["X"], "reactant_matrix": [[1]], "product_matrix": [[0, 1]]}, DimensionError),
        ({"species": ["X", "Y"], "reactant_matrix": [[1]], "product_matrix": [[0]]}, DimensionError),
        ({"species": ["X"], "reactant_matrix": [[-1]], "product_matrix": [[0]]}, InvalidInputError),
        ({"species": ["X"], "reactant_matrix": [[0.5]], "product_matrix": [[0]]}, InvalidInputError),
        ({"species": ["X", "X"], "reactant_matrix": [[1], [0]], "product_matrix": [[0], [1]]}, InvalidInputError),
    ],
)
def test_system_validation(kwargs, error):
    with pytest.raises(error):
        ReactionSystem(**kwargs)


def test_kappa_cyclic3(cyclic3):
    np.testing.assert_allclose(kappa(cyclic3, CYCLIC3_Y), [45, 200, 45])


def test_kappa_below_stoichiometry_is_zero(cyclic3):
    k = kappa(cyclic3, [1, 20, 10])
    assert k[0] == 0
    assert k[1] == 20


def test_kappa_source_reaction_is_one(source_only):
    assert kappa(source_only, [7.3])[0] == 1


def test_kappa_real_valued_state():
    system = ReactionSystem(species=["X"], reactant_matrix=[[2]], product_matrix=[[0]])
    y = 5.5
    expected = gamma(y + 1) / (gamma(3) * gamma(y - 1))
    assert kappa(system, [y])[0] == pytest.approx(expected, rel=1e-12)


def test_hazard_cyclic3(cyclic3):
    np.testing.assert_allclose(hazard(cyclic3, CYCLIC3_Y, CYCLIC3_THETA), [9, 20, 9])


def test_hazard_zero_rates(cyclic3):
    np.testing.assert_array_equal(hazard(cyclic3, CYCLIC3_Y, np.zeros(3)), 0)


def test_hazard_identity_reactants():
    eye = np.eye(3, dtype=int)
    system = ReactionSystem(species=["A", "B", "C"], reactant_matrix=eye, product_matrix=0 * eye)
    np.testing.assert_allclose(hazard(system, [4, 5, 6], [1, 1, 1]), [4, 5, 6])


def test_hazard_linear_in_theta(cyclic3):
    rng = np.random.default_rng(3)
    theta = rng.uniform(0.01, 1, 3)
    np.testing.assert_allclose(
        hazard(cyclic3, CYCLIC3_Y, 2.5 * theta), 2.5 * hazard(cyclic3, CYCLIC3_Y, theta)
    )


def test_hazard_rejects_bad_dimensions(cyclic3):
    with pytest.raises(DimensionError):
        hazard(cyclic3, [1, 2], CYCLIC3_THETA)
    with pytest.raises(DimensionError):
        hazard(cyclic3, CYCLIC3_Y, [0.1, 0.2])


def test_hazard_rejects_negative_rates(cyclic3):
    with pytest.raises(InvalidInputError):
        hazard(cyclic3, CYCLIC3_Y, [0.1, -0.1, 0.2])


def test_jacobian_cyclic3(cyclic3):
    lam, H = hazard_jacobian(cyclic3, CYCLIC3_Y, CYCLIC3_THETA)
    np.testing.assert_allclose(lam, [[1.9, 0, 0], [2.0, 1.0, 0], [0, 0, 1.9]], rtol=1e-12)
    np.testing.assert_allclose(lam, CYCLIC3_THETA[:, None] * H)


def test_jacobian_symbolic_pattern(cyclic3):
    rng = np.random.default_rng(11)
    for _ in range(10):
        y = rng.integers(2, 50, 3).astype(float)
        theta = rng.uniform(0.01, 1, 3)
        lam, _ = hazard_jacobian(cyclic3, y, theta)
        expected = [
            [theta[0] * (y[0] - 0.5), 0, 0],
            [theta[1] * y[1], theta[1] * y[0], 0],
            [0, 0, theta[2] * (y[2] - 0.5)],
        ]
        np.testing.assert_allclose(lam, expected, rtol=1e-12, atol=1e-14)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(5)
    for _ in range(20):
        K = rng.integers(0, 3, (3, 4))
        S = rng.integers(0, 3, (3, 4))
        system = ReactionSystem(species=["A", "B", "C"], reactant_matrix=K, product_matrix=S)
        y = K.max(axis=1) + 2 + rng.uniform(0, 20, 3)
        theta = rng.uniform(0.1, 1, 4)
        lam, _ = hazard_jacobian(system, y, theta)
        for l in range(3):
            h = 1e-6 * max(y[l], 1)
            up, down = y.copy(), y.copy()
            up[l] += h
            down[l] -= h
            fd = (hazard(system, up, theta) - hazard(system, down, theta)) / (2 * h)
            np.testing.assert_allclose(lam[:, l], fd, rtol=1e-6, atol=1e-8)


def test_jacobian_zero_below_stoichiometry(cyclic3):
    lam, _ = hazard_jacobian(cyclic3, [1, 20, 0], CYCLIC3_THETA)
    assert lam[0, 0] == 0
    assert lam[2, 2] == 0


def test_jacobian_zero_where_no_reactant(cyclic3):
    lam, _ = hazard_jacobian(cyclic3, CYCLIC3_Y, CYCLIC3_THETA)
    assert lam[0, 1] == 0
    assert lam[2, 0] == 0


def test_lma_coefficients_b_cyclic3(cyclic3):
    y1, y2, y3 = CYCLIC3_Y
    t1, t2, t3 = CYCLIC3_THETA
    op = lma_coefficients(cyclic3, CYCLIC3_Y, CYCLIC3_THETA)
    expected = [
        t1 * y1**2 + t2 * y1 * y2 - t3 * y3**2,
        -t1 * y1**2 + t2 * y1 * y2,
        -3 * t2 * y1 * y2 + t3 * y3**2,
    ]
    np.testing.assert_allclose(op.b, expected, rtol=1e-12)


def test_lma_coefficients_determinant(cyclic3):
    op = lma_coefficients(cyclic3, CYCLIC3_Y, CYCLIC3_THETA)
    assert np.linalg.det(op.P) == pytest.approx(14.44, rel=1e-10)


def test_determinant_formula_random_draws(cyclic3):
    rng = np.random.default_rng(2)
    for _ in range(100):
        y = rng.integers(2, 200, 3).astype(float)
        theta = rng.uniform(0.01, 2, 3)
        op = lma_coefficients(cyclic3, y, theta)
        expected = 4 * np.prod(theta) * (y[0] - 0.5) * y[0] * (y[2] - 0.5)
        assert np.linalg.det(op.P) == pytest.approx(expected, rel=1e-10)


def test_anchor_identity(cyclic3):
    rng = np.random.default_rng(8)
    for _ in range(20):
        y = rng.integers(0, 100, 3).astype(float)
        theta = rng.uniform(0, 1, 3)
        op = lma_coefficients(cyclic3, y, theta)
        np.testing.assert_allclose(
            op.P @ y + op.b,
            cyclic3.net_matrix @ hazard(cyclic3, y, theta),
            rtol=1e-12,
            atol=1e-9,
        )


def test_operator_recomputable_from_anchor(cyclic3):
    op = lma_coefficients(cyclic3, CYCLIC3_Y, CYCLIC3_THETA)
    again = lma_coefficients(cyclic3, op.anchor_state, op.anchor_theta)
    np.testing.assert_array_equal(op.P, again.P)
    np.testing.assert_array_equal(op.b, again.b)


def test_unitary_coefficients_match(chain3):
    rng = np.random.default_rng(4)
    theta = rng.uniform(0.1, 2, chain3.n_reactions)
    P, b = unitary_coefficients(chain3, theta)
    for _ in range(5):
        y = rng.integers(1, 40, 3).astype(float)
        op = lma_coefficients(chain3, y, theta)
        np.testing.assert_allclose(op.P, P, atol=1e-12)
        np.testing.assert_allclose(op.b, b, atol=1e-9)


def test_unitary_coefficients_reject_cyclic3(cyclic3):
    assert not cyclic3.is_unitary
    with pytest.raises(InvalidInputError):
        unitary_coefficients(cyclic3, CYCLIC3_THETA)


def test_subsystem_and_blocks(cyclic3):
    sub = cyclic3.subsystem([2, 0])
    assert sub.reaction_labels == ["R3", "R1"]
    blocks = cyclic3.replicate_blocks(2)
    assert blocks.species == ["A_1", "B_1", "C_1", "A_2", "B_2", "C_2"]
    assert blocks.n_reactions == 6
    np.testing.assert_array_equal(blocks.reactant_matrix[3:, 3:], cyclic3.reactant_matrix)
    np.testing.assert_array_equal(blocks.reactant_matrix[:3, 3:], 0)
