"""Parameter sensitivities of the closed-form predictor and Fisher-information standard errors."""
import logging
import warnings
from typing import Any, Literal, Optional, Tuple

import numpy as np
import scipy.linalg

from qrlma_lib import matfun
from qrlma_lib.error import (
    NonIdentifiabilityWarning,
    PredictionOverflowError,
    SingularMatrixError,
)
from qrlma_lib.forecast import TransitionBatch, one_norm
from qrlma_lib.reaction import (
    ReactionSystem,
    augment,
    check_state,
    check_theta,
    lma_coefficients,
    theta_generators,
)
from qrlma_lib.types import ObservationSet

logger = logging.getLogger(__name__)

INVERSE_CONDITION_LIMIT = 1e8
NULL_SPACE_CUTOFF = 1e-10

SensitivityMethod = Literal["auto", "inverse", "phi1"]


def _sensitivity_phi1(
    system: ReactionSystem, y0: np.ndarray, s: float, op: Any
) -> np.ndarray:
    p = system.n_species
    A = augment(op.P, op.b)
    G = theta_generators(system, op.H, op.kappa, y0)
    sA = np.broadcast_to(s * A, G.shape)
    L = matfun.expm_frechet(sA, s * G)
    z = np.append(y0, 1.0)
    return (L[:, :p, :] @ z).T


def _sensitivity_inverse(
    system: ReactionSystem, y0: np.ndarray, s: float, op: Any
) -> np.ndarray:
    P, b = op.P, op.b
    p, r = system.n_species, system.n_reactions
    V = system.net_matrix.astype(float)
    P_inv = matfun.inverse(P)
    E = matfun.expm(s * P)
    E_minus_I = E - np.eye(p)
    offset = op.kappa - op.H @ y0

    xi = np.empty((p, r))
    for j in range(r):
        dP = np.outer(V[:, j], op.H[j])
        db = V[:, j] * offset[j]
        L = matfun.expm_frechet(s * P, s * dP)
        xi[:, j] = (
            L @ y0
            - P_inv @ dP @ P_inv @ E_minus_I @ b
            + P_inv @ L @ b
            + P_inv @ E_minus_I @ db
        )
    return xi


def predict_sensitivity(
    system: ReactionSystem,
    theta: Any,
    y0: Any,
    s: float,
    method: SensitivityMethod = "auto",
) -> np.ndarray:
    """p x r matrix whose column j is dm(t+s|t)/dtheta_j at fixed anchor y0."""
    theta = check_theta(system, theta)
    y0 = check_state(system, y0)
    if s == 0:
        return np.zeros((system.n_species, system.n_reactions))
    op = lma_coefficients(system, y0, theta)

    use_inverse = method == "inverse"
    if method == "auto":
        use_inverse = matfun.condition(op.P) < INVERSE_CONDITION_LIMIT
    with np.errstate(over="ignore", invalid="ignore"):
        if use_inverse:
            try:
                xi = _sensitivity_inverse(system, y0, s, op)
            except SingularMatrixError:
                if method == "inverse":
                    raise
                xi = _sensitivity_phi1(system, y0, s, op)
        else:
            xi = _sensitivity_phi1(system, y0, s, op)
    if not np.all(np.isfinite(xi)):
        raise PredictionOverflowError(s * one_norm(op.P))
    return xi


def batch_sensitivity(
    batch: TransitionBatch, theta: Any
) -> Tuple[np.ndarray, np.ndarray]:
    """Predictions (N, p) and sensitivities (N, p, r) for every transition."""
    theta = check_theta(batch.system, theta)
    p = batch.system.n_species
    s = batch.horizons[:, None, None, None]
    sA = batch.scaled(theta)
    sG = s * batch.generators
    with np.errstate(over="ignore", invalid="ignore"):
        E, L = matfun.expm_and_frechet(np.broadcast_to(sA[:, None], sG.shape), sG)
        z = np.concatenate([batch.anchors, np.ones((batch.n_transitions, 1))], axis=1)
        m = np.einsum("nab,nb->na", E[:, 0, :p, :], z)
        xi = np.einsum("njab,nb->naj", L[:, :, :p, :], z)
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(xi))):
        raise PredictionOverflowError(one_norm(sA[:, :p, :p]))
    return m, xi


def _batch(
    system: ReactionSystem, data: ObservationSet, batch: Optional[TransitionBatch]
) -> TransitionBatch:
    return batch if batch is not None else TransitionBatch(system, data)


def _scores(
    theta_hat: Any,
    data: ObservationSet,
    system: ReactionSystem,
    batch: Optional[TransitionBatch],
) -> Tuple[np.ndarray, np.ndarray]:
    batch = _batch(system, data, batch)
    m, xi = batch_sensitivity(batch, theta_hat)
    residuals = batch.targets - m
    return np.einsum("naj,na->nj", xi, residuals), residuals


def fisher_information(
    theta_hat: Any,
    data: ObservationSet,
    system: ReactionSystem,
    batch: Optional[TransitionBatch] = None,
) -> np.ndarray:
    """Sum over observations of g g^T with g = xi^T (Y - m)."""
    g, _ = _scores(theta_hat, data, system, batch)
    return g.T @ g


def residual_variance(residuals: np.ndarray, n_rates: int) -> float:
    """RSS / (N p - r), the per-entry residual variance at the estimate."""
    dof = max(residuals.size - n_rates, 1)
    return float(np.sum(residuals**2)) / dof


def stderr(
    theta_hat: Any,
    data: ObservationSet,
    system: ReactionSystem,
    batch: Optional[TransitionBatch] = None,
) -> np.ndarray:
    """sqrt(diag(sigma^4 I^{-1})) with sigma^2 the residual variance.

    The residuals g = xi^T (Y - m) become scores once divided by sigma^2, so the
    unscaled outer-product sum is rescaled by sigma^4 before inversion.
    Coordinates in the null space of I are reported as inf.
    """
    g, residuals = _scores(theta_hat, data, system, batch)
    info = g.T @ g
    r = info.shape[0]
    sigma2 = residual_variance(residuals, r)
    eigval, eigvec = scipy.linalg.eigh(info)
    logger.debug(f"Information eigenvalues: {eigval}, residual variance: {sigma2:.6g}")
    scale = max(float(np.max(np.abs(eigval))), 0.0)
    null = eigval <= NULL_SPACE_CUTOFF * scale if scale > 0 else np.ones(r, dtype=bool)
    if not np.any(null):
        return sigma2 * np.sqrt(np.clip(np.diag(scipy.linalg.inv(info)), 0.0, None))

    support = np.any(np.abs(eigvec[:, null]) > 1e-8, axis=1)
    labels = [system.reaction_labels[j] for j in np.flatnonzero(support)]
    warnings.warn(
        f"Fisher information is singular; rates not identifiable: {', '.join(labels)}",
        NonIdentifiabilityWarning,
        stacklevel=2,
    )
    keep = ~null
    pseudo = (eigvec[:, keep] / eigval[keep]) @ eigvec[:, keep].T
    out = sigma2 * np.sqrt(np.clip(np.diag(pseudo), 0.0, None))
    out[support] = np.inf
    return out
