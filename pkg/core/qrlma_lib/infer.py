"""Rate estimation: the LLA generalized least-squares baseline and the LMA nonlinear fit."""
import logging
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import OptimizeResult, minimize, nnls

from qrlma_lib.error import (
    InactiveDesignError,
    InvalidInputError,
    LineSearchError,
    NumericalError,
)
from qrlma_lib.forecast import TransitionBatch, batch_predict
from qrlma_lib.reaction import ReactionSystem, check_theta
from qrlma_lib.types import ObservationSet
from qrlma_lib.uncertainty import batch_sensitivity, stderr

logger = logging.getLogger(__name__)

BOUNDARY_THRESHOLD = 1e-10
PSEUDO_INVERSE_CUTOFF = 1e-10
OVERFLOW_PENALTY = 1e100
STATIONARITY_TOLERANCE = 1e-6
BIC_CONVENTION = "BIC = N ln(RSS/N) + k ln(N), Gaussian least-squares residuals"


class FitConfig(BaseModel):
    max_iterations: int = 500
    gradient_tolerance: float = 1e-8
    function_tolerance: float = 1e-12
    theta_lower_bound: float = 1e-12
    initializer: Literal["lla", "user_supplied"] = "lla"
    initial_theta: Optional[List[float]] = None
    gradient_mode: Literal["analytic", "finite_difference"] = "analytic"
    memory_size: int = 10
    max_line_search: int = 20
    lla_floor: float = 1e-6
    lla_iterations: int = 5
    lla_tolerance: float = 1e-6
    compute_stderr: bool = True

    @model_validator(mode="after")
    def _check(self) -> "FitConfig":
        if self.gradient_tolerance <= 0 or self.function_tolerance <= 0:
            raise InvalidInputError("Tolerances must be positive")
        if self.theta_lower_bound < 0:
            raise InvalidInputError("theta_lower_bound must be nonnegative")
        if self.max_iterations < 1 or self.memory_size < 1 or self.max_line_search < 1:
            raise InvalidInputError("Iteration limits must be positive")
        if self.initializer == "user_supplied" and self.initial_theta is None:
            raise InvalidInputError("initializer 'user_supplied' needs initial_theta")
        return self


class FitResult(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    reaction_labels: List[str]
    theta_hat: List[float]
    stderr: Optional[List[float]] = None
    objective: float
    bic: float
    bic_convention: str = BIC_CONVENTION
    n_iterations: int
    n_function_evaluations: int = 0
    converged: bool
    message: str = ""
    boundary_active: List[bool] = Field(default_factory=list)
    lla_theta: Optional[List[float]] = None
    objective_history: List[float] = Field(default_factory=list)
    residuals_by_observation: List[List[float]] = Field(default_factory=list, exclude=True)
    config_echo: Dict[str, Any] = Field(default_factory=dict)
    seed_provenance: Optional[Dict[str, Any]] = None

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.theta_hat)


def _pinv_sqrt(omega: np.ndarray) -> np.ndarray:
    """L with L^T L = pinv(omega), eigen cutoff relative to the largest eigenvalue."""
    w, U = scipy.linalg.eigh(omega)
    top = float(np.max(np.abs(w))) if w.size else 0.0
    keep = w > PSEUDO_INVERSE_CUTOFF * top if top > 0 else np.zeros_like(w, dtype=bool)
    return (U[:, keep] / np.sqrt(w[keep])).T


def lla_estimate(
    data: ObservationSet,
    system: ReactionSystem,
    config: Optional[FitConfig] = None,
    batch: Optional[TransitionBatch] = None,
) -> np.ndarray:
    """Iteratively reweighted nonnegative GLS on Euler-discretized increments."""
    config = config or FitConfig()
    batch = batch if batch is not None else TransitionBatch(system, data)
    V = system.net_matrix.astype(float)
    dY = batch.targets - batch.anchors
    dt = batch.horizons
    # M_ci = V diag(kappa) dt, stacked (N, p, r)
    M = V[None, :, :] * batch.kappa[:, None, :] * dt[:, None, None]

    inactive = ~np.any(np.abs(M) > 0, axis=(0, 1))
    if np.any(inactive):
        raise InactiveDesignError(
            [system.reaction_labels[j] for j in np.flatnonzero(inactive)]
        )

    n, p, r = M.shape
    weights = np.broadcast_to(np.eye(p), (n, p, p))
    theta = np.zeros(r)
    for iteration in range(config.lla_iterations):
        A = np.einsum("nkp,npr->nkr", weights, M).reshape(-1, r)
        rhs = np.einsum("nkp,np->nk", weights, dY).reshape(-1)
        if not np.any(A):
            break
        new_theta, _ = nnls(A, rhs)
        change = np.linalg.norm(new_theta - theta) / max(np.linalg.norm(new_theta), 1e-300)
        theta = new_theta
        logger.debug(f"LLA iteration {iteration + 1}: theta={theta}, change={change:.3e}")
        if iteration > 0 and change < config.lla_tolerance:
            break
        omega = np.einsum("pj,nj,kj->npk", V, batch.kappa * theta, V) * dt[:, None, None]
        factors = [_pinv_sqrt(o) for o in omega]
        if all(f.shape[0] == 0 for f in factors):
            break
        weights = np.stack(
            [np.vstack([f, np.zeros((p - f.shape[0], p))]) for f in factors]
        )
    return theta


def lma_objective(
    theta: Any,
    data: ObservationSet,
    system: ReactionSystem,
    batch: Optional[TransitionBatch] = None,
) -> Tuple[float, Optional[np.ndarray]]:
    """Sum of squared one-step prediction errors; (inf, None) when a prediction overflows."""
    batch = batch if batch is not None else TransitionBatch(system, data)
    try:
        m = batch_predict(batch, theta)
    except NumericalError as e:
        logger.debug(f"Objective overflow: {e}")
        return float("inf"), None
    return float(np.sum((batch.targets - m) ** 2)), m


def lma_gradient(
    theta: Any,
    data: ObservationSet,
    system: ReactionSystem,
    batch: Optional[TransitionBatch] = None,
) -> np.ndarray:
    batch = batch if batch is not None else TransitionBatch(system, data)
    m, xi = batch_sensitivity(batch, theta)
    return -2.0 * np.einsum("naj,na->j", xi, batch.targets - m)


def gaussian_bic(rss: float, n: int, k: int) -> float:
    if n <= 0:
        raise InvalidInputError("BIC needs at least one residual entry")
    if not np.isfinite(rss):
        return float("inf")
    rss = max(rss, np.finfo(float).tiny)
    return float(n * np.log(rss / n) + k * np.log(n))


def _projected_gradient(theta: np.ndarray, grad: np.ndarray, lower: float) -> np.ndarray:
    pg = grad.copy()
    pg[(theta <= lower) & (grad > 0)] = 0.0
    return pg


def _initial_theta(
    data: ObservationSet,
    system: ReactionSystem,
    config: FitConfig,
    batch: TransitionBatch,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    if config.initializer == "user_supplied":
        theta0 = check_theta(system, config.initial_theta)
        return np.maximum(theta0, config.theta_lower_bound), None
    lla = lla_estimate(data, system, config, batch)
    return np.where(lla <= 0, config.lla_floor, lla), lla


def lma_fit(
    data: ObservationSet,
    system: ReactionSystem,
    config: Optional[FitConfig] = None,
    batch: Optional[TransitionBatch] = None,
    seed_provenance: Optional[Dict[str, Any]] = None,
) -> FitResult:
    """Box-constrained L-BFGS-B on the LMA least-squares objective."""
    config = config or FitConfig()
    batch = batch if batch is not None else TransitionBatch(system, data)
    theta0, lla = _initial_theta(data, system, config, batch)
    lower = config.theta_lower_bound

    last_grad = np.zeros(system.n_reactions)

    def value_and_grad(theta: np.ndarray) -> Tuple[float, np.ndarray]:
        nonlocal last_grad
        try:
            m, xi = batch_sensitivity(batch, theta)
        except NumericalError:
            return OVERFLOW_PENALTY, last_grad
        resid = batch.targets - m
        last_grad = -2.0 * np.einsum("naj,na->j", xi, resid)
        return float(np.sum(resid**2)), last_grad

    def value_only(theta: np.ndarray) -> float:
        f, _ = lma_objective(theta, data, system, batch)
        return f if np.isfinite(f) else OVERFLOW_PENALTY

    history: List[float] = []

    def record(intermediate_result: OptimizeResult) -> None:
        history.append(float(intermediate_result.fun))
        logger.debug(
            f"iteration {len(history)}: f={intermediate_result.fun:.10g} "
            f"theta={intermediate_result.x}"
        )

    analytic = config.gradient_mode == "analytic"
    result = minimize(
        value_and_grad if analytic else value_only,
        theta0,
        jac=True if analytic else "3-point",
        method="L-BFGS-B",
        bounds=[(lower, None)] * system.n_reactions,
        callback=record,
        options={
            "maxiter": config.max_iterations,
            "maxcor": config.memory_size,
            "gtol": config.gradient_tolerance,
            "ftol": config.function_tolerance,
            "maxls": config.max_line_search,
        },
    )
    theta_hat = np.maximum(result.x, lower)
    objective, m = lma_objective(theta_hat, data, system, batch)
    message = str(result.message)

    converged = bool(result.success)
    if not converged and "ABNORMAL" in message.upper():
        grad = lma_gradient(theta_hat, data, system, batch)
        pg = _projected_gradient(theta_hat, grad, lower)
        scaled = np.max(np.abs(pg) * np.maximum(theta_hat, 1e-300)) / max(objective, 1.0)
        converged = bool(scaled <= STATIONARITY_TOLERANCE)
        logger.debug(f"Line search stalled, scaled projected gradient {scaled:.3e}")
        if not converged and result.nit == 0:
            raise LineSearchError(
                f"Line search made no progress from the initial point: {message}"
            )
    if not converged:
        logger.warning(f"LMA fit did not converge: {message}")

    boundary = [bool(t < BOUNDARY_THRESHOLD) for t in theta_hat]
    if any(boundary):
        logger.info(
            "Rates at the lower bound: "
            + ", ".join(lab for lab, b in zip(system.reaction_labels, boundary) if b)
        )

    se: Optional[List[float]] = None
    if config.compute_stderr and np.isfinite(objective):
        try:
            se = stderr(theta_hat, data, system, batch).tolist()
        except NumericalError as e:
            logger.warning(f"Standard errors unavailable: {e}")

    residuals = (batch.targets - m).tolist() if m is not None else []
    return FitResult(
        reaction_labels=list(system.reaction_labels),
        theta_hat=theta_hat.tolist(),
        stderr=se,
        objective=objective,
        bic=gaussian_bic(objective, data.n_residual_entries, system.n_reactions),
        n_iterations=int(result.nit),
        n_function_evaluations=int(result.nfev),
        converged=converged,
        message=message,
        boundary_active=boundary,
        lla_theta=lla.tolist() if lla is not None else None,
        objective_history=history,
        residuals_by_observation=residuals,
        config_echo=config.model_dump(),
        seed_provenance=seed_provenance,
    )
