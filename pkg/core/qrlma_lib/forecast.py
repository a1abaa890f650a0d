"""Forward prediction of the conditional mean under the local mean-field linearization."""
import logging
from typing import Any, Iterable, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from qrlma_lib import matfun
from qrlma_lib.error import (
    IntegrationDivergenceError,
    InvalidInputError,
    NumericalError,
    PredictionOverflowError,
)
from qrlma_lib.reaction import (
    ReactionSystem,
    check_state,
    check_theta,
    hazard_jacobian,
    kappa,
    lma_coefficients,
    theta_generators,
)
from qrlma_lib.types import ObservationSet

logger = logging.getLogger(__name__)

STIFFNESS_THRESHOLD = 1e6
DEFAULT_DT_GRID = (0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0)
DEFAULT_SPAN = 10.0

Method = Literal["closed_form", "euler", "rk4"]


class PredictionRequest(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    system: ReactionSystem
    theta: List[float]
    y0: List[float]
    horizon: float
    method: Method = "closed_form"
    dt: Optional[float] = None

    @model_validator(mode="after")
    def _check(self) -> "PredictionRequest":
        if self.horizon < 0:
            raise InvalidInputError("Horizon must be nonnegative")
        if self.method != "closed_form":
            if self.dt is None or self.dt <= 0:
                raise InvalidInputError(f"Method {self.method} needs a positive step dt")
            if self.horizon > 0 and self.dt > self.horizon:
                raise InvalidInputError("Step dt must not exceed the horizon")
        return self

    def run(self) -> np.ndarray:
        if self.method == "closed_form":
            return lma_predict(self.system, self.theta, self.y0, self.horizon)
        assert self.dt is not None
        return ode_solve(
            self.system, self.theta, self.y0, self.horizon, self.dt, self.method
        )


def one_norm(A: np.ndarray) -> float:
    return float(np.max(np.abs(A).sum(axis=-2)))


def lma_predict(system: ReactionSystem, theta: Any, y0: Any, s: float) -> np.ndarray:
    """m(t+s | t) = e^{sP} y0 + (e^{sP} - I) P^{-1} b, linearized at y0."""
    y0 = check_state(system, y0)
    if s < 0:
        raise InvalidInputError("Horizon must be nonnegative")
    if s == 0:
        return y0.copy()
    op = lma_coefficients(system, y0, theta)
    with np.errstate(over="ignore", invalid="ignore"):
        m = matfun.expm(s * op.P) @ y0 + matfun.phi1(op.P, s) @ op.b
    if not np.all(np.isfinite(m)):
        raise PredictionOverflowError(s * one_norm(op.P))
    return m


def ode_solve(
    system: ReactionSystem,
    theta: Any,
    y0: Any,
    s: float,
    dt: float,
    method: Literal["euler", "rk4"],
) -> np.ndarray:
    """Fixed-step integration of m' = P m + b from m(0) = y0; the last step lands on s."""
    if dt <= 0:
        raise InvalidInputError("Step dt must be positive")
    if method not in ("euler", "rk4"):
        raise InvalidInputError(f"Unknown integration method '{method}'")
    y0 = check_state(system, y0)
    op = lma_coefficients(system, y0, theta)
    P, b = op.P, op.b

    def field(m: np.ndarray) -> np.ndarray:
        return P @ m + b

    n_steps = max(int(np.ceil(s / dt - 1e-9)), 0)
    m = y0.copy()
    t = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            h = min(dt, s - t) if k == n_steps - 1 else dt
            if method == "euler":
                m = m + h * field(m)
            else:
                k1 = field(m)
                k2 = field(m + 0.5 * h * k1)
                k3 = field(m + 0.5 * h * k2)
                k4 = field(m + h * k3)
                m = m + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
            if not np.all(np.isfinite(m)):
                raise IntegrationDivergenceError(k + 1, method)
    return m


class StiffnessReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    table: pd.DataFrame
    eigenvalues: np.ndarray
    stiffness_ratio: float
    horizons: List[float]

    @property
    def stiff(self) -> bool:
        return self.stiffness_ratio >= STIFFNESS_THRESHOLD


def stiffness_report(
    system: ReactionSystem,
    theta: Any,
    y0: Any,
    dt_grid: Sequence[float] = DEFAULT_DT_GRID,
    horizons: Optional[Sequence[float]] = None,
    span: float = DEFAULT_SPAN,
    n_horizons: int = 5,
) -> StiffnessReport:
    """MAE of Euler and RK4 against the closed form, per step size.

    Without explicit horizons the evaluation times are n_horizons points equally
    spaced over (0, span].
    """
    if len(dt_grid) == 0:
        raise InvalidInputError("Step grid is empty")
    if horizons is None:
        horizons = list(np.linspace(span / n_horizons, span, n_horizons))
    if len(horizons) == 0:
        raise InvalidInputError("Horizon grid is empty")

    reference = np.stack([lma_predict(system, theta, y0, h) for h in horizons])
    op = lma_coefficients(system, y0, theta)
    eigs = matfun.eigenvalues(op.P)

    rows = []
    for method in ("euler", "rk4"):
        for dt in sorted(dt_grid):
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    approx = np.stack(
                        [ode_solve(system, theta, y0, h, dt, method) for h in horizons]
                    )
                    mae = float(np.mean(np.abs(approx - reference)))
                diverged = not np.isfinite(mae)
            except NumericalError:
                mae, diverged = float("inf"), True
            if diverged:
                logger.debug(f"{method} diverged at dt={dt}")
                mae = float("inf")
            rows.append({"method": method, "dt": float(dt), "mae": mae, "diverged": diverged})

    return StiffnessReport(
        table=pd.DataFrame(rows, columns=["method", "dt", "mae", "diverged"]),
        eigenvalues=eigs,
        stiffness_ratio=matfun.stiffness_ratio(eigs),
        horizons=[float(h) for h in horizons],
    )


class TransitionBatch:
    """All (anchor, target, horizon) triples of a dataset with their theta-free factors.

    H, kappa and the augmented generators G_j depend on the anchors only, so a fit
    evaluates every prediction at a new theta as expm(s * sum_j theta_j G_j).
    """

    def __init__(self, system: ReactionSystem, data: ObservationSet):
        if data.species != system.species:
            raise InvalidInputError(
                f"Data species {data.species} do not match system species {system.species}"
            )
        self.system = system
        self.anchors, self.targets, self.horizons, self.replicate_index = data.transitions()
        _, self.H = hazard_jacobian(system, self.anchors, np.ones(system.n_reactions))
        self.kappa = kappa(system, self.anchors)
        self.generators = theta_generators(system, self.H, self.kappa, self.anchors)

    @property
    def n_transitions(self) -> int:
        return int(self.anchors.shape[0])

    @property
    def n_reactions(self) -> int:
        return self.system.n_reactions

    def augmented(self, theta: np.ndarray) -> np.ndarray:
        return np.einsum("j,njab->nab", theta, self.generators)

    def scaled(self, theta: np.ndarray) -> np.ndarray:
        return self.horizons[:, None, None] * self.augmented(theta)

    def restrict(self, reactions: Iterable[int]) -> "TransitionBatch":
        """Same transitions against a subset of the reactions, without recomputing anchors."""
        idx = list(reactions)
        clone = object.__new__(TransitionBatch)
        clone.system = self.system.subsystem(idx)
        clone.anchors = self.anchors
        clone.targets = self.targets
        clone.horizons = self.horizons
        clone.replicate_index = self.replicate_index
        clone.H = self.H[:, idx, :]
        clone.kappa = self.kappa[:, idx]
        clone.generators = self.generators[:, idx]
        return clone


def batch_predict(batch: TransitionBatch, theta: Any) -> np.ndarray:
    """Predictions for every transition, shape (N, p)."""
    theta = check_theta(batch.system, theta)
    p = batch.system.n_species
    sA = batch.scaled(theta)
    with np.errstate(over="ignore", invalid="ignore"):
        E = matfun.expm(sA)
        m = np.einsum("nab,nb->na", E[:, :p, :p], batch.anchors) + E[:, :p, p]
    if not np.all(np.isfinite(m)):
        raise PredictionOverflowError(one_norm(sA[:, :p, :p]))
    return m
