"""Evaluation statistics for estimator ensembles."""
from typing import Any, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.stats import wasserstein_distance

from qrlma_lib.error import DimensionError, InvalidInputError
from qrlma_lib.gillespie import SeedLike, make_generator


class EstimateEnsemble(BaseModel):
    """One estimated rate vector per simulation seed, plus the generating truth."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    estimates: np.ndarray
    truth: np.ndarray
    labels: List[str] = []

    @field_validator("estimates", "truth", mode="before")
    @classmethod
    def _array(cls, value: Any) -> np.ndarray:
        return np.array(value, dtype=float)

    @model_validator(mode="after")
    def _check(self) -> "EstimateEnsemble":
        if self.estimates.ndim == 1:
            self.estimates = self.estimates.reshape(1, -1)
        if self.estimates.shape[0] == 0:
            raise InvalidInputError("Ensemble is empty")
        if self.truth.ndim != 1 or self.estimates.shape[1] != self.truth.shape[0]:
            raise DimensionError(
                f"Estimates {self.estimates.shape} do not match truth {self.truth.shape}"
            )
        if not self.labels:
            self.labels = [f"R{j + 1}" for j in range(self.truth.shape[0])]
        return self

    @property
    def deviations(self) -> np.ndarray:
        return self.estimates - self.truth


class BootstrapBand(BaseModel):
    median: float
    q25: float
    q75: float


def wasserstein1(ensemble: EstimateEnsemble) -> float:
    """W1 between each coordinate's empirical law and the point mass at the truth, summed.

    Against a point mass the L1 distance of CDFs is the mean absolute deviation.
    """
    return float(np.abs(ensemble.deviations).mean(axis=0).sum())


def wasserstein1_two_sample(a: Any, b: Any) -> float:
    """Summed per-coordinate W1 between two ensembles of estimates."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"Ensembles have {a.shape[1]} and {b.shape[1]} coordinates")
    return float(sum(wasserstein_distance(a[:, j], b[:, j]) for j in range(a.shape[1])))


def bootstrap_band(
    ensemble: EstimateEnsemble, n_boot: int = 1000, seed: SeedLike = None
) -> BootstrapBand:
    if n_boot < 1:
        raise InvalidInputError("n_boot must be positive")
    rng = make_generator(seed)
    per_seed = np.abs(ensemble.deviations).sum(axis=1)
    idx = rng.integers(0, per_seed.shape[0], size=(n_boot, per_seed.shape[0]))
    draws = per_seed[idx].mean(axis=1)
    q25, median, q75 = np.quantile(draws, [0.25, 0.5, 0.75])
    return BootstrapBand(median=float(median), q25=float(q25), q75=float(q75))


def bias_summary(ensemble: EstimateEnsemble, sd_ddof: Optional[int] = 1) -> pd.DataFrame:
    est = ensemble.estimates
    ddof = sd_ddof if est.shape[0] > 1 else 0
    mean = est.mean(axis=0)
    bias = mean - ensemble.truth
    with np.errstate(divide="ignore", invalid="ignore"):
        relative = np.where(ensemble.truth != 0, bias / ensemble.truth, np.nan)
    return pd.DataFrame(
        {
            "reaction": ensemble.labels,
            "truth": ensemble.truth,
            "mean": mean,
            "median": np.median(est, axis=0),
            "mean_bias": bias,
            "sd": est.std(axis=0, ddof=ddof),
            "relative_bias": relative,
        }
    )
