from typing import Any, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from qrlma_lib.error import DataFormatError, DimensionError


def _float_array(value: Any, ndim: int) -> np.ndarray:
    arr = np.array(value, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"Expected a {ndim}-dimensional array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class Trajectory(BaseModel):
    """One exact stochastic path: states[k] holds between event_times[k] and event_times[k+1]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    species: List[str]
    event_times: np.ndarray
    states: np.ndarray
    reaction_indices: np.ndarray

    @property
    def n_events(self) -> int:
        return int(self.reaction_indices.shape[0])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


class Replicate(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    states: np.ndarray

    @field_validator("times", mode="before")
    @classmethod
    def _times(cls, value: Any) -> np.ndarray:
        return _float_array(value, 1)

    @field_validator("states", mode="before")
    @classmethod
    def _states(cls, value: Any) -> np.ndarray:
        return _float_array(value, 2)

    @model_validator(mode="after")
    def _check(self) -> "Replicate":
        if self.times.shape[0] != self.states.shape[0]:
            raise DimensionError(
                f"{self.times.shape[0]} time points for {self.states.shape[0]} observations"
            )
        if self.times.shape[0] < 2:
            raise DataFormatError("Each replicate needs at least 2 time points")
        if not np.all(np.isfinite(self.times)) or not np.all(np.isfinite(self.states)):
            raise DataFormatError("Replicate contains non-finite values")
        if np.any(np.diff(self.times) <= 0):
            raise DataFormatError("Observation times must be strictly increasing")
        if np.any(self.states < 0):
            raise DataFormatError("Counts must be nonnegative")
        return self

    @property
    def n_transitions(self) -> int:
        return int(self.times.shape[0] - 1)


class ObservationSet(BaseModel):
    """Replicate-indexed count vectors at absolute, possibly irregular, times."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    species: List[str]
    replicates: List[Replicate]

    @model_validator(mode="after")
    def _check(self) -> "ObservationSet":
        if not self.replicates:
            raise DataFormatError("Observation set has no replicates")
        p = len(self.species)
        for c, rep in enumerate(self.replicates):
            if rep.states.shape[1] != p:
                raise DimensionError(
                    f"Replicate {c} has {rep.states.shape[1]} columns for {p} species"
                )
        return self

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_replicates(self) -> int:
        return len(self.replicates)

    @property
    def n_transitions(self) -> int:
        return sum(rep.n_transitions for rep in self.replicates)

    @property
    def n_residual_entries(self) -> int:
        return self.n_transitions * self.n_species

    @property
    def mean_dt(self) -> float:
        return float(np.mean(np.concatenate([np.diff(r.times) for r in self.replicates])))

    def transitions(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Stacked (anchors, targets, horizons, replicate_index) over all replicates."""
        anchors, targets, horizons, index = [], [], [], []
        for c, rep in enumerate(self.replicates):
            anchors.append(rep.states[:-1])
            targets.append(rep.states[1:])
            horizons.append(np.diff(rep.times))
            index.append(np.full(rep.n_transitions, c))
        return (
            np.concatenate(anchors),
            np.concatenate(targets),
            np.concatenate(horizons),
            np.concatenate(index),
        )

    def select_species(self, order: List[int]) -> "ObservationSet":
        return ObservationSet(
            species=[self.species[i] for i in order],
            replicates=[
                Replicate(times=r.times, states=r.states[:, order]) for r in self.replicates
            ],
        )

    def subset(self, replicates: List[int]) -> "ObservationSet":
        return ObservationSet(
            species=list(self.species), replicates=[self.replicates[c] for c in replicates]
        )

    @classmethod
    def concat(cls, sets: List["ObservationSet"]) -> "ObservationSet":
        species = sets[0].species
        for s in sets[1:]:
            if s.species != species:
                raise DimensionError("Observation sets have different species")
        return cls(species=list(species), replicates=[r for s in sets for r in s.replicates])
