"""File formats: reaction-system JSON, observation CSV, JSON and CSV results."""
import io
import json
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import pydantic
from pydantic import BaseModel, Field, NonNegativeInt, model_validator

from qrlma_lib.error import DataFormatError, DimensionError, SpecFormatError
from qrlma_lib.reaction import ReactionSystem
from qrlma_lib.types import ObservationSet, Replicate

FLOAT_FORMAT = "%.17g"
REPLICATE_COLUMN = "replicate_id"
TIME_COLUMN = "time"

PathLike = Union[str, Path]


class ReactionSpec(BaseModel):
    label: Optional[str] = None
    reactants: Dict[str, NonNegativeInt] = Field(default_factory=dict)
    products: Dict[str, NonNegativeInt] = Field(default_factory=dict)
    rate: Optional[float] = None


class SystemSpecFile(BaseModel):
    """JSON document describing species and reactions, optionally with rates."""

    species: List[str]
    reactions: List[ReactionSpec]

    @model_validator(mode="after")
    def _check(self) -> "SystemSpecFile":
        if not self.species or not self.reactions:
            raise ValueError("at least one species and one reaction are required")
        if len(set(self.species)) != len(self.species):
            raise ValueError("species names must be unique")
        declared = set(self.species)
        for j, r in enumerate(self.reactions):
            unknown = sorted((set(r.reactants) | set(r.products)) - declared)
            if unknown:
                raise ValueError(
                    f"reaction {r.label or j + 1} uses undeclared species {', '.join(unknown)}"
                )
        labels = [r.label for r in self.reactions if r.label]
        if len(set(labels)) != len(labels):
            raise ValueError("reaction labels must be unique")
        return self

    def to_system(self) -> ReactionSystem:
        index = {s: i for i, s in enumerate(self.species)}
        K = np.zeros((len(self.species), len(self.reactions)), dtype=np.int64)
        S = np.zeros_like(K)
        for j, r in enumerate(self.reactions):
            for name, c in r.reactants.items():
                K[index[name], j] = c
            for name, c in r.products.items():
                S[index[name], j] = c
        return ReactionSystem(
            species=list(self.species),
            reactant_matrix=K,
            product_matrix=S,
            reaction_labels=[r.label or f"R{j + 1}" for j, r in enumerate(self.reactions)],
        )

    def rates(self) -> Optional[np.ndarray]:
        """Rates as an array when every reaction carries one, else None."""
        values = [r.rate for r in self.reactions]
        if any(v is None for v in values):
            return None
        return np.asarray(values, dtype=float)

    @classmethod
    def from_system(
        cls, system: ReactionSystem, theta: Optional[Sequence[float]] = None
    ) -> "SystemSpecFile":
        reactions = []
        for j, label in enumerate(system.reaction_labels):
            reactions.append(
                ReactionSpec(
                    label=label,
                    reactants={
                        s: int(c) for s, c in zip(system.species, system.reactant_matrix[:, j]) if c
                    },
                    products={
                        s: int(c) for s, c in zip(system.species, system.product_matrix[:, j]) if c
                    },
                    rate=None if theta is None else float(theta[j]),
                )
            )
        return cls(species=list(system.species), reactions=reactions)


def parse_system_spec(text: str) -> SystemSpecFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFormatError(f"Invalid JSON: {e.msg}", e.lineno, e.colno) from None
    try:
        return SystemSpecFile.model_validate(raw)
    except pydantic.ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'document'}: {err['msg']}"
            for err in e.errors()
        )
        raise SpecFormatError(f"Invalid system spec: {details}") from None


def load_system_spec(path: PathLike) -> SystemSpecFile:
    return parse_system_spec(Path(path).read_text())


def serialize_system_spec(spec: SystemSpecFile) -> str:
    return spec.model_dump_json(indent=2, exclude_none=True)


def write_system_spec(
    path: PathLike, system: ReactionSystem, theta: Optional[Sequence[float]] = None
) -> None:
    Path(path).write_text(serialize_system_spec(SystemSpecFile.from_system(system, theta)))


def observations_frame(data: ObservationSet) -> pd.DataFrame:
    frames = []
    for c, rep in enumerate(data.replicates):
        frame = pd.DataFrame(rep.states, columns=data.species)
        frame.insert(0, TIME_COLUMN, rep.times)
        frame.insert(0, REPLICATE_COLUMN, c)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def write_observations(path: PathLike, data: ObservationSet) -> None:
    observations_frame(data).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def _numeric(frame: pd.DataFrame, columns: List[str]) -> pd.DataFrame:
    out = frame.copy()
    for col in columns:
        converted = pd.to_numeric(frame[col], errors="coerce")
        bad = converted.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataFormatError(
                f"Column '{col}' has a non-numeric value {frame[col].iloc[row]!r}",
                row + 2,
                frame.columns.get_loc(col) + 1,
            )
        out[col] = converted.astype(float)
    return out


def observations_from_frame(
    frame: pd.DataFrame, species: Optional[Sequence[str]] = None
) -> ObservationSet:
    for col in (REPLICATE_COLUMN, TIME_COLUMN):
        if col not in frame.columns:
            raise DataFormatError(f"Missing column '{col}'", 1, None)
    available = [c for c in frame.columns if c not in (REPLICATE_COLUMN, TIME_COLUMN)]
    if species is None:
        species = available
    missing = [s for s in species if s not in available]
    if missing:
        raise DimensionError(f"Data has no column for species: {', '.join(missing)}")
    species = list(species)
    if not species:
        raise DataFormatError("Data has no species columns", 1, None)

    frame = _numeric(frame, [TIME_COLUMN] + species)
    replicates = []
    for _, group in frame.groupby(REPLICATE_COLUMN, sort=False):
        times = group[TIME_COLUMN].to_numpy()
        step = np.diff(times)
        if np.any(step <= 0):
            row = int(group.index[int(np.flatnonzero(step <= 0)[0]) + 1])
            raise DataFormatError(
                "Observation times must be strictly increasing within a replicate",
                row + 2,
                frame.columns.get_loc(TIME_COLUMN) + 1,
            )
        if np.any(group[species].to_numpy() < 0):
            row = int(group.index[int(np.flatnonzero((group[species] < 0).any(axis=1))[0])])
            raise DataFormatError("Counts must be nonnegative", row + 2, None)
        replicates.append(Replicate(times=times, states=group[species].to_numpy()))
    return ObservationSet(species=species, replicates=replicates)


def read_observations(
    path: Union[PathLike, IO[str]], species: Optional[Sequence[str]] = None
) -> ObservationSet:
    """Read replicate_id,time,<species...> rows; replicates keep their order of appearance."""
    try:
        frame = pd.read_csv(path, dtype={REPLICATE_COLUMN: str})
    except pd.errors.ParserError as e:
        raise DataFormatError(f"Malformed CSV: {e}") from None
    except pd.errors.EmptyDataError:
        raise DataFormatError("CSV file is empty") from None
    return observations_from_frame(frame, species)


def parse_observations(text: str, species: Optional[Sequence[str]] = None) -> ObservationSet:
    return read_observations(io.StringIO(text), species)


def write_frame(path: PathLike, frame: pd.DataFrame) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def dumps(obj: Any) -> str:
    if isinstance(obj, BaseModel):
        return obj.model_dump_json(indent=2)
    return json.dumps(obj, indent=2, default=_default)


def _default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def write_json(path: PathLike, obj: Any) -> None:
    Path(path).write_text(dumps(obj))
