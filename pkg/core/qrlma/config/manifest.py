import importlib.metadata
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import pydantic
from pydantic import BaseModel, Field, model_validator

from qrlma.cli.types import Command
from qrlma_lib.error import SpecFormatError

RANDOMIZED_COMMANDS = ("simulate", "study")


def _version() -> str:
    try:
        return importlib.metadata.version("qrlma")
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


class RunManifest(BaseModel):
    """Provenance of one command run; replaying it reproduces the outputs."""

    command: str
    args: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    preset: Optional[str] = None
    spec: Optional[str] = None
    outputs: List[str] = Field(default_factory=list)
    qrlma_version: str = Field(default_factory=_version)
    created_at: str = Field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    @model_validator(mode="after")
    def _check(self) -> "RunManifest":
        Command.from_str(self.command)
        if self.command in RANDOMIZED_COMMANDS and self.seed is None:
            raise ValueError(f"A {self.command} manifest must record its seed")
        return self

    def save(self, path: str) -> None:
        Path(path).write_text(self.model_dump_json(indent=2))


def load_manifest(path: str) -> RunManifest:
    try:
        return RunManifest.model_validate_json(Path(path).read_text())
    except pydantic.ValidationError as e:
        raise SpecFormatError(f"Invalid manifest {path}: {e}") from None
