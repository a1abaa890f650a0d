import os
from typing import Any, Dict, Optional

import pydantic
import yaml
from pydantic import BaseModel, Field

from qrlma.constants import QrlmaConstant
from qrlma_lib.error import SpecFormatError
from qrlma_lib.infer import FitConfig
from qrlma_lib.model_select import SelectionConfig


class QrlmaProject(BaseModel):
    """Project defaults read from qrlma.yml; command-line flags override them."""

    fit: Dict[str, Any] = Field(default_factory=dict)
    select: Dict[str, Any] = Field(default_factory=dict)
    threads: Optional[int] = None
    output_dir: str = "."

    def fit_config(self, **overrides: Any) -> FitConfig:
        values = {**self.fit, **{k: v for k, v in overrides.items() if v is not None}}
        return FitConfig(**values)

    def selection_config(self, fit: FitConfig, **overrides: Any) -> SelectionConfig:
        values = {**self.select, **{k: v for k, v in overrides.items() if v is not None}}
        values.pop("fit", None)
        return SelectionConfig(fit=fit, **values)

    def output_path(self, path: Optional[str], default_name: str) -> str:
        if path:
            return path
        return os.path.join(self.output_dir, default_name)


def default_initial_project() -> QrlmaProject:
    return QrlmaProject()


def find_project_file(project_root: str) -> Optional[str]:
    config_path = os.path.join(project_root, QrlmaConstant.PROJECT_FILE)
    return config_path if os.path.exists(config_path) else None


def load_project(
    project_root: Optional[str] = None, config_path: Optional[str] = None
) -> QrlmaProject:
    if config_path is None:
        config_path = find_project_file(project_root or os.getcwd())
    if config_path is None:
        return default_initial_project()

    with open(config_path, "r") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.MarkedYAMLError as e:
            mark = e.problem_mark
            raise SpecFormatError(
                f"Invalid project file {config_path}: {e.problem}",
                mark.line + 1 if mark else None,
                mark.column + 1 if mark else None,
            ) from None

    if data is None:
        return default_initial_project()
    if not isinstance(data, dict):
        raise SpecFormatError(f"Project file {config_path} must contain a mapping")
    try:
        return QrlmaProject(**data)
    except pydantic.ValidationError as e:
        raise SpecFormatError(f"Invalid project file {config_path}: {e}") from None
