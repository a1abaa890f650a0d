from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from qrlma.cli.params import float_list
from qrlma_lib.error import InvalidInputError
from qrlma_lib.fixtures import Preset, load_preset
from qrlma_lib.io import load_system_spec
from qrlma_lib.reaction import ReactionSystem, check_state, check_theta


class ResolvedSystem(BaseModel):
    """A reaction system from --preset or --spec, with whatever defaults that source carries."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    system: ReactionSystem
    preset: Optional[Preset] = None
    spec_path: Optional[str] = None
    default_theta: Optional[List[float]] = None
    default_y0: Optional[List[float]] = None

    def theta(self, value: Optional[str]) -> np.ndarray:
        theta = float_list(value, "--theta") if value is not None else self.default_theta
        if theta is None:
            raise InvalidInputError("No rates given: pass --theta or a spec with rates")
        return check_theta(self.system, theta)

    def y0(self, value: Optional[str]) -> np.ndarray:
        y0 = float_list(value, "--y0") if value is not None else self.default_y0
        if y0 is None:
            raise InvalidInputError("No initial state given: pass --y0")
        return check_state(self.system, y0)


def resolve_system(preset: Optional[str], spec: Optional[str]) -> ResolvedSystem:
    if (preset is None) == (spec is None):
        raise InvalidInputError("Specify exactly one of --preset and --spec")
    if preset is not None:
        p = load_preset(preset)
        return ResolvedSystem(
            system=p.system,
            preset=p,
            default_theta=p.theta_true,
            default_y0=p.y0,
        )
    assert spec is not None
    spec_file = load_system_spec(spec)
    rates = spec_file.rates()
    return ResolvedSystem(
        system=spec_file.to_system(),
        spec_path=spec,
        default_theta=rates.tolist() if rates is not None else None,
    )
