from enum import Enum
from typing import List


class Command(Enum):
    SIMULATE = "simulate"
    FIT = "fit"
    PREDICT = "predict"
    STIFFNESS = "stiffness"
    SELECT = "select"
    STUDY = "study"
    PRESETS = "presets"
    REPLAY = "replay"

    @classmethod
    def from_str(cls, s: str) -> "Command":
        try:
            return cls(s)
        except ValueError:
            raise ValueError(f"No value '{s}' exists in Command enum")

    def to_list(self) -> List[str]:
        return [self.value]

    @property
    def replayable(self) -> bool:
        return self not in (Command.PRESETS, Command.REPLAY)
