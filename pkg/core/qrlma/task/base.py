import os
from abc import ABCMeta, abstractmethod
from typing import Any, Optional

import numpy as np

from qrlma.cli.flags import Flags
from qrlma.config.manifest import RunManifest
from qrlma.config.project import QrlmaProject, default_initial_project
from qrlma.task.utils.logging import get_qrlma_logger
from qrlma_lib.parallel import default_workers


class BaseTask(metaclass=ABCMeta):
    def __init__(self, args: Flags, project: Optional[QrlmaProject] = None) -> None:
        self.args = args
        self.project = project or default_initial_project()
        self.logger = get_qrlma_logger()

    @property
    def workers(self) -> int:
        workers = getattr(self.args, "WORKERS", None)
        if workers is not None:
            return max(int(workers), 1)
        if self.project.threads is not None:
            return max(self.project.threads, 1)
        return default_workers()

    @property
    def progress(self) -> bool:
        return not getattr(self.args, "NO_PROGRESS", False)

    def resolve_seed(self) -> int:
        """--seed, or a fresh root seed that the manifest records."""
        seed = getattr(self.args, "SEED", None)
        if seed is not None:
            return int(seed)
        return int(np.random.SeedSequence().entropy % (2**63))

    @staticmethod
    def ensure_parent(path: str) -> None:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)

    def manifest(self, **fields: Any) -> RunManifest:
        return RunManifest(command=self.args.WHICH, args=dict(self.args.COMMAND_ARGS), **fields)

    @abstractmethod
    def run(self) -> Any:
        raise NotImplementedError
