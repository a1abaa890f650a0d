from typing import Any, Dict

import click

from qrlma.cli.flags import Flags, command_params
from qrlma.cli.types import Command
from qrlma.config.manifest import load_manifest
from qrlma.config.project import QrlmaProject
from qrlma.task.base import BaseTask
from qrlma_lib.error import InvalidInputError, QrlmaError


class ReplayError(QrlmaError):
    def __init__(self, command: str, exit_code: int):
        self.exit_code = exit_code
        super().__init__(f"Replayed command '{command}' exited with code {exit_code}")


class ReplayTask(BaseTask):
    def __init__(self, args: Flags, project: QrlmaProject):
        super().__init__(args, project)
        self.manifest_path = args.MANIFEST
        self.run_manifest = load_manifest(self.manifest_path)
        self.command = Command.from_str(self.run_manifest.command)
        if not self.command.replayable:
            raise InvalidInputError(f"Command '{self.command.value}' cannot be replayed")

    def run(self) -> Dict[str, Any]:
        from qrlma.cli.main import cli

        argv = command_params(self.command, self.run_manifest.args)
        self.logger.info("Replaying: qrlma " + " ".join(argv))
        code = cli.main(args=argv, prog_name="qrlma", standalone_mode=False)
        if isinstance(code, int) and code != 0:
            raise ReplayError(self.command.value, code)
        click.echo(click.style(f"Replayed {self.manifest_path}", fg="green"))
        return {"argv": argv}
