import json
from typing import Any, Dict

import click

from qrlma.cli.flags import Flags
from qrlma.config.project import QrlmaProject
from qrlma.task.base import BaseTask
from qrlma.task.utils.inputs import resolve_system
from qrlma_lib.forecast import PredictionRequest
from qrlma_lib.io import write_json


class PredictTask(BaseTask):
    def __init__(self, args: Flags, project: QrlmaProject):
        super().__init__(args, project)
        resolved = resolve_system(args.PRESET, args.SPEC)
        self.request = PredictionRequest(
            system=resolved.system,
            theta=resolved.theta(args.THETA).tolist(),
            y0=resolved.y0(args.Y0).tolist(),
            horizon=args.HORIZON,
            method=args.METHOD,
            dt=args.DT,
        )

    def run(self) -> Dict[str, Any]:
        state = self.request.run()
        output = {
            "species": list(self.request.system.species),
            "horizon": self.request.horizon,
            "method": self.request.method,
            "dt": self.request.dt,
            "y0": self.request.y0,
            "state": state.tolist(),
        }
        if self.args.OUT:
            write_json(self.args.OUT, output)
            click.echo(click.style(f"Wrote prediction to {self.args.OUT}", fg="green"))
        else:
            click.echo(json.dumps(output, indent=2))
        return output
