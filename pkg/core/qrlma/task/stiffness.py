from typing import Any, Dict

import click

from qrlma.cli.flags import Flags
from qrlma.cli.params import float_list
from qrlma.config.project import QrlmaProject
from qrlma.task.base import BaseTask
from qrlma.task.utils.inputs import resolve_system
from qrlma.task.utils.logging import preview
from qrlma_lib.forecast import DEFAULT_DT_GRID, DEFAULT_SPAN, stiffness_report
from qrlma_lib.io import write_frame


class StiffnessTask(BaseTask):
    def __init__(self, args: Flags, project: QrlmaProject):
        super().__init__(args, project)
        self.resolved = resolve_system(args.PRESET, args.SPEC)
        self.theta = self.resolved.theta(args.THETA)
        self.y0 = self.resolved.y0(args.Y0)
        self.dt_grid = float_list(args.DT_GRID, "--dt-grid") or list(DEFAULT_DT_GRID)
        self.horizons = float_list(args.HORIZONS, "--horizons")
        self.span = args.SPAN or DEFAULT_SPAN
        self.out = project.output_path(args.OUT, "stiffness.csv")

    def run(self) -> Dict[str, Any]:
        report = stiffness_report(
            self.resolved.system,
            self.theta,
            self.y0,
            dt_grid=self.dt_grid,
            horizons=self.horizons,
            span=self.span,
        )
        eigs = ", ".join(f"{e:.4g}" for e in report.eigenvalues)
        self.logger.info(f"Eigenvalues of P: {eigs}")
        self.logger.info(
            f"Stiffness ratio {report.stiffness_ratio:.4g}"
            + (" (stiff)" if report.stiff else "")
        )
        self.logger.info(
            "Explicit solver error against the closed form:\n" + preview(report.table, None)
        )

        self.ensure_parent(self.out)
        write_frame(self.out, report.table)
        click.echo(click.style(f"Wrote stiffness table to {self.out}", fg="green"))
        return {
            "output": self.out,
            "stiffness_ratio": report.stiffness_ratio,
            "stiff": report.stiff,
        }
