from typing import Any, Dict

import click
import numpy as np
import pandas as pd

from qrlma.cli.flags import Flags
from qrlma.cli.params import float_list
from qrlma.config.project import QrlmaProject
from qrlma.constants import QrlmaConstant
from qrlma.task.base import BaseTask
from qrlma.task.utils.inputs import resolve_system
from qrlma.task.utils.logging import preview
from qrlma_lib.infer import FitResult, lma_fit
from qrlma_lib.io import read_observations, write_json
from qrlma_lib.reaction import ReactionSystem


def fit_table(fit: FitResult, system: ReactionSystem) -> pd.DataFrame:
    se = fit.stderr if fit.stderr is not None else [np.nan] * len(fit.theta_hat)
    lla = fit.lla_theta if fit.lla_theta is not None else [np.nan] * len(fit.theta_hat)
    return pd.DataFrame(
        {
            "reaction": fit.reaction_labels,
            "equation": [system.describe_reaction(j) for j in range(system.n_reactions)],
            "theta_hat": fit.theta_hat,
            "stderr": se,
            "lla_theta": lla,
            "at_bound": fit.boundary_active,
        }
    )


class FitTask(BaseTask):
    def __init__(self, args: Flags, project: QrlmaProject):
        super().__init__(args, project)
        self.resolved = resolve_system(args.PRESET, args.SPEC)
        initial = float_list(args.THETA0, "--theta0")
        init = args.INIT or ("user_supplied" if initial is not None else None)
        self.config = project.fit_config(
            initializer="user_supplied" if init == "values" else init,
            initial_theta=initial,
            compute_stderr=args.STDERR if "stderr" in args.USER_PARAMS else None,
            gradient_mode=args.GRADIENT,
            max_iterations=args.MAX_ITER,
        )
        self.out = project.output_path(args.OUT, "fit.json")

    def run(self) -> Dict[str, Any]:
        system = self.resolved.system
        data = read_observations(self.args.DATA, species=system.species)
        self.logger.info(
            f"Fitting {system.n_reactions} rates to {data.n_replicates} replicates, "
            f"{data.n_transitions} transitions"
        )
        fit = lma_fit(data, system, self.config)
        self.logger.info("Estimates:\n" + preview(fit_table(fit, system), None))
        self.logger.info(
            f"objective={fit.objective:.10g} BIC={fit.bic:.10g} "
            f"iterations={fit.n_iterations} converged={fit.converged}"
        )

        self.ensure_parent(self.out)
        write_json(self.out, fit)
        manifest = self.manifest(
            preset=self.args.PRESET, spec=self.args.SPEC, outputs=[self.out]
        )
        manifest.save(QrlmaConstant.manifest_path(self.out))

        click.echo(click.style(f"Wrote fit to {self.out}", fg="green"))
        return fit.model_dump(mode="json")
