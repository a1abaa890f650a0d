from typing import Any, Dict

import click

from qrlma.cli.flags import Flags
from qrlma.cli.params import float_list
from qrlma.config.project import QrlmaProject
from qrlma.constants import QrlmaConstant
from qrlma.task.base import BaseTask
from qrlma.task.utils.inputs import resolve_system
from qrlma.task.utils.logging import preview
from qrlma_lib.gillespie import simulate_dataset
from qrlma_lib.io import observations_frame, write_observations


class SimulateTask(BaseTask):
    def __init__(self, args: Flags, project: QrlmaProject):
        super().__init__(args, project)
        self.resolved = resolve_system(args.PRESET, args.SPEC)
        preset = self.resolved.preset
        self.theta = self.resolved.theta(args.THETA)
        self.y0 = self.resolved.y0(args.Y0)
        self.n_replicates = args.N_REPLICATES or (preset.n_replicates if preset else 1)
        self.keep_every = args.KEEP_EVERY or (preset.keep_every if preset else 1)
        self.T = args.N_STEPS or (preset.T if preset else 20)
        self.times = float_list(args.TIMES, "--times")
        if self.times is None and preset is not None and args.N_STEPS is None:
            self.times = preset.times
        self.seed = self.resolve_seed()
        self.out = project.output_path(args.OUT, "observations.csv")

    def run(self) -> Dict[str, Any]:
        system = self.resolved.system
        self.logger.info(
            f"Simulating {self.n_replicates} replicates of {len(system.species)} species, "
            f"{system.n_reactions} reactions (seed {self.seed})"
        )
        data = simulate_dataset(
            system,
            self.theta,
            self.y0,
            self.n_replicates,
            keep_every=self.keep_every,
            T=self.T,
            seed=self.seed,
            times=self.times,
            workers=self.workers,
            progress=self.progress,
        )
        self.ensure_parent(self.out)
        write_observations(self.out, data)
        self.logger.info("Observations preview:\n" + preview(observations_frame(data), 10))

        manifest = self.manifest(
            seed=self.seed,
            preset=self.args.PRESET,
            spec=self.args.SPEC,
            outputs=[self.out],
        )
        manifest.args["seed"] = self.seed
        manifest_path = QrlmaConstant.manifest_path(self.out)
        manifest.save(manifest_path)

        click.echo(
            click.style(
                f"Wrote {data.n_replicates} replicates ({data.n_transitions} transitions) "
                f"to {self.out}",
                fg="green",
            )
        )
        return {"output": self.out, "manifest": manifest_path, "seed": self.seed}
