import os
from typing import Any, Dict

import click

from qrlma.cli.flags import Flags
from qrlma.cli.params import int_list, name_list
from qrlma.config.project import QrlmaProject
from qrlma.constants import QrlmaConstant
from qrlma.task.base import BaseTask
from qrlma.task.utils.logging import preview
from qrlma_lib.fixtures import load_preset
from qrlma_lib.io import write_frame, write_json
from qrlma_lib.study import StudyConfig, run_study

SUMMARY_PREVIEW_COLUMNS = [
    "value",
    "method",
    "reaction",
    "truth",
    "median",
    "mean_bias",
    "sd",
    "w1",
]


class StudyTask(BaseTask):
    def __init__(self, args: Flags, project: QrlmaProject):
        super().__init__(args, project)
        self.preset = load_preset(args.PRESET)
        self.seed = self.resolve_seed()
        overrides = {
            "n_seeds": args.N_SEEDS,
            "keep_every_grid": int_list(args.KEEP_EVERY_GRID, "--keep-every-grid"),
            "T_grid": int_list(args.T_GRID, "--t-grid"),
            "keep_every": args.KEEP_EVERY,
            "T": args.N_STEPS,
            "n_replicates": args.N_REPLICATES,
            "methods": name_list(args.METHODS),
            "scaling_presets": name_list(args.SCALING_PRESETS),
            "n_boot": args.N_BOOT,
        }
        self.config = StudyConfig(
            sweep=args.SWEEP,
            seed=self.seed,
            fit=project.fit_config(compute_stderr=False),
            workers=self.workers,
            progress=self.progress,
            **{k: v for k, v in overrides.items() if v is not None},
        )
        self.out_dir = args.OUT_DIR or os.path.join(
            project.output_dir, f"study-{self.preset.name}-{args.SWEEP}"
        )

    def run(self) -> Dict[str, Any]:
        self.logger.info(
            f"Study sweep={self.config.sweep} preset={self.preset.name} seed={self.seed}"
            + (
                f" presets={','.join(self.config.scaling_presets)}"
                if self.config.sweep == "scaling"
                else ""
            )
        )
        result = run_study(self.preset, self.config)

        os.makedirs(self.out_dir, exist_ok=True)
        ensemble_path = os.path.join(self.out_dir, QrlmaConstant.ENSEMBLE_FILE)
        summary_path = os.path.join(self.out_dir, QrlmaConstant.SUMMARY_FILE)
        statistics_path = os.path.join(self.out_dir, QrlmaConstant.STATISTICS_FILE)
        write_frame(ensemble_path, result.ensemble)
        write_frame(summary_path, result.summary)
        write_json(statistics_path, result.statistics)

        columns = [c for c in SUMMARY_PREVIEW_COLUMNS if c in result.summary.columns]
        if self.config.sweep == "stderr":
            columns = list(result.summary.columns)
        if not result.summary.empty:
            self.logger.info("Summary:\n" + preview(result.summary[columns], 40))
        for name, value in result.statistics.items():
            self.logger.info(f"{name}: {value}")

        manifest = self.manifest(
            seed=self.seed,
            preset=self.preset.name,
            outputs=[ensemble_path, summary_path, statistics_path],
        )
        manifest.args["seed"] = self.seed
        manifest.save(os.path.join(self.out_dir, QrlmaConstant.MANIFEST_FILE))

        click.echo(click.style(f"Wrote study outputs to {self.out_dir}", fg="green"))
        return {"out_dir": self.out_dir, "statistics": result.statistics}

