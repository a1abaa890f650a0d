from typing import Any, Dict, List

import click

from qrlma.cli.flags import Flags
from qrlma.config.project import QrlmaProject
from qrlma.task.base import BaseTask
from qrlma.task.utils.logging import preview_rows
from qrlma_lib.fixtures import list_presets, load_preset
from qrlma_lib.io import write_system_spec


class PresetsTask(BaseTask):
    def __init__(self, args: Flags, project: QrlmaProject):
        super().__init__(args, project)
        self.export = args.EXPORT
        self.out = args.OUT

    def run(self) -> List[Dict[str, Any]]:
        if self.export:
            preset = load_preset(self.export)
            out = self.out or f"{preset.name}.json"
            self.ensure_parent(out)
            write_system_spec(out, preset.system, preset.theta_true)
            click.echo(click.style(f"Wrote {preset.name} system spec to {out}", fg="green"))
            return [{"name": preset.name, "output": out}]

        rows = []
        for name in list_presets():
            preset = load_preset(name)
            rows.append(
                {
                    "name": name,
                    "species": preset.system.n_species,
                    "reactions": preset.system.n_reactions,
                    "description": preset.description,
                }
            )
        click.echo(
            preview_rows(
                [list(r.values()) for r in rows],
                headers=["name", "p", "r", "description"],
            )
        )
        return rows
