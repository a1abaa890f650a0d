import os
from typing import Any, Dict, List, Optional

import click

from qrlma.cli.flags import Flags
from qrlma.cli.params import name_list
from qrlma.config.project import QrlmaProject
from qrlma.constants import QrlmaConstant
from qrlma.task.base import BaseTask
from qrlma.task.utils.logging import preview
from qrlma_lib.error import DimensionError, InvalidInputError
from qrlma_lib.fixtures import cyclic3_library, differentiation_library
from qrlma_lib.io import load_system_spec, read_observations, write_frame, write_json
from qrlma_lib.model_select import (
    CandidateLibrary,
    SelectionTrace,
    bic_weights,
    exhaustive_search,
    reaction_relevance,
    stepwise_search,
)
from qrlma_lib.reaction import ReactionSystem


def profile_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return root + "_profile.csv"


def _fixed_indices(system: ReactionSystem, labels: Optional[List[str]]) -> List[int]:
    if not labels:
        return []
    unknown = [lab for lab in labels if lab not in system.reaction_labels]
    if unknown:
        raise InvalidInputError(f"Unknown reactions in --fixed: {', '.join(unknown)}")
    return [system.reaction_labels.index(lab) for lab in labels]


class SelectTask(BaseTask):
    def __init__(self, args: Flags, project: QrlmaProject):
        super().__init__(args, project)
        if (args.LIBRARY is None) == (args.BUILTIN_LIBRARY is None):
            raise InvalidInputError("Specify exactly one of --library and --builtin-library")
        self.data = read_observations(args.DATA)
        if args.LIBRARY is not None:
            system = load_system_spec(args.LIBRARY).to_system()
        elif args.BUILTIN_LIBRARY == "cyclic3":
            system = cyclic3_library().full_system
        else:
            system = differentiation_library(
                self.data.species, quadratic_death=args.QUADRATIC_DEATH
            ).full_system
        missing = [s for s in system.species if s not in self.data.species]
        if missing:
            raise DimensionError(f"Data has no column for species: {', '.join(missing)}")
        self.data = self.data.select_species([self.data.species.index(s) for s in system.species])
        self.library = CandidateLibrary(
            full_system=system, fixed_reactions=_fixed_indices(system, name_list(args.FIXED))
        )
        fit = project.fit_config(
            compute_stderr=args.STDERR if "stderr" in args.USER_PARAMS else None
        )
        self.config = project.selection_config(
            fit,
            stopping=args.STOPPING,
            workers=self.workers,
            progress=self.progress,
        )
        self.out = project.output_path(args.OUT, "selection.json")

    def run(self) -> Dict[str, Any]:
        search = exhaustive_search if self.args.EXHAUSTIVE else stepwise_search
        self.logger.info(
            f"{'Exhaustive' if self.args.EXHAUSTIVE else 'Stepwise'} search over "
            f"{len(self.library.free_reactions)} candidate reactions"
        )
        trace: SelectionTrace = search(self.data, self.library, self.config)
        weights = bic_weights(trace)
        relevance = reaction_relevance(trace)

        profile = trace.complexity_profile()
        self.logger.info("Best BIC per model size:\n" + preview(profile, None))
        if trace.best_model is not None:
            self.logger.info(
                f"Selected {', '.join(trace.best_model.labels)} (BIC {trace.best_model.bic:.6g})"
            )

        self.ensure_parent(self.out)
        output = {
            **trace.model_dump(mode="json"),
            "weights": weights.tolist(),
            "relevance": dict(zip(trace.reaction_labels, relevance.tolist())),
        }
        write_json(self.out, output)
        write_frame(profile_path(self.out), profile)
        manifest = self.manifest(outputs=[self.out, profile_path(self.out)])
        manifest.save(QrlmaConstant.manifest_path(self.out))

        click.echo(click.style(f"Wrote selection trace to {self.out}", fg="green"))
        return output
