# type: ignore

from __future__ import annotations

import functools
from typing import Any, Callable, Dict, Optional, Tuple, Union

import click

from qrlma.cli import params, requires

Result = Tuple[Union[Dict[str, Any], list, None], bool]


def global_flags(func: Callable[..., Result]) -> Callable[..., Result]:
    @params.log_format
    @params.verbose
    @params.config
    @params.no_progress
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Result:
        return func(*args, **kwargs)

    return wrapper


@click.group(
    context_settings={"help_option_names": ["-h", "--help"]},
    invoke_without_command=True,
    no_args_is_help=True,
    epilog="Specify one of these sub-commands and you can find more help from there.",
)
@click.version_option(
    package_name="qrlma",
    prog_name="qrlma",
    message="qrlma CLI version: %(version)s",
)
@click.pass_context
@global_flags
def cli(ctx: click.Context, **kwargs: Dict[str, Union[str, int, bool]]) -> None:
    """Simulate, fit and select stochastic quasi-reaction systems
    with the local moment approximation.
    """


@cli.command("simulate")
@params.preset
@params.spec
@params.theta
@params.y0
@params.n_replicates
@params.keep_every
@params.n_steps
@params.times
@params.seed
@params.workers
@params.output
@click.pass_context
@global_flags
@requires.preflight
@requires.postflight
def simulate(ctx: click.Context, **kwargs: Dict[str, Union[str, int, bool]]) -> Result:
    """Draw exact stochastic trajectories and write them as observations."""
    from qrlma.task.simulate import SimulateTask

    task = SimulateTask(ctx.obj["flags"], ctx.obj["project"])
    results = task.run()
    return results, True


@cli.command("fit")
@params.data
@params.preset
@params.spec
@click.option(
    "--init",
    type=click.Choice(["lla", "values"]),
    help="Starting point: the linear approximation (default) or --theta0.",
)
@click.option("--theta0", type=str, help="Starting rates, comma separated.")
@click.option(
    "--stderr/--no-stderr",
    default=True,
    help="Compute asymptotic standard errors.",
)
@click.option(
    "--gradient",
    type=click.Choice(["analytic", "finite_difference"]),
    help="How the objective gradient is computed.",
)
@click.option("--max-iter", type=int, help="Maximum optimizer iterations.")
@params.output
@click.pass_context
@global_flags
@requires.preflight
@requires.postflight
def fit(ctx: click.Context, **kwargs: Dict[str, Union[str, int, bool]]) -> Result:
    """Estimate reaction rates from observations."""
    from qrlma.task.fit import FitTask

    task = FitTask(ctx.obj["flags"], ctx.obj["project"])
    results = task.run()
    return results, True


@cli.command("predict")
@params.preset
@params.spec
@params.theta
@params.y0
@click.option("--horizon", type=float, required=True, help="Forecast horizon s.")
@click.option(
    "--method",
    type=click.Choice(["closed_form", "euler", "rk4"]),
    default="closed_form",
    help="Closed form propagator or an explicit solver.",
)
@click.option("--dt", type=float, help="Step of the explicit solvers.")
@params.output
@click.pass_context
@global_flags
@requires.preflight
@requires.postflight
def predict(ctx: click.Context, **kwargs: Dict[str, Union[str, int, bool]]) -> Result:
    """Forecast the mean state after a horizon."""
    from qrlma.task.predict import PredictTask

    task = PredictTask(ctx.obj["flags"], ctx.obj["project"])
    results = task.run()
    return results, True


@cli.command("stiffness")
@params.preset
@params.spec
@params.theta
@params.y0
@click.option("--dt-grid", type=str, help="Explicit solver steps, comma separated.")
@click.option("--horizons", type=str, help="Forecast horizons, comma separated.")
@click.option("--span", type=float, help="Largest horizon when --horizons is omitted.")
@params.output
@click.pass_context
@global_flags
@requires.preflight
@requires.postflight
def stiffness(ctx: click.Context, **kwargs: Dict[str, Union[str, int, bool]]) -> Result:
    """Report the eigenvalues of P and explicit solver error."""
    from qrlma.task.stiffness import StiffnessTask

    task = StiffnessTask(ctx.obj["flags"], ctx.obj["project"])
    results = task.run()
    return results, True


@cli.command("select")
@params.data
@click.option(
    "--library",
    type=click.Path(exists=True, dir_okay=False),
    help="Reaction system JSON holding every candidate reaction.",
)
@click.option(
    "--builtin-library",
    type=click.Choice(["cyclic3", "differentiation"]),
    help="A built-in candidate library.",
)
@click.option(
    "--quadratic-death",
    is_flag=True,
    help="Use 2X -> X deaths in the differentiation library.",
)
@click.option("--fixed", type=str, help="Reactions kept in every model, comma separated.")
@click.option(
    "--stopping",
    type=click.Choice(["full_sweep", "first_minimum"]),
    default=None,
    help="Sweep every model size or stop at the first BIC minimum.",
)
@click.option("--exhaustive", is_flag=True, help="Fit every subset of the free reactions.")
@click.option(
    "--stderr/--no-stderr",
    default=False,
    help="Compute standard errors for every candidate fit.",
)
@params.workers
@params.output
@click.pass_context
@global_flags
@requires.preflight
@requires.postflight
def select(ctx: click.Context, **kwargs: Dict[str, Union[str, int, bool]]) -> Result:
    """Select reactions from a candidate library by BIC."""
    from qrlma.task.select import SelectTask

    task = SelectTask(ctx.obj["flags"], ctx.obj["project"])
    results = task.run()
    return results, True


@cli.command("study")
@click.option(
    "--preset",
    "-p",
    type=str,
    default="cyclic3-study",
    help="Preset whose system and protocol the study uses.",
)
@click.option(
    "--sweep",
    type=click.Choice(["dt", "T", "stderr", "scaling"]),
    default="dt",
    help="Which quantity the study varies.",
)
@click.option("--n-seeds", type=int, help="Independent datasets per grid value.")
@params.seed
@click.option("--keep-every-grid", type=str, help="Subsampling grid, comma separated.")
@click.option("--t-grid", type=str, help="Trajectory length grid, comma separated.")
@params.keep_every
@params.n_steps
@params.n_replicates
@click.option("--methods", type=str, help="Estimators to compare: lla,lma.")
@click.option("--scaling-presets", type=str, help="Presets of the scaling sweep.")
@click.option("--n-boot", type=int, help="Bootstrap resamples for the W1 bands.")
@params.workers
@params.output_dir
@click.pass_context
@global_flags
@requires.preflight
@requires.postflight
def study(ctx: click.Context, **kwargs: Dict[str, Union[str, int, bool]]) -> Result:
    """Run a seeded estimator study and summarize bias and spread."""
    from qrlma.task.study import StudyTask

    task = StudyTask(ctx.obj["flags"], ctx.obj["project"])
    results = task.run()
    return results, True


@cli.command("presets")
@click.option("--export", type=str, help="Write the named preset as a system spec.")
@params.output
@click.pass_context
@global_flags
@requires.preflight
@requires.postflight
def presets(ctx: click.Context, **kwargs: Dict[str, Union[str, int, bool]]) -> Result:
    """List built-in presets or export one."""
    from qrlma.task.presets import PresetsTask

    task = PresetsTask(ctx.obj["flags"], ctx.obj["project"])
    results = task.run()
    return results, True


@cli.command("replay")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@global_flags
@requires.preflight
@requires.postflight
def replay(
    ctx: click.Context,
    manifest: Optional[str] = None,
    **kwargs: Dict[str, Union[str, int, bool]],
) -> Result:
    """Re-run the command recorded in a run manifest."""
    from qrlma.task.replay import ReplayTask

    task = ReplayTask(ctx.obj["flags"], ctx.obj["project"])
    results = task.run()
    return results, True


if __name__ == "__main__":
    cli()
