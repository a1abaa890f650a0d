from typing import List, Optional

import click

from qrlma.constants import QrlmaConstant
from qrlma_lib.error import InvalidInputError


def float_list(value: Optional[str], name: str = "value") -> Optional[List[float]]:
    """Comma or whitespace separated numbers, e.g. "0.2,0.1,0.2"."""
    if value is None:
        return None
    items = [v for v in value.replace(",", " ").split() if v]
    try:
        return [float(v) for v in items]
    except ValueError:
        raise InvalidInputError(f"{name}: '{value}' is not a comma separated list of numbers")


def int_list(value: Optional[str], name: str = "value") -> Optional[List[int]]:
    floats = float_list(value, name)
    if floats is None:
        return None
    if any(f != int(f) for f in floats):
        raise InvalidInputError(f"{name}: '{value}' is not a comma separated list of integers")
    return [int(f) for f in floats]


def name_list(value: Optional[str]) -> Optional[List[str]]:
    if value is None:
        return None
    return [v.strip() for v in value.split(",") if v.strip()]


log_format = click.option(
    "--log-format",
    envvar=QrlmaConstant.LOG_FORMAT_ENV,
    help="Specify the format of logging to the console: colored (default) or plain text.",
    type=click.Choice(["text", "default"], case_sensitive=False),
    default="default",
)

verbose = click.option(
    "--verbose",
    "-v",
    is_flag=True,
    help="Enable verbose mode.",
)

config = click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    help=f"Project configuration file (default: ./{QrlmaConstant.PROJECT_FILE} if present).",
)

no_progress = click.option(
    "--no-progress",
    is_flag=True,
    help="Disable progress bars.",
)

preset = click.option(
    "--preset",
    "-p",
    type=str,
    help="Name of a built-in preset (see `qrlma presets`).",
)

spec = click.option(
    "--spec",
    "-s",
    type=click.Path(exists=True, dir_okay=False),
    help="Reaction system JSON file.",
)

theta = click.option(
    "--theta",
    type=str,
    help="Reaction rates, comma separated. Defaults to the preset or spec rates.",
)

y0 = click.option(
    "--y0",
    type=str,
    help="Initial state counts, comma separated. Defaults to the preset state.",
)

seed = click.option(
    "--seed",
    type=int,
    help="Root random seed. A fresh seed is drawn and recorded when omitted.",
)

workers = click.option(
    "--workers",
    "-j",
    type=int,
    help=f"Worker processes for fan-outs (default: ${QrlmaConstant.THREADS_ENV} or 1).",
)

data = click.option(
    "--data",
    "-d",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Observation CSV with columns replicate_id,time,<species...>.",
)

output = click.option(
    "--out",
    "-o",
    type=click.Path(dir_okay=False),
    help="Specify output file path.",
)

output_dir = click.option(
    "--out-dir",
    type=click.Path(file_okay=False),
    help="Specify output directory.",
)

n_replicates = click.option(
    "--n-replicates",
    "-n",
    type=int,
    help="Number of independent replicates.",
)

keep_every = click.option(
    "--keep-every",
    type=int,
    help="Keep the state after every k-th reaction event.",
)

n_steps = click.option(
    "--n-steps",
    "-T",
    type=int,
    help="Number of retained observations after the initial state.",
)

times = click.option(
    "--times",
    type=str,
    help="Observation time grid, comma separated; replaces event-count subsampling.",
)
