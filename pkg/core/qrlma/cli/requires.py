import os
from functools import update_wrapper

import click
import pydantic
from click import Context
from dotenv import load_dotenv

from qrlma.cli.flags import Flags
from qrlma.config.project import load_project
from qrlma.constants import QrlmaConstant
from qrlma.task.utils.logging import format_error, get_qrlma_logger
from qrlma_lib.error import InvalidInputError, QrlmaError


def preflight(func):
    def wrapper(*args, **kwargs):
        ctx = args[0]
        assert isinstance(ctx, Context)
        ctx.obj = ctx.obj or {}

        # load .env in the working directory
        load_dotenv(os.path.join(os.getcwd(), QrlmaConstant.DOTENV_FILE))

        # Flags
        flags = Flags(ctx)
        ctx.obj["flags"] = flags
        get_qrlma_logger(flags.LOG_FORMAT, flags.VERBOSE)

        try:
            ctx.obj["project"] = load_project(config_path=flags.CONFIG)
        except QrlmaError as e:
            _fail(ctx, e)

        return func(*args, **kwargs)

    return update_wrapper(wrapper, func)


def _fail(ctx: Context, error: QrlmaError) -> None:
    click.echo(click.style(f"Error: {error}", fg="red"), err=True)
    click.echo(format_error(error), err=True)
    ctx.exit(error.exit_code)


def postflight(func):
    def wrapper(*args, **kwargs):
        ctx = args[0]
        result, success = None, False
        try:
            result, success = func(*args, **kwargs)
        except QrlmaError as e:
            _fail(ctx, e)
        except pydantic.ValidationError as e:
            _fail(ctx, InvalidInputError(str(e)))
        return (result, success)

    return update_wrapper(wrapper, func)
