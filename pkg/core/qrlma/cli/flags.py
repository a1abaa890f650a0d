from dataclasses import dataclass
from pprint import pformat as pf
from typing import Any, Dict, List, Optional, Set

from click import Argument, Context, Option, Parameter, get_current_context
from click.core import Command as ClickCommand
from click.core import ParameterSource

from qrlma.cli.types import Command as CliCommand

FLAGS_DEFAULTS: Dict[str, Any] = {
    "VERBOSE": False,
    "LOG_FORMAT": "default",
    "CONFIG": None,
    "NO_PROGRESS": False,
}


@dataclass(frozen=True)
class Flags:
    """Every click parameter of the invoked command and its parents, as uppercase attributes."""

    def __init__(self, ctx: Optional[Context] = None) -> None:
        for key, value in FLAGS_DEFAULTS.items():
            object.__setattr__(self, key, value)

        if ctx is None:
            ctx = get_current_context()

        user_params: Set[str] = set()

        def _assign_params(ctx: Context) -> None:
            """Recursively adds all click params to the flag object; the innermost user value wins."""
            for param_name, param_value in ctx.params.items():
                is_default = ctx.get_parameter_source(param_name) in (
                    ParameterSource.DEFAULT,
                    ParameterSource.DEFAULT_MAP,
                )
                flag_name = param_name.upper()
                if param_name in user_params:
                    continue
                if not is_default or not hasattr(self, flag_name) or flag_name in FLAGS_DEFAULTS:
                    object.__setattr__(self, flag_name, param_value)
                if not is_default:
                    user_params.add(param_name)
            if ctx.parent:
                _assign_params(ctx.parent)

        _assign_params(ctx)
        object.__setattr__(self, "WHICH", ctx.info_name)
        object.__setattr__(self, "USER_PARAMS", frozenset(user_params))
        object.__setattr__(
            self,
            "COMMAND_ARGS",
            {k: v for k, v in ctx.params.items() if k in user_params},
        )

    def __str__(self) -> str:
        return str(pf(self.__dict__))

    # This is here to prevent mypy from complaining about all of the
    # attributes which we added dynamically.
    def __getattr__(self, name: str) -> Any:
        return super().__getattribute__(name)


CommandParams = List[str]


def command_args(command: CliCommand) -> List[Parameter]:
    """The click parameters a command takes, not those of its parent group."""
    import qrlma.cli.main as cli

    click_cmd: Optional[ClickCommand] = cli.cli.commands.get(command.value)  # type: ignore
    if click_cmd is None:
        raise ValueError(f"No command found for name '{command.name}'")
    return list(click_cmd.params)


def command_params(command: CliCommand, args_dict: Dict[str, Any]) -> CommandParams:
    """Given a command and a dict of its parameter values, returns the CLI argument list.

    e.g. fn(SIMULATE, {"preset": "cyclic3", "seed": 7}) -> ["simulate", "--preset", "cyclic3", "--seed", "7"]
    """
    res = command.to_list()
    positional: List[str] = []
    for param in command_args(command):
        if param.name not in args_dict:
            continue
        value = args_dict[param.name]
        if isinstance(param, Argument):
            positional.extend(str(v) for v in (value if param.multiple else [value]))
            continue
        assert isinstance(param, Option)
        if param.is_flag and isinstance(value, bool):
            if value:
                res.append(param.opts[0])
            elif param.secondary_opts:
                res.append(param.secondary_opts[0])
        elif value is None:
            continue
        elif param.multiple:
            for v in value:
                res.extend([param.opts[0], str(v)])
        else:
            res.extend([param.opts[0], str(value)])
    return res + positional
