import logging
from typing import Any, List, Optional, Sequence

import colorlog
import pandas as pd
from colorama import Fore, Style
from tabulate import tabulate

from qrlma_lib.error import QrlmaError, SpecFormatError

LOGGER_NAME = "qrlma_logger"
LIBRARY_LOGGER_NAME = "qrlma_lib"
LOG_COLORS = {
    "DEBUG": "white",
    "INFO": "cyan",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "bold_red",
}


def _handler(log_format: str) -> logging.Handler:
    if log_format == "text":
        handler: logging.Handler = logging.StreamHandler()
        handler.setFormatter(
            logging.Formatter("%(asctime)s [%(levelname)s] %(message)s")
        )
        return handler
    # Console handler with color formatting
    console_handler = colorlog.StreamHandler()
    console_handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(asctime)s [%(levelname)s] %(message)s",
            log_colors=LOG_COLORS,
        )
    )
    return console_handler


def get_qrlma_logger(
    log_format: Optional[str] = None, verbose: Optional[bool] = None
) -> logging.Logger:
    """The CLI logger. The first call (or any call passing options) sets up the handler,
    which is shared with the library loggers and the warnings module."""
    logger = logging.getLogger(LOGGER_NAME)
    if logger.handlers and log_format is None and verbose is None:
        return logger

    level = logging.DEBUG if verbose else logging.INFO
    handler = _handler((log_format or "default").lower())
    handler.setLevel(logging.DEBUG)

    targets = [logger, logging.getLogger(LIBRARY_LOGGER_NAME), logging.getLogger("py.warnings")]
    for target in targets:
        for old in list(target.handlers):
            target.removeHandler(old)
        target.addHandler(handler)
        target.setLevel(level)
        target.propagate = False
    logging.captureWarnings(True)
    return logger


def format_error(error: QrlmaError) -> str:
    lines = [
        f"{Fore.RED}[error]: {type(error).__name__}",
        f"{Fore.RED}[detail]: {error}",
        f"{Fore.RED}[exit code]: {error.exit_code}",
    ]
    if isinstance(error, SpecFormatError) and error.line is not None:
        lines.append(f"{Fore.RED}[location]: line {error.line}, column {error.column}")
    return "\n".join(lines) + Style.RESET_ALL


def preview(frame: pd.DataFrame, limit: Optional[int] = 20) -> str:
    shown = frame if limit is None else frame.head(limit)
    return tabulate(
        shown.values.tolist(),
        headers=shown.columns.tolist(),
        tablefmt="grid",
        showindex=False,
    )


def preview_rows(rows: Sequence[Sequence[Any]], headers: List[str]) -> str:
    return tabulate(rows, headers=headers, tablefmt="grid")
