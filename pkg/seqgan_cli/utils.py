"""Utility functions for SeqGAN CLI."""

import logging
from typing import NoReturn, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.text import Text

from seqgan_cli.errors import SeqGANError


LOGGER_NAME = "seqgan_cli"


def setup_logging(verbose: bool = False, console: Optional[Console] = None) -> logging.Logger:
    """
    Route the package loggers through a single RichHandler.

    Args:
        verbose: Log per-batch detail (DEBUG) instead of epoch summaries (INFO)
        console: Console to log to (stderr if not provided)

    Returns:
        The package logger
    """
    logger = logging.getLogger(LOGGER_NAME)
    for handler in [h for h in logger.handlers if isinstance(h, RichHandler)]:
        logger.removeHandler(handler)
    handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=False,
        markup=False,
        rich_tracebacks=True,
    )
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False
    return logger


def fail(console: Console, action: str, error: Exception) -> NoReturn:
    """
    Print a failure line and exit with the error's category code.

    Configuration errors exit with 2, data errors with 3, numeric divergence
    with 4; anything else aborts with 1.
    """
    console.print(f"[red]✗[/red] {action}: {error}")
    if isinstance(error, SeqGANError) and error.exit_code != 1:
        raise click.exceptions.Exit(error.exit_code)
    raise click.Abort()


def print_banner(console: Optional[Console] = None) -> None:
    """
    Print the SeqGAN CLI banner.

    Args:
        console: Rich console instance (creates new one if not provided)
    """
    if console is None:
        console = Console()

    try:
        from seqgan_cli import __version__
        version_text = f"v{__version__}"
    except ImportError:
        version_text = ""

    logo = Text(
        """

███████╗ ██████╗       ██████╗██╗     ██╗
██╔════╝██╔════╝      ██╔════╝██║     ██║
███████╗██║  ███╗ ██  ██║     ██║     ██║
╚════██║██║   ██║     ██║     ██║     ██║
███████║╚██████╔╝     ╚██████╗███████╗██║
╚══════╝ ╚═════╝       ╚═════╝╚══════╝╚═╝

""" + f"SeqGAN CLI {version_text}",
        style="bold purple",
        justify="left",
    )

    console.print(logo)
    console.print()
