"""Configuration inspection commands."""

from pathlib import Path
from typing import Optional

import click
from rich.console import Console
from rich.table import Table

from seqgan_cli.config import DEFAULTS, format_value, parse_config, render_resolved, write_resolved
from seqgan_cli.utils import fail


console = Console()


@click.group()
def config():
    """Inspect experiment configurations."""
    pass


@config.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False, path_type=Path), help="Experiment INI file")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), help="Write the resolved config here")
def resolve(config_path: Path, out_path: Optional[Path]):
    """Validate a config and print it with every default filled in."""
    try:
        cfg = parse_config(config_path)
    except Exception as e:
        fail(console, "Invalid configuration", e)

    if out_path is None:
        click.echo(render_resolved(cfg), nl=False)
        return
    try:
        write_resolved(cfg, out_path)
    except OSError as e:
        fail(console, "Failed to write resolved config", e)
    console.print(f"[green]✓[/green] Resolved config written to {out_path}")


@config.command()
def defaults():
    """List every configuration key with its default."""
    table = Table(title="Configuration defaults")
    table.add_column("Key", style="cyan")
    table.add_column("Default", style="magenta")
    table.add_column("Constraint", style="green")
    for section, options in DEFAULTS.items():
        for key, option in options.items():
            table.add_row(f"{section}.{key}", format_value(option.default), option.rule)
    console.print(table)
