"""Ablation commands: training strategies and pretraining budgets."""

from pathlib import Path
from typing import Optional

import click
from rich.console import Console

from seqgan_cli.config import parse_config
from seqgan_cli.experiment import run_ablation
from seqgan_cli.reporting import ablation_table
from seqgan_cli.utils import fail


console = Console()


def _parse_budgets(text: str):
    try:
        budgets = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated epoch counts, got '{text}'")
    if not budgets or min(budgets) < 0:
        raise click.BadParameter("budgets must be non-negative epoch counts")
    return budgets


def _run(kind: str, config_path: Path, out_dir: Optional[Path], budgets=None):
    overrides = {"output.dir": str(out_dir)} if out_dir is not None else None
    try:
        cfg = parse_config(config_path, overrides)
    except Exception as e:
        fail(console, "Invalid configuration", e)
    try:
        result = run_ablation(cfg, kind, budgets)
    except Exception as e:
        fail(console, "Ablation failed", e)
    console.print(ablation_table(result.runs))
    console.print(f"[green]✓[/green] {len(result.runs)} runs written to {cfg.output_dir}")


@click.group()
def ablation():
    """Compare training strategies or pretraining budgets."""
    pass


@ablation.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False, path_type=Path), help="Experiment INI file")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
def strategy(config_path: Path, out_dir: Optional[Path]):
    """Run the (g-steps, d-steps, k) strategy grid."""
    _run("strategy", config_path, out_dir)


@ablation.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False, path_type=Path), help="Experiment INI file")
@click.option("--budgets", default="5,50", show_default=True, help="Comma-separated generator pretraining epochs")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
def pretrain(config_path: Path, budgets: str, out_dir: Optional[Path]):
    """Run SeqGAN once per pretraining budget."""
    _run("pretrain", config_path, out_dir, _parse_budgets(budgets))
