"""Experiment run command."""

from pathlib import Path
from typing import Dict, Optional

import click
from rich.console import Console
from rich.table import Table

from seqgan_cli.config import MODES, parse_config, parse_grid
from seqgan_cli.experiment import grid_configs, run_experiment, run_grid
from seqgan_cli.reporting import summary_table
from seqgan_cli.utils import fail


console = Console()


def _overrides(mode: Optional[str], algorithms: Optional[str], seed: Optional[int], out_dir: Optional[Path]) -> Dict[str, str]:
    overrides = {}
    if mode:
        overrides["experiment.mode"] = mode
    if algorithms:
        overrides["experiment.algorithms"] = algorithms
    if seed is not None:
        overrides["experiment.seed"] = str(seed)
    if out_dir is not None:
        overrides["output.dir"] = str(out_dir)
    return overrides


@click.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), help="Experiment INI file")
@click.option("--mode", type=click.Choice(MODES), help="Synthetic oracle data or a text corpus")
@click.option("--algorithms", help="Comma-separated list of random, mle, ss, pg_bleu, seqgan")
@click.option("--seed", type=click.IntRange(min=0), help="Experiment seed")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@click.option("--grid", "grid_path", type=click.Path(dir_okay=False, path_type=Path), help="Grid file, one run per line")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="Parallel grid runs")
def run(
    config_path: Optional[Path],
    mode: Optional[str],
    algorithms: Optional[str],
    seed: Optional[int],
    out_dir: Optional[Path],
    grid_path: Optional[Path],
    workers: int,
):
    """Train and evaluate the requested algorithms."""
    try:
        cfg = parse_config(config_path, _overrides(mode, algorithms, seed, out_dir))
    except Exception as e:
        fail(console, "Invalid configuration", e)

    if grid_path is None:
        try:
            result = run_experiment(cfg)
        except Exception as e:
            fail(console, "Run failed", e)
        console.print(summary_table(result.runs, result.metric))
        console.print(f"[green]✓[/green] Results written to {cfg.output_dir}")
        return

    try:
        configs = grid_configs(cfg, parse_grid(grid_path))
    except Exception as e:
        fail(console, "Invalid grid", e)
    try:
        results = run_grid(configs, workers)
    except Exception as e:
        fail(console, "Grid run failed", e)

    table = Table(title="Grid runs")
    table.add_column("Run", style="cyan")
    table.add_column("Seed", justify="right")
    table.add_column("Output", style="magenta")
    for i, result in enumerate(results):
        table.add_row(str(i), str(result.config.seed), str(result.config.output_dir))
    console.print(table)
    console.print(f"[green]✓[/green] {len(results)} grid runs written to {cfg.output_dir}")
