"""Main CLI entry point for SeqGAN CLI."""

import sys
import click
from rich.console import Console
from seqgan_cli.commands import ablation as ablation_commands
from seqgan_cli.commands import config as config_commands
from seqgan_cli.commands import ingest as ingest_command
from seqgan_cli.commands import run as run_command
from seqgan_cli.utils import print_banner, setup_logging

console = Console()


@click.group(invoke_without_command=True)
@click.option("--verbose", "-v", is_flag=True, help="Log per-batch detail")
@click.pass_context
def cli(ctx, verbose: bool):
    """SeqGAN CLI - Train and evaluate adversarial sequence generators."""
    setup_logging(verbose)
    # Show banner when no subcommand is provided
    if ctx.invoked_subcommand is None:
        print_banner(console)
        click.echo(ctx.get_help())
        sys.exit(0)


# Register commands
cli.add_command(run_command.run, name="run")
cli.add_command(config_commands.config, name="config")
cli.add_command(ingest_command.ingest, name="ingest")
cli.add_command(ablation_commands.ablation, name="ablation")


def main():
    """Entry point for the seqgan-cli command."""
    cli()
