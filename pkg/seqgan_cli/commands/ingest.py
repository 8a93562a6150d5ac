"""Corpus ingestion command."""

from pathlib import Path

import click
from rich.console import Console
from rich.table import Table

from seqgan_cli.corpus import ingest_corpus, write_ingested
from seqgan_cli.utils import fail


console = Console()


@click.command()
@click.argument("train", type=click.Path(dir_okay=False, path_type=Path))
@click.argument("test", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--seq-len", "seq_len", required=True, type=int, help="Sequence length T")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@click.option("--truncate/--no-truncate", default=True, show_default=True, help="Truncate lines longer than T instead of dropping them")
def ingest(train: Path, test: Path, seq_len: int, out_dir: Path, truncate: bool):
    """Map a tokenized TRAIN/TEST pair to fixed-length id sequences."""
    try:
        train_corpus, test_corpus, reports = ingest_corpus(train, test, seq_len, truncate=truncate)
        paths = write_ingested(out_dir, train_corpus, test_corpus)
    except Exception as e:
        fail(console, "Ingestion failed", e)

    table = Table(title="Ingestion report")
    table.add_column("Split", style="cyan")
    table.add_column("Lines", justify="right")
    table.add_column("Kept", justify="right", style="green")
    table.add_column("Too short", justify="right")
    table.add_column("Truncated", justify="right")
    table.add_column("Too long", justify="right")
    table.add_column("Unknown tokens", justify="right", style="yellow")
    for report in reports:
        table.add_row(
            report.split,
            str(report.lines_read),
            str(report.kept),
            str(report.dropped_short),
            str(report.truncated),
            str(report.dropped_long),
            str(report.unknown_tokens),
        )
    console.print(table)
    console.print(f"[green]✓[/green] Vocabulary of {train_corpus.vocab.size} tokens written to {paths['vocab']}")
