"""Run outputs: the metrics CSV, per-algorithm evaluation CSVs and the summary table."""

import csv
from pathlib import Path
from typing import Iterable, List, Optional, Sequence as SequenceType, Union

from rich.console import Console
from rich.table import Table

from seqgan_cli.oracle_eval import welch_t_test
from seqgan_cli.training import MetricRecord, RunArtifacts, degradation_from_minimum


METRIC_COLUMNS = (
    "algorithm",
    "round",
    "epoch",
    "nll_oracle_mean",
    "nll_oracle_std",
    "bleu",
    "disc_loss",
    "disc_acc",
    "wallclock_s",
    "seed",
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metric_rows(records: Iterable[MetricRecord], record_wallclock: bool = False) -> List[List[str]]:
    rows = []
    for r in records:
        wallclock = r.wallclock_s if record_wallclock else None
        rows.append([
            _cell(v) for v in (
                r.algorithm, r.round, r.epoch, r.nll_oracle_mean, r.nll_oracle_std,
                r.bleu, r.disc_loss, r.disc_acc, wallclock, r.seed,
            )
        ])
    return rows


def write_metrics_csv(
    path: Union[str, Path],
    runs: SequenceType[RunArtifacts],
    record_wallclock: bool = False,
) -> Path:
    """
    Write the metric logs of ``runs`` to one CSV.

    Args:
        path: Destination file
        runs: Finished runs, written in order
        record_wallclock: Fill the wallclock_s column (makes reruns differ)

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        for run in runs:
            writer.writerows(metric_rows(run.records, record_wallclock))
    return path


def _optional_float(text: str) -> Optional[float]:
    return float(text) if text else None


def read_metrics_csv(path: Union[str, Path]) -> List[MetricRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        return [
            MetricRecord(
                algorithm=row["algorithm"],
                round=int(row["round"]),
                epoch=int(row["epoch"]),
                nll_oracle_mean=_optional_float(row["nll_oracle_mean"]),
                nll_oracle_std=_optional_float(row["nll_oracle_std"]),
                bleu=_optional_float(row["bleu"]),
                disc_loss=_optional_float(row["disc_loss"]),
                disc_acc=_optional_float(row["disc_acc"]),
                wallclock_s=_optional_float(row["wallclock_s"]) or 0.0,
                seed=int(row["seed"]),
            )
            for row in csv.DictReader(f)
        ]


def write_eval_reports(directory: Union[str, Path], runs: SequenceType[RunArtifacts]) -> List[Path]:
    """``eval-<algorithm>.csv`` with the per-sample scores of each run's final evaluation."""
    directory = Path(directory)
    return [
        run.final_report.write_csv(directory / f"eval-{run.algorithm}.csv")
        for run in runs
        if run.final_report is not None
    ]


def _p_value(run: RunArtifacts, reference: Optional[RunArtifacts]) -> str:
    if reference is None or run is reference or run.final_report is None or reference.final_report is None:
        return "-"
    try:
        return f"{welch_t_test(reference.final_report.scores, run.final_report.scores):.3g}"
    except ValueError:
        return "n/a"


def summary_table(runs: SequenceType[RunArtifacts], metric: str, reference: str = "seqgan") -> Table:
    """
    Final metric per algorithm with the Welch p-value against ``reference``.

    Args:
        runs: Finished runs
        metric: Column title (nll_oracle or bleu)
        reference: Algorithm every other row is compared with
    """
    baseline = next((run for run in runs if run.algorithm == reference), None)
    table = Table(title="Sequence generation performance")
    table.add_column("Algorithm", style="cyan")
    table.add_column(metric, justify="right")
    table.add_column("Std", justify="right")
    table.add_column("Samples", justify="right")
    table.add_column(f"p-value vs {reference}", justify="right")
    for run in runs:
        report = run.final_report
        if report is None:
            table.add_row(run.algorithm, "-", "-", "-", "-")
            continue
        table.add_row(
            run.algorithm,
            f"{report.mean:.4f}",
            f"{report.std:.4f}",
            str(report.count),
            _p_value(run, baseline),
        )
    return table


def write_summary(
    path: Union[str, Path],
    runs: SequenceType[RunArtifacts],
    metric: str,
    reference: str = "seqgan",
    table: Optional[Table] = None,
) -> Path:
    """Render the summary table (or ``table``) as plain text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        console = Console(file=f, width=100, color_system=None, force_terminal=False)
        console.print(table if table is not None else summary_table(runs, metric, reference))
    return path


def ablation_table(runs: SequenceType[RunArtifacts]) -> Table:
    """Final and best NLL_oracle of each ablation run, with the rise from the minimum."""
    table = Table(title="Ablation")
    table.add_column("Run", style="cyan")
    table.add_column("Final", justify="right")
    table.add_column("Best", justify="right")
    table.add_column("Degradation", justify="right")
    table.add_column("Evaluations", justify="right")
    for run in runs:
        curve = run.nll_curve()
        if not curve:
            table.add_row(run.algorithm, "-", "-", "-", str(len(run.records)))
            continue
        table.add_row(
            run.algorithm,
            f"{curve[-1]:.4f}",
            f"{min(curve):.4f}",
            f"{degradation_from_minimum(run.records):.2%}",
            str(len(curve)),
        )
    return table
