"""Tests for metric logs and summary tables."""

from rich.console import Console

from seqgan_cli.oracle_eval import EvalReport
from seqgan_cli.reporting import (
    METRIC_COLUMNS,
    ablation_table,
    metric_rows,
    read_metrics_csv,
    summary_table,
    write_metrics_csv,
)
from seqgan_cli.training import MetricRecord, RunArtifacts, TrainingConfig


def _run(algorithm, scores, nll_curve=()):
    artifacts = RunArtifacts(algorithm, TrainingConfig())
    for epoch, value in enumerate(nll_curve, start=1):
        artifacts.add(MetricRecord(algorithm, 0, epoch, nll_oracle_mean=value, nll_oracle_std=0.5, wallclock_s=1.25))
    artifacts.final_report = EvalReport(scores) if scores else None
    return artifacts


def _render(table):
    console = Console(width=120, color_system=None, record=True)
    console.print(table)
    return console.export_text()


class TestMetricsCsv:
    """Tests for metrics.csv."""

    def test_wallclock_left_blank_by_default(self):
        row = metric_rows([MetricRecord("mle", 1, 3, nll_oracle_mean=9.5, wallclock_s=2.0, seed=4)])[0]
        assert row == ["mle", "1", "3", "9.5", "", "", "", "", "", "4"]

    def test_wallclock_recorded_on_request(self):
        row = metric_rows([MetricRecord("mle", 1, 3, wallclock_s=2.0)], record_wallclock=True)[0]
        assert row[METRIC_COLUMNS.index("wallclock_s")] == "2.0"

    def test_read_back(self, tmp_path):
        runs = [_run("mle", [1.0, 2.0], [9.0, 8.5]), _run("seqgan", [1.0, 3.0], [9.0, 8.0, 7.75])]
        path = write_metrics_csv(tmp_path / "metrics.csv", runs)
        assert path.read_text().splitlines()[0] == ",".join(METRIC_COLUMNS)
        records = read_metrics_csv(path)
        assert [(r.algorithm, r.epoch, r.nll_oracle_mean) for r in records] == [
            ("mle", 1, 9.0), ("mle", 2, 8.5), ("seqgan", 1, 9.0), ("seqgan", 2, 8.0), ("seqgan", 3, 7.75),
        ]
        assert all(r.bleu is None and r.wallclock_s == 0.0 for r in records)


class TestTables:
    """Tests for the rich summary tables."""

    def test_summary_table(self):
        runs = [_run("mle", [9.0, 9.5, 10.0]), _run("seqgan", [8.0, 8.5, 8.25]), _run("random", [])]
        text = _render(summary_table(runs, "nll_oracle"))
        assert "Sequence generation performance" in text
        assert "p-value vs seqgan" in text
        assert "9.5000" in text
        assert "random" in text

    def test_summary_without_reference(self):
        text = _render(summary_table([_run("mle", [1.0, 2.0])], "bleu"))
        assert "1.5000" in text

    def test_ablation_table(self):
        runs = [_run("seqgan-g100-d1-k10", [1.0], [10.0, 8.0, 8.4]), _run("seqgan-g1-d1-k10", [1.0], [])]
        text = _render(ablation_table(runs))
        assert "5.00%" in text
        assert "8.4000" in text
