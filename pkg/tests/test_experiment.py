"""End-to-end tests for experiments on tiny configurations."""

import pytest

from seqgan_cli.config import parse_config
from seqgan_cli.errors import ConfigError
from seqgan_cli.experiment import build_task, grid_configs, run_ablation, run_experiment, run_grid
from seqgan_cli.reporting import read_metrics_csv

TINY_INI = """
[experiment]
seed = 2
seq_len = 5
algorithms = random, mle, seqgan

[oracle]
seed = 1
vocab_size = 4
train_size = 32

[generator]
embedding_dim = 4
hidden_dim = 4
batch_size = 8
pretrain_epochs = 1

[discriminator]
embedding_dim = 4
batch_size = 16
pretrain_steps = 1
pretrain_epochs = 1

[adversarial]
rounds = 1
k = 1
rollout_num = 2

[evaluation]
samples = 20
"""


@pytest.fixture
def tiny_config(config_file, tmp_path):
    path = config_file(TINY_INI)

    def load(out: str = "out", **overrides):
        return parse_config(path, {"output.dir": str(tmp_path / out), **overrides})

    return load


class TestRunExperiment:
    """Tests for run_experiment."""

    def test_outputs(self, tiny_config):
        cfg = tiny_config()
        result = run_experiment(cfg)
        out = cfg.output_dir
        for name in ("config.resolved", "metrics.csv", "summary.txt", "eval-random.csv", "eval-mle.csv", "eval-seqgan.csv"):
            assert (out / name).exists(), name
        assert [run.algorithm for run in result.runs] == ["random", "mle", "seqgan"]
        assert any((out / "checkpoints" / "seqgan").iterdir())
        assert "Sequence generation performance" in (out / "summary.txt").read_text()
        assert result.metric == "nll_oracle"

    def test_metrics_log(self, tiny_config):
        cfg = tiny_config()
        result = run_experiment(cfg)
        records = read_metrics_csv(cfg.output_dir / "metrics.csv")
        assert len(records) == sum(len(run.records) for run in result.runs)
        assert {r.algorithm for r in records} == {"random", "mle", "seqgan"}
        assert all(r.seed == 2 for r in records)
        assert all(r.wallclock_s == 0.0 for r in records)

    def test_rerun_is_byte_identical(self, tiny_config):
        first = tiny_config("a")
        second = tiny_config("b")
        run_experiment(first)
        run_experiment(second)
        assert (first.output_dir / "metrics.csv").read_bytes() == (second.output_dir / "metrics.csv").read_bytes()

    def test_wallclock_column(self, tiny_config):
        cfg = tiny_config(**{"output.record_wallclock": "true", "experiment.algorithms": "random"})
        run_experiment(cfg)
        header, row = (cfg.output_dir / "metrics.csv").read_text().splitlines()
        assert row.split(",")[header.split(",").index("wallclock_s")] != ""

    def test_resolved_config_reproduces_run(self, tiny_config):
        cfg = tiny_config()
        run_experiment(cfg)
        assert parse_config(cfg.output_dir / "config.resolved") == cfg


class TestCorpusMode:
    """Tests for experiments on an ingested text corpus."""

    def _corpus_config(self, tmp_path, config_file):
        (tmp_path / "train.txt").write_text("a b c d e\nb c d e a\nc d e a b\na a b b c\n")
        (tmp_path / "test.txt").write_text("a b c d e\ne d c b a\n")
        path = config_file(
            TINY_INI.replace("seq_len = 5", "seq_len = 3")
            + f"\n[corpus]\ntrain = {tmp_path / 'train.txt'}\ntest = {tmp_path / 'test.txt'}\nvocab = {tmp_path / 'vocab.txt'}\n"
        )
        return parse_config(path, {
            "experiment.mode": "corpus",
            "experiment.algorithms": "mle,pg_bleu",
            "discriminator.kernels": str(self._kernels(tmp_path)),
            "output.dir": str(tmp_path / "out"),
        })

    @staticmethod
    def _kernels(tmp_path):
        path = tmp_path / "kernels.txt"
        path.write_text("1,3\n2,3\n")
        return path

    def test_bleu_evaluation(self, tmp_path, config_file):
        cfg = self._corpus_config(tmp_path, config_file)
        result = run_experiment(cfg)
        assert result.metric == "bleu"
        assert (tmp_path / "vocab.txt").exists()
        for run in result.runs:
            assert all(0.0 <= r.bleu <= 1.0 for r in run.records)
            assert all(r.nll_oracle_mean is None for r in run.records)

    def test_existing_vocabulary_is_reused(self, tmp_path, config_file):
        cfg = self._corpus_config(tmp_path, config_file)
        (tmp_path / "vocab.txt").write_text("<s>\ne\nd\nc\nb\na\n<unk>\n")
        task = build_task(cfg)
        assert task.dims.vocab_size == 6
        assert task.positives[0].tolist() == [5, 4, 3]


class TestGrid:
    """Tests for grid expansion."""

    def test_grid_configs(self, tiny_config):
        base = tiny_config()
        configs = grid_configs(base, [{"adversarial.k": "2"}, {"adversarial.k": "3"}])
        assert [c.training.k for c in configs] == [2, 3]
        assert [c.output_dir.name for c in configs] == ["grid-000", "grid-001"]
        assert configs[0].seed != configs[1].seed
        again = grid_configs(base, [{"adversarial.k": "2"}, {"adversarial.k": "3"}])
        assert [c.seed for c in again] == [c.seed for c in configs]

    def test_grid_seed_wins_over_line(self, tiny_config):
        base = tiny_config()
        config = grid_configs(base, [{"experiment.seed": "99"}])[0]
        assert config.seed != 99

    def test_run_grid_sequential(self, tiny_config):
        base = tiny_config(**{"experiment.algorithms": "random"})
        results = run_grid(grid_configs(base, [{}, {}]))
        assert len(results) == 2
        assert all((r.config.output_dir / "metrics.csv").exists() for r in results)

    def test_workers_must_be_positive(self, tiny_config):
        with pytest.raises(ValueError):
            run_grid([tiny_config()], workers=0)


class TestAblation:
    """Tests for run_ablation."""

    def test_pretrain_budgets(self, tiny_config):
        cfg = tiny_config()
        result = run_ablation(cfg, "pretrain", [0, 1])
        assert [run.algorithm for run in result.runs] == ["seqgan-pretrain0", "seqgan-pretrain1"]
        assert (cfg.output_dir / "metrics-seqgan-pretrain0.csv").exists()
        assert "Ablation" in (cfg.output_dir / "summary.txt").read_text()

    def test_pretrain_needs_budgets(self, tiny_config):
        with pytest.raises(ConfigError):
            run_ablation(tiny_config(), "pretrain", [])

    def test_unknown_kind(self, tiny_config):
        with pytest.raises(ValueError):
            run_ablation(tiny_config(), "learning-rate")
