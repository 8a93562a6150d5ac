"""End-to-end experiments: build the task from a config, run the requested algorithms and write the outputs."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence as SequenceType

from seqgan_cli.config import RESOLVED_NAME, ExperimentConfig, write_resolved
from seqgan_cli.corpus import CorpusVocab, ingest_corpus
from seqgan_cli.errors import ConfigError
from seqgan_cli.numerics import Rng
from seqgan_cli.oracle_eval import make_oracle
from seqgan_cli.reporting import ablation_table, write_eval_reports, write_metrics_csv, write_summary
from seqgan_cli.training import (
    RunArtifacts,
    Task,
    make_corpus_task,
    make_synthetic_task,
    pretrain_ablation,
    run_algorithm,
    strategy_ablation,
)


logger = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: List[RunArtifacts]
    outputs: Dict[str, Path] = field(default_factory=dict)
    metric: str = "nll_oracle"


def build_task(cfg: ExperimentConfig) -> Task:
    """
    The oracle-backed task in synthetic mode; the ingested corpus in corpus mode.

    In corpus mode an existing vocabulary file is reused, otherwise the
    vocabulary is built from the training split and written there.
    """
    if cfg.mode == "synthetic":
        dims = cfg.generator_dims()
        oracle = make_oracle(cfg.oracle_seed, dims, cfg.training.dtype)
        return make_synthetic_task(oracle, dims, cfg.train_size, cfg.training.eval_samples)

    vocab = CorpusVocab.read(cfg.corpus_vocab) if cfg.corpus_vocab.exists() else None
    train, test, _ = ingest_corpus(cfg.corpus_train, cfg.corpus_test, cfg.seq_len, vocab, cfg.truncate)
    if vocab is None:
        train.vocab.write(cfg.corpus_vocab)
        logger.info("Wrote vocabulary of %d tokens to %s", train.vocab.size, cfg.corpus_vocab)
    dims = cfg.generator_dims(train.vocab.size)
    return make_corpus_task(train.sequences, test.sequences, dims, cfg.training.eval_samples, cfg.bleu_n)


def _prepare_output(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Output directory {out} is not writable: {e.strerror}", key="output.dir")
    write_resolved(cfg, out / RESOLVED_NAME)
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """
    Run every algorithm of ``cfg`` on one shared task.

    Writes ``config.resolved``, ``metrics.csv``, ``summary.txt``, one
    ``eval-<algorithm>.csv`` per algorithm and ``checkpoints/<algorithm>/``.
    """
    out = _prepare_output(cfg)
    task = build_task(cfg)
    runs = []
    for algorithm in cfg.algorithms:
        logger.info("Running %s", algorithm)
        runs.append(run_algorithm(algorithm, cfg.training, task, out / "checkpoints" / algorithm, cfg.checkpoint_keep))

    outputs = {
        "config": out / RESOLVED_NAME,
        "metrics": write_metrics_csv(out / "metrics.csv", runs, cfg.record_wallclock),
        "summary": write_summary(out / "summary.txt", runs, task.evaluator.metric),
    }
    for path in write_eval_reports(out, runs):
        outputs[path.stem] = path
    return ExperimentResult(cfg, runs, outputs, task.evaluator.metric)


def grid_configs(base: ExperimentConfig, grid: SequenceType[Mapping[str, str]]) -> List[ExperimentConfig]:
    """
    One config per grid line.

    Run i writes to ``<out>/grid-iii`` and uses the seed drawn from the
    ``grid/i`` child stream of the base seed.
    """
    root = Rng(base.seed)
    configs = []
    for i, overrides in enumerate(grid):
        merged = {"output.dir": str(Path(base.output_dir) / f"grid-{i:03d}"), **overrides}
        merged["experiment.seed"] = str(root.child(f"grid/{i}").spawn_seed())
        configs.append(base.with_overrides(merged))
    return configs


def run_grid(configs: SequenceType[ExperimentConfig], workers: int = 1) -> List[ExperimentResult]:
    """Run independent experiments, in worker processes when ``workers`` > 1."""
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    if workers == 1 or len(configs) == 1:
        return [run_experiment(cfg) for cfg in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_experiment, configs))


def run_ablation(cfg: ExperimentConfig, kind: str, budgets: Optional[SequenceType[int]] = None) -> ExperimentResult:
    """
    Training-strategy grid (``strategy``) or pretraining-budget comparison (``pretrain``).

    Writes ``metrics-<run>.csv`` per run and a ``summary.txt`` with the final
    and best metric and the degradation from the minimum.
    """
    out = _prepare_output(cfg)
    task = build_task(cfg)
    if kind == "strategy":
        runs = strategy_ablation(cfg.training, task)
    elif kind == "pretrain":
        if not budgets:
            raise ConfigError("The pretraining ablation needs at least one budget")
        runs = pretrain_ablation(cfg.training, task, budgets)
    else:
        raise ValueError(f"Unknown ablation '{kind}'. Expected 'strategy' or 'pretrain'.")

    outputs = {"config": out / RESOLVED_NAME}
    for run in runs:
        outputs[run.algorithm] = write_metrics_csv(out / f"metrics-{run.algorithm}.csv", [run], cfg.record_wallclock)
    outputs["summary"] = write_summary(out / "summary.txt", runs, task.evaluator.metric, table=ablation_table(runs))
    return ExperimentResult(cfg, runs, outputs, task.evaluator.metric)
