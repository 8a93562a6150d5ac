"""
Desk-scale training runs.

These take tens of minutes and only run with ``pytest --runslow``.
"""

from dataclasses import replace

import numpy as np
import pytest

from seqgan_cli.config import parse_config
from seqgan_cli.experiment import build_task
from seqgan_cli.oracle_eval import welch_t_test
from seqgan_cli.training import degradation_from_minimum, pretrain_ablation, run_algorithm, strategy_ablation

SEEDS = (0, 1, 2)

DESK_SCALE = {
    "oracle.seed": "1",
    "oracle.vocab_size": "100",
    "oracle.train_size": "2000",
    "experiment.seq_len": "16",
    "generator.hidden_dim": "32",
    "adversarial.rollout_num": "8",
    "adversarial.rounds": "30",
    "adversarial.g_steps": "1",
    "adversarial.d_steps": "1",
    "adversarial.k": "10",
    "evaluation.samples": "5000",
}


@pytest.fixture(scope="module")
def desk_config():
    return parse_config(overrides=DESK_SCALE)


@pytest.fixture(scope="module")
def desk_task(desk_config):
    return build_task(desk_config)


@pytest.fixture(scope="module")
def desk_runs(desk_config, desk_task):
    runs = {}
    for seed in SEEDS:
        cfg = replace(desk_config.training, seed=seed)
        runs[seed] = {
            algorithm: run_algorithm(algorithm, cfg, desk_task)
            for algorithm in ("random", "mle", "ss", "seqgan")
        }
    return runs


@pytest.mark.slow
class TestSyntheticOrdering:
    """NLL_oracle ordering of the trainers on the scaled synthetic task."""

    def test_random_worse_than_mle(self, desk_runs):
        for runs in desk_runs.values():
            assert runs["random"].final_report.mean > runs["mle"].final_report.mean

    def test_seqgan_beats_mle(self, desk_runs):
        for runs in desk_runs.values():
            assert runs["mle"].final_report.mean > runs["seqgan"].final_report.mean

        mle = np.concatenate([runs["mle"].final_report.scores for runs in desk_runs.values()])
        seqgan = np.concatenate([runs["seqgan"].final_report.scores for runs in desk_runs.values()])
        assert welch_t_test(seqgan, mle) < 0.01

    def test_scheduled_sampling_close_to_mle(self, desk_runs):
        for runs in desk_runs.values():
            assert runs["ss"].final_report.mean <= 1.02 * runs["mle"].final_report.mean


@pytest.mark.slow
class TestStrategyAblation:
    """Frequent generator updates against a stale discriminator."""

    def test_stable_strategy_wins(self, desk_config, desk_task):
        degraded = 0
        for seed in SEEDS:
            cfg = replace(desk_config.training, seed=seed, early_stop_patience=0)
            fast, stable = strategy_ablation(cfg, desk_task, [(100, 1, 10), (1, 1, 10)])
            assert stable.nll_curve()[-1] <= fast.nll_curve()[-1]
            degraded += degradation_from_minimum(fast.records) >= 0.01
        assert degraded >= 2


@pytest.mark.slow
class TestPretrainAblation:
    """Short versus converged generator pretraining."""

    def test_converged_pretraining_wins(self, desk_config, desk_task):
        for seed in SEEDS:
            cfg = replace(desk_config.training, seed=seed)
            short, converged = pretrain_ablation(cfg, desk_task, [5, 150])
            assert converged.nll_curve()[-1] < short.nll_curve()[-1]
