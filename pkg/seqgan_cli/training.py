"""Adversarial training loop and the baseline trainers (random, MLE, scheduled sampling, PG-BLEU)."""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence as SequenceType, Tuple, Union

import numpy as np

from seqgan_cli.bleu import BleuScorer
from seqgan_cli.checkpoint import save_checkpoint
from seqgan_cli.discriminator import (
    KERNEL_PRESETS,
    DiscriminatorConfig,
    DiscriminatorModel,
    LabeledBatch,
    accuracy,
    balanced_batch,
    cross_entropy,
    train_epochs,
)
from seqgan_cli.errors import DataError, DimensionError, DivergenceError
from seqgan_cli.generator import (
    GeneratorDims,
    GeneratorModel,
    as_token_matrix,
    curriculum_rate,
    mle_train_epoch,
    scheduled_sampling_epoch,
)
from seqgan_cli.numerics import OptimizerConfig, Rng, resolve_dtype
from seqgan_cli.oracle_eval import EvalReport, OracleModel, generate_training_set, nll_oracle
from seqgan_cli.rollout import BASELINES, RewardFn, RolloutPolicy, policy_gradient_step, sync_rollout


logger = logging.getLogger(__name__)

ALGORITHMS = ("random", "mle", "ss", "pg_bleu", "seqgan")

# (g_steps, d_steps, k) of the training-strategy comparison.
STRATEGIES: Tuple[Tuple[int, int, int], ...] = ((100, 1, 10), (30, 1, 30), (1, 1, 10), (1, 5, 3))

SANITY_BATCH = 256
SANITY_RATIO = 0.9


@dataclass
class TrainingConfig:
    """Loop counts, batch sizes and optimizers for one training run."""

    seed: int = 0
    g_steps: int = 1
    d_steps: int = 1
    k: int = 10
    rollout_num: int = 16
    pretrain_gen_epochs: int = 50
    pretrain_disc_steps: int = 5
    pretrain_disc_epochs: int = 3
    total_adversarial_rounds: int = 30
    gen_batch_size: int = 64
    disc_batch_size: int = 64
    pretrain_optimizer: OptimizerConfig = field(default_factory=lambda: OptimizerConfig("adam", 1e-2))
    adversarial_optimizer: OptimizerConfig = field(default_factory=lambda: OptimizerConfig("adam", 1e-2))
    disc_optimizer: OptimizerConfig = field(default_factory=lambda: OptimizerConfig("adam", 1e-3))
    baseline: str = "none"
    eval_every: int = 1
    eval_samples: int = 5000
    plateau_tolerance: float = 1e-4
    plateau_window: int = 5
    early_stop_patience: int = 10
    ss_decay: float = 0.002
    pg_bleu_n: int = 2
    disc_embedding_dim: int = 64
    kernels: Tuple[Tuple[int, int], ...] = tuple(KERNEL_PRESETS["desk"])
    dropout_keep: float = 0.75
    precision: str = "float64"

    def __post_init__(self):
        for name in ("g_steps", "d_steps", "k", "rollout_num", "gen_batch_size", "disc_batch_size", "eval_every",
                     "eval_samples", "plateau_window", "pg_bleu_n"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1, got {getattr(self, name)}")
        for name in ("pretrain_gen_epochs", "pretrain_disc_steps", "pretrain_disc_epochs",
                     "total_adversarial_rounds", "early_stop_patience"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.baseline not in BASELINES:
            raise ValueError(f"Unknown baseline '{self.baseline}'. Expected one of {list(BASELINES)}.")
        if self.ss_decay < 0:
            raise ValueError("ss_decay must be non-negative")
        resolve_dtype(self.precision)

    @property
    def dtype(self):
        return resolve_dtype(self.precision)


@dataclass
class MetricRecord:
    algorithm: str
    round: int
    epoch: int
    nll_oracle_mean: Optional[float] = None
    nll_oracle_std: Optional[float] = None
    bleu: Optional[float] = None
    disc_loss: Optional[float] = None
    disc_acc: Optional[float] = None
    wallclock_s: float = 0.0
    seed: int = 0


@dataclass
class RunArtifacts:
    """Everything a finished run leaves behind."""

    algorithm: str
    config: TrainingConfig
    records: List[MetricRecord] = field(default_factory=list)
    final_report: Optional[EvalReport] = None
    generator: Optional[GeneratorModel] = None
    discriminator: Optional[DiscriminatorModel] = None
    checkpoints: List[Path] = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.config.seed

    def add(self, record: MetricRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValueError(f"Epoch {record.epoch} does not follow epoch {self.records[-1].epoch}")
        self.records.append(record)

    def nll_curve(self) -> List[float]:
        return [r.nll_oracle_mean for r in self.records if r.nll_oracle_mean is not None]


class UniformSampler:
    """Random-token baseline: every token drawn uniformly from the vocabulary."""

    def __init__(self, dims: GeneratorDims):
        self.dims = dims

    def sample(self, count: int, rng: Rng) -> np.ndarray:
        return np.asarray(rng.integers(1, self.dims.vocab_size + 1, size=(count, self.dims.seq_len)), dtype=np.int64)


class Evaluator:
    """Scores a sampler; synthetic runs use NLL_oracle, corpus runs BLEU against the test split."""

    metric = ""
    lower_is_better = True

    def __init__(self, sample_count: int):
        if sample_count < 1:
            raise ValueError(f"sample_count must be positive, got {sample_count}")
        self.sample_count = sample_count

    def evaluate(self, sampler, rng: Rng) -> EvalReport:
        raise NotImplementedError

    def fill(self, record: MetricRecord, report: EvalReport) -> None:
        raise NotImplementedError

    def improved(self, value: float, best: Optional[float]) -> bool:
        if best is None:
            return True
        return value < best if self.lower_is_better else value > best


class OracleEvaluator(Evaluator):
    metric = "nll_oracle"

    def __init__(self, oracle: OracleModel, sample_count: int):
        super().__init__(sample_count)
        self.oracle = oracle

    def evaluate(self, sampler, rng: Rng) -> EvalReport:
        return nll_oracle(self.oracle, sampler, self.sample_count, rng)

    def fill(self, record: MetricRecord, report: EvalReport) -> None:
        record.nll_oracle_mean = report.mean
        record.nll_oracle_std = report.std


class BleuEvaluator(Evaluator):
    metric = "bleu"
    lower_is_better = False

    def __init__(self, references: np.ndarray, n: int, sample_count: int):
        super().__init__(sample_count)
        self.scorer = BleuScorer(references, n)

    def evaluate(self, sampler, rng: Rng) -> EvalReport:
        return EvalReport(self.scorer.score_batch(sampler.sample(self.sample_count, rng)))

    def fill(self, record: MetricRecord, report: EvalReport) -> None:
        record.bleu = report.mean


@dataclass
class Task:
    """Training data and evaluation shared by every algorithm of an experiment."""

    dims: GeneratorDims
    positives: np.ndarray
    references: np.ndarray
    evaluator: Evaluator
    mode: str = "synthetic"
    # Real sequences the discriminator never trains on.
    holdout: Optional[np.ndarray] = None

    def __post_init__(self):
        self.positives = as_token_matrix(self.positives, self.dims)
        if self.positives.shape[0] == 0:
            raise DataError("The training set is empty")
        if self.holdout is not None:
            self.holdout = as_token_matrix(self.holdout, self.dims)
            if self.holdout.shape[0] == 0:
                self.holdout = None


def make_synthetic_task(
    oracle: OracleModel,
    dims: GeneratorDims,
    train_size: int,
    eval_samples: int,
) -> Task:
    """
    Draw the training set from the oracle and evaluate by NLL_oracle.

    The data stream derives from the oracle seed, so every training seed of an
    experiment sees the same training set. A separate stream supplies the
    held-out sequences of the discriminator sanity batch.
    """
    if (dims.vocab_size, dims.seq_len) != (oracle.dims.vocab_size, oracle.dims.seq_len):
        raise DimensionError("Generator and oracle must share vocabulary size and sequence length")
    root = Rng(oracle.seed or 0)
    positives = generate_training_set(oracle, train_size, root.child("oracle-data"))
    holdout = generate_training_set(oracle, SANITY_BATCH, root.child("oracle-holdout"))
    return Task(dims, positives, positives, OracleEvaluator(oracle, eval_samples), "synthetic", holdout)


def make_corpus_task(
    train: np.ndarray,
    test: np.ndarray,
    dims: GeneratorDims,
    eval_samples: int,
    bleu_n: int = 2,
) -> Task:
    """
    Train on the corpus training split; evaluate by BLEU-n with the whole test
    split as references. The head of the test split doubles as the held-out
    positives of the discriminator sanity batch.
    """
    test = as_token_matrix(test, dims)
    if test.shape[0] == 0:
        raise DataError("The test split is empty")
    return Task(
        dims, train, as_token_matrix(train, dims), BleuEvaluator(test, bleu_n, eval_samples), "corpus", test[:SANITY_BATCH],
    )


class CheckpointManager:
    """Writes ``generator-eNNNN.ckpt`` (and the discriminator) per evaluation point, keeping the newest ``keep``."""

    def __init__(self, directory: Optional[Union[str, Path]], keep: int = 3):
        if keep < 1:
            raise ValueError(f"keep must be at least 1, got {keep}")
        self.directory = Path(directory) if directory is not None else None
        self.keep = keep
        self._saved: List[List[Path]] = []

    @property
    def last_good(self) -> Optional[Path]:
        return self._saved[-1][0] if self._saved else None

    @property
    def paths(self) -> List[Path]:
        return [path for group in self._saved for path in group]

    def save(
        self,
        epoch: int,
        generator: GeneratorModel,
        discriminator: Optional[DiscriminatorModel] = None,
    ) -> List[Path]:
        if self.directory is None:
            return []
        group = [save_checkpoint(generator.params, self.directory / f"generator-e{epoch:04d}.ckpt")]
        if discriminator is not None:
            group.append(save_checkpoint(discriminator.params, self.directory / f"discriminator-e{epoch:04d}.ckpt"))
        self._saved.append(group)
        while len(self._saved) > self.keep:
            for path in self._saved.pop(0):
                path.unlink(missing_ok=True)
        return group


@contextmanager
def divergence_guard(checkpoints: CheckpointManager) -> Iterator[None]:
    """Attach the last good checkpoint to any divergence raised inside the block."""
    try:
        yield
    except DivergenceError as e:
        if e.checkpoint is None and checkpoints.last_good is not None:
            raise DivergenceError(str(e), checkpoints.last_good) from e
        raise


class _Run:
    """Bookkeeping shared by the trainers: clock, evaluation, records and checkpoints."""

    def __init__(self, algorithm: str, cfg: TrainingConfig, task: Task, checkpoints: Optional[CheckpointManager]):
        self.cfg = cfg
        self.task = task
        self.root = Rng(cfg.seed)
        self.checkpoints = checkpoints or CheckpointManager(None)
        self.artifacts = RunArtifacts(algorithm, cfg)
        self._started = time.perf_counter()
        self.best: Optional[float] = None
        self.stale = 0

    def evaluate(
        self,
        sampler,
        round_index: int,
        epoch: int,
        disc_loss: Optional[float] = None,
        disc_acc: Optional[float] = None,
    ) -> EvalReport:
        report = self.task.evaluator.evaluate(sampler, self.root.child(f"eval/{epoch}"))
        record = MetricRecord(
            self.artifacts.algorithm,
            round_index,
            epoch,
            disc_loss=disc_loss,
            disc_acc=disc_acc,
            wallclock_s=time.perf_counter() - self._started,
            seed=self.cfg.seed,
        )
        self.task.evaluator.fill(record, report)
        self.artifacts.add(record)
        self.artifacts.final_report = report
        logger.info(
            "%s round %d epoch %d: %s %.4f",
            self.artifacts.algorithm, round_index, epoch, self.task.evaluator.metric, report.mean,
        )
        if self.task.evaluator.improved(report.mean, self.best):
            self.best = report.mean
            self.stale = 0
        else:
            self.stale += 1
        return report

    def checkpoint(self, epoch: int, generator: GeneratorModel, discriminator: Optional[DiscriminatorModel] = None):
        self.artifacts.checkpoints.extend(self.checkpoints.save(epoch, generator, discriminator))

    def should_stop(self) -> bool:
        patience = self.cfg.early_stop_patience
        if patience and self.stale >= patience:
            logger.warning(
                "%s: no improvement in %s for %d evaluations, stopping early",
                self.artifacts.algorithm, self.task.evaluator.metric, patience,
            )
            return True
        return False

    def finish(self, generator=None, discriminator=None) -> RunArtifacts:
        self.artifacts.checkpoints = self.checkpoints.paths
        self.artifacts.generator = generator
        self.artifacts.discriminator = discriminator
        return self.artifacts


def _plateaued(losses: List[float], window: int, tolerance: float) -> bool:
    if len(losses) <= window:
        return False
    before, now = losses[-window - 1], losses[-1]
    return (before - now) / max(abs(before), 1e-12) < tolerance


def _pretrain_generator(run: _Run) -> Tuple[GeneratorModel, int]:
    """
    MLE pretraining on the positives, shared by every trained algorithm.

    Stops after ``pretrain_gen_epochs`` or once the training NLL plateaus.
    Returns the generator and the number of epochs run.
    """
    cfg = run.cfg
    gen = GeneratorModel.init_random(run.task.dims, run.root.child("generator-init"), dtype=cfg.dtype)
    losses: List[float] = []
    epoch = 0
    for epoch in range(1, cfg.pretrain_gen_epochs + 1):
        with divergence_guard(run.checkpoints):
            loss = mle_train_epoch(
                gen, run.task.positives, cfg.pretrain_optimizer, cfg.gen_batch_size,
                run.root.child(f"mle/{epoch}"),
            )
        losses.append(loss)
        logger.debug("pretrain epoch %d: training NLL %.5f", epoch, loss)
        stop = _plateaued(losses, cfg.plateau_window, cfg.plateau_tolerance)
        if stop:
            logger.warning("Generator pretraining plateaued after %d epochs", epoch)
        if stop or epoch % cfg.eval_every == 0 or epoch == cfg.pretrain_gen_epochs:
            run.evaluate(gen, 0, epoch)
            run.checkpoint(epoch, gen)
        if stop:
            break
    if epoch == 0:
        run.evaluate(gen, 0, 0)
    return gen, epoch


def _mle_continuation(run: _Run, gen: GeneratorModel, first_epoch: int, omega_for: Callable[[int], float]) -> None:
    """Keep training by (curriculum) likelihood for ``total_adversarial_rounds`` more epochs."""
    cfg = run.cfg
    rounds = cfg.total_adversarial_rounds
    run.stale = 0
    for round_index in range(1, rounds + 1):
        epoch = first_epoch + round_index
        omega = omega_for(round_index)
        with divergence_guard(run.checkpoints):
            scheduled_sampling_epoch(
                gen, run.task.positives, cfg.pretrain_optimizer, omega,
                run.root.child(f"mle/{epoch}"), batch=cfg.gen_batch_size,
            )
        if round_index % cfg.eval_every == 0 or round_index == rounds:
            run.evaluate(gen, round_index, epoch)
            run.checkpoint(epoch, gen)
            if run.should_stop():
                break


def run_mle(cfg: TrainingConfig, task: Task, checkpoints: Optional[CheckpointManager] = None) -> RunArtifacts:
    """Pretrain by MLE, then continue MLE for ``total_adversarial_rounds`` epochs."""
    run = _Run("mle", cfg, task, checkpoints)
    gen, epochs = _pretrain_generator(run)
    _mle_continuation(run, gen, epochs, lambda _: 1.0)
    return run.finish(gen)


def run_scheduled_sampling(cfg: TrainingConfig, task: Task, checkpoints: Optional[CheckpointManager] = None) -> RunArtifacts:
    """
    Pretrain by MLE, then continue with scheduled sampling.

    Continuation epoch j feeds true tokens with probability
    curriculum_rate(j - 1, ss_decay); with ss_decay = 0 the run equals run_mle.
    """
    run = _Run("ss", cfg, task, checkpoints)
    gen, epochs = _pretrain_generator(run)
    _mle_continuation(run, gen, epochs, lambda j: curriculum_rate(j - 1, cfg.ss_decay))
    return run.finish(gen)


def run_random_baseline(cfg: TrainingConfig, task: Task, checkpoints: Optional[CheckpointManager] = None) -> RunArtifacts:
    """Evaluate the uniform-token sampler; nothing is trained."""
    run = _Run("random", cfg, task, checkpoints)
    run.evaluate(UniformSampler(task.dims), 0, 0)
    return run.finish()


def make_negative_sets(gen: GeneratorModel, positive_count: int, d_steps: int, rng: Rng) -> List[np.ndarray]:
    """``d_steps`` fresh negative sets of ``positive_count`` generator samples each."""
    if positive_count < 1:
        raise ValueError(f"positive_count must be positive, got {positive_count}")
    if d_steps < 1:
        raise ValueError(f"d_steps must be at least 1, got {d_steps}")
    return [gen.sample(positive_count, rng.child(f"negatives/{step}")) for step in range(d_steps)]


def discriminator_positives(task: Task) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split real data into discriminator training positives and the held-out
    positives of the loss-sanity batch.

    Tasks without a holdout give up their leading rows (at most SANITY_BATCH,
    at most a quarter of the training set) and the discriminator trains on
    the rest.
    """
    if task.holdout is not None:
        return task.positives, task.holdout[:SANITY_BATCH]
    held = min(SANITY_BATCH, task.positives.shape[0] // 4)
    if held == 0:
        raise DataError("At least 4 training sequences are needed to hold out a discriminator sanity batch")
    return task.positives[held:], task.positives[:held]


def _sanity_batch(run: _Run, gen: GeneratorModel, held_out: np.ndarray) -> LabeledBatch:
    """Fixed balanced batch for the loss-sanity monitor."""
    negatives = gen.sample(held_out.shape[0], run.root.child("sanity"))
    return balanced_batch(held_out, negatives)


def _policy_gradient_rounds(
    run: _Run,
    gen: GeneratorModel,
    first_epoch: int,
    reward: Union[DiscriminatorModel, RewardFn],
    disc: Optional[DiscriminatorModel] = None,
    positives: Optional[np.ndarray] = None,
    sanity: Optional[LabeledBatch] = None,
) -> None:
    """
    The adversarial loop. Every round runs g_steps policy-gradient updates
    against a roll-out policy frozen at the round start, then (with a
    discriminator) d_steps x k epochs of discriminator training on fresh
    negatives, then copies the generator into the roll-out policy.

    A round passes the sanity check when no d-step raised the loss on the
    held-out ``sanity`` batch; a warning is logged when fewer than
    SANITY_RATIO of the rounds pass.
    """
    cfg = run.cfg
    rollout = RolloutPolicy.from_generator(gen)
    rounds = cfg.total_adversarial_rounds
    sane = 0
    completed = 0
    run.stale = 0
    for round_index in range(1, rounds + 1):
        epoch = first_epoch + round_index
        round_rng = run.root.child(f"round/{round_index}")
        with divergence_guard(run.checkpoints):
            for g in range(cfg.g_steps):
                policy_gradient_step(
                    gen, rollout, reward, cfg.gen_batch_size, cfg.rollout_num,
                    cfg.adversarial_optimizer, round_rng.child(f"g/{g}"), baseline=cfg.baseline,
                )

            disc_loss = disc_acc = None
            if disc is not None:
                negative_sets = make_negative_sets(gen, positives.shape[0], cfg.d_steps, round_rng.child("d"))
                round_sane = True
                for d, negatives in enumerate(negative_sets):
                    before = cross_entropy(disc, sanity)
                    disc_loss = train_epochs(
                        disc, positives, negatives, cfg.k, cfg.disc_optimizer,
                        round_rng.child(f"d/{d}"), batch_size=cfg.disc_batch_size,
                    )
                    after = cross_entropy(disc, sanity)
                    if after > before:
                        logger.debug("round %d d-step %d: sanity loss rose %.5f -> %.5f", round_index, d, before, after)
                        round_sane = False
                sane += round_sane
                is_real = sanity.labels == 1
                disc_acc = accuracy(disc, sanity.sequences[is_real], sanity.sequences[~is_real])
        sync_rollout(rollout, gen)
        completed = round_index

        if round_index % cfg.eval_every == 0 or round_index == rounds:
            run.evaluate(gen, round_index, epoch, disc_loss, disc_acc)
            run.checkpoint(epoch, gen, disc)
            if run.should_stop():
                break

    if disc is not None and completed and sane / completed < SANITY_RATIO:
        logger.warning(
            "Discriminator loss did not decrease on the sanity batch in %d of %d rounds",
            completed - sane, completed,
        )


def _pretrain_discriminator(run: _Run, gen: GeneratorModel, positives: np.ndarray) -> DiscriminatorModel:
    cfg = run.cfg
    config = DiscriminatorConfig(
        run.task.dims.vocab_size, run.task.dims.seq_len, cfg.disc_embedding_dim, cfg.kernels, cfg.dropout_keep,
    )
    disc = DiscriminatorModel.init_random(config, run.root.child("discriminator-init"), dtype=cfg.dtype)
    for step in range(1, cfg.pretrain_disc_steps + 1):
        step_rng = run.root.child(f"pretrain-d/{step}")
        negatives = gen.sample(positives.shape[0], step_rng.child("negatives"))
        with divergence_guard(run.checkpoints):
            loss = train_epochs(
                disc, positives, negatives, cfg.pretrain_disc_epochs, cfg.disc_optimizer,
                step_rng, batch_size=cfg.disc_batch_size,
            )
        logger.info("discriminator pretraining step %d/%d: loss %.5f", step, cfg.pretrain_disc_steps, loss)
    return disc


def run_seqgan(cfg: TrainingConfig, task: Task, checkpoints: Optional[CheckpointManager] = None) -> RunArtifacts:
    """
    Full adversarial training.

    Pretrains the generator by MLE, pretrains the discriminator on fresh
    generator samples, then alternates policy-gradient generator updates
    (discriminator probability as reward, Monte Carlo rollouts for
    intermediate tokens) with discriminator retraining.

    Args:
        cfg: Training configuration
        task: Positives and evaluator
        checkpoints: Where to write checkpoints (none written if omitted)

    Returns:
        Metric log, final evaluation, trained models and checkpoint paths

    Raises:
        DivergenceError: If a parameter becomes non-finite; carries the last good checkpoint.
    """
    run = _Run("seqgan", cfg, task, checkpoints)
    gen, epochs = _pretrain_generator(run)
    positives, held_out = discriminator_positives(task)
    disc = _pretrain_discriminator(run, gen, positives)
    sanity = _sanity_batch(run, gen, held_out)
    _policy_gradient_rounds(run, gen, epochs, disc, disc, positives, sanity)
    return run.finish(gen, disc)


def run_pg_bleu(cfg: TrainingConfig, task: Task, checkpoints: Optional[CheckpointManager] = None) -> RunArtifacts:
    """The adversarial loop with BLEU-n against the training references as reward; no discriminator."""
    run = _Run("pg_bleu", cfg, task, checkpoints)
    gen, epochs = _pretrain_generator(run)
    _policy_gradient_rounds(run, gen, epochs, BleuScorer(task.references, cfg.pg_bleu_n))
    return run.finish(gen)


TRAINERS: Dict[str, Callable[..., RunArtifacts]] = {
    "random": run_random_baseline,
    "mle": run_mle,
    "ss": run_scheduled_sampling,
    "pg_bleu": run_pg_bleu,
    "seqgan": run_seqgan,
}


def run_algorithm(
    algorithm: str,
    cfg: TrainingConfig,
    task: Task,
    checkpoint_dir: Optional[Union[str, Path]] = None,
    keep: int = 3,
) -> RunArtifacts:
    if algorithm not in TRAINERS:
        raise ValueError(f"Unknown algorithm '{algorithm}'. Expected one of {list(ALGORITHMS)}.")
    checkpoints = CheckpointManager(checkpoint_dir, keep) if checkpoint_dir is not None else None
    return TRAINERS[algorithm](cfg, task, checkpoints)


def _relabel(artifacts: RunArtifacts, label: str) -> RunArtifacts:
    artifacts.algorithm = label
    for record in artifacts.records:
        record.algorithm = label
    return artifacts


def pretrain_ablation(cfg: TrainingConfig, task: Task, pretrain_epochs_list: SequenceType[int]) -> List[RunArtifacts]:
    """One SeqGAN run per generator pretraining budget, sharing the task and seed."""
    if not pretrain_epochs_list:
        raise ValueError("pretrain_epochs_list must not be empty")
    runs = []
    for epochs in pretrain_epochs_list:
        artifacts = run_seqgan(replace(cfg, pretrain_gen_epochs=epochs), task)
        runs.append(_relabel(artifacts, f"seqgan-pretrain{epochs}"))
    return runs


def strategy_ablation(
    cfg: TrainingConfig,
    task: Task,
    strategies: SequenceType[Tuple[int, int, int]] = STRATEGIES,
) -> List[RunArtifacts]:
    """One SeqGAN run per (g_steps, d_steps, k)."""
    runs = []
    for g_steps, d_steps, k in strategies:
        artifacts = run_seqgan(replace(cfg, g_steps=g_steps, d_steps=d_steps, k=k), task)
        runs.append(_relabel(artifacts, f"seqgan-g{g_steps}-d{d_steps}-k{k}"))
    return runs


def degradation_from_minimum(records: SequenceType[MetricRecord]) -> float:
    """Relative rise of the final NLL_oracle above the best value of the run."""
    curve = [r.nll_oracle_mean for r in records if r.nll_oracle_mean is not None]
    if not curve:
        raise ValueError("No NLL_oracle values in the metric log")
    best = min(curve)
    return (curve[-1] - best) / abs(best)
