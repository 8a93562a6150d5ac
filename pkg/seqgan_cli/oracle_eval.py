"""Synthetic ground truth and evaluation: the oracle LSTM, NLL_oracle and Welch's T-test."""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence as SequenceType, Tuple, Union

import numpy as np
from scipy.special import betainc

from seqgan_cli.generator import (
    DEFAULT_DTYPE,
    GeneratorDims,
    GeneratorModel,
    TokenData,
    _parameter_shapes,
    log_likelihood_batch,
)
from seqgan_cli.numerics import ParameterStore, Rng


logger = logging.getLogger(__name__)


@dataclass
class OracleModel:
    """A generator with frozen N(0, 1) parameters standing in for the real data distribution."""

    model: GeneratorModel
    seed: Optional[int] = None

    @property
    def dims(self) -> GeneratorDims:
        return self.model.dims

    def sample(self, count: int, rng: Rng) -> np.ndarray:
        return self.model.sample(count, rng)


def make_oracle(seed: int, dims: GeneratorDims, dtype=DEFAULT_DTYPE) -> OracleModel:
    """Draw every oracle parameter i.i.d. from N(0, 1) on the ``oracle-init`` stream and freeze it."""
    rng = Rng(seed).child("oracle-init")
    store = ParameterStore(dtype)
    for name, shape in _parameter_shapes(dims):
        store.add(name, rng.normal(shape))
    store.freeze()
    return OracleModel(GeneratorModel(dims, store), seed)


def generate_training_set(oracle: OracleModel, count: int, rng: Rng) -> np.ndarray:
    """``count`` i.i.d. sequences from the oracle."""
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    return oracle.sample(count, rng)


def welch_statistic(a: SequenceType[float], b: SequenceType[float]) -> Tuple[float, float]:
    """
    Welch's t statistic and Welch-Satterthwaite degrees of freedom.

    Two constant samples give t = 0 when their values agree and an infinite
    t otherwise, with the pooled n_a + n_b - 2 degrees of freedom.

    Raises:
        ValueError: If either sample has fewer than 2 values.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("Each sample needs at least two values")
    var_a = a.var(ddof=1) / a.size
    var_b = b.var(ddof=1) / b.size
    se2 = var_a + var_b
    if se2 <= 0:
        diff = float(a.mean() - b.mean())
        t = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return t, float(a.size + b.size - 2)
    t = (a.mean() - b.mean()) / np.sqrt(se2)
    dof = se2**2 / (var_a**2 / (a.size - 1) + var_b**2 / (b.size - 1))
    return float(t), float(dof)


def welch_t_test(a: SequenceType[float], b: SequenceType[float]) -> float:
    """Two-sided p-value of Welch's unequal-variance t-test."""
    t, dof = welch_statistic(a, b)
    return float(betainc(dof / 2.0, 0.5, dof / (dof + t * t)))


@dataclass
class EvalReport:
    """Per-sample scores (NLL_oracle or BLEU) with an optional p-value against another report."""

    scores: np.ndarray
    p_value: Optional[float] = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64).ravel()
        if self.scores.size < 1:
            raise ValueError("An evaluation report needs at least one sample")

    @property
    def count(self) -> int:
        return int(self.scores.size)

    @property
    def mean(self) -> float:
        return float(self.scores.mean())

    @property
    def std(self) -> float:
        return float(self.scores.std(ddof=1)) if self.count > 1 else 0.0

    def compare(self, other: "EvalReport") -> "EvalReport":
        return EvalReport(self.scores, welch_t_test(self.scores, other.scores))

    def write_csv(self, path: Union[str, Path]) -> Path:
        """One row per sample, then a summary row."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["sample", "score", "mean", "std", "count", "p_value"])
            for index, score in enumerate(self.scores):
                writer.writerow([index, repr(float(score)), "", "", "", ""])
            p_value = "" if self.p_value is None else repr(self.p_value)
            writer.writerow(["summary", "", repr(self.mean), repr(self.std), self.count, p_value])
        return path


def score_sequences(oracle: OracleModel, tokens: TokenData) -> EvalReport:
    """-sum_t log G_oracle(y_t | Y_{1:t-1}) for each given sequence."""
    return EvalReport(-log_likelihood_batch(oracle.model, tokens))


def nll_oracle(oracle: OracleModel, generator, sample_count: int, rng: Rng) -> EvalReport:
    """
    Sample ``sample_count`` sequences from ``generator`` and score them under the oracle.

    Args:
        oracle: Ground-truth model
        generator: Anything with ``sample(count, rng)`` returning a token matrix
        sample_count: Number of sequences to draw
        rng: Sampling stream
    """
    if sample_count < 1:
        raise ValueError(f"sample_count must be positive, got {sample_count}")
    return score_sequences(oracle, generator.sample(sample_count, rng))
