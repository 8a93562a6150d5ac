"""Exact quantities on instances small enough to enumerate every sequence."""

import itertools
from typing import Optional

import numpy as np

from seqgan_cli.generator import GeneratorModel, log_likelihood_batch, nll_gradient
from seqgan_cli.numerics import GradientSnapshot
from seqgan_cli.rollout import RewardFn


MAX_ENUMERATION = 100_000


def enumerate_sequences(vocab_size: int, seq_len: int) -> np.ndarray:
    """
    Every sequence over tokens 1..vocab_size in lexicographic order.

    Rows sharing their first t tokens form contiguous blocks of vocab_size**(T-t) rows.

    Raises:
        ValueError: If there are more than MAX_ENUMERATION sequences.
    """
    count = vocab_size**seq_len
    if count > MAX_ENUMERATION:
        raise ValueError(f"{count} sequences is too many to enumerate (limit {MAX_ENUMERATION})")
    return np.array(list(itertools.product(range(1, vocab_size + 1), repeat=seq_len)), dtype=np.int64)


def sequence_probabilities(model: GeneratorModel, tokens: Optional[np.ndarray] = None) -> np.ndarray:
    if tokens is None:
        tokens = enumerate_sequences(model.dims.vocab_size, model.dims.seq_len)
    return np.exp(log_likelihood_batch(model, tokens))


def exact_q_values(model: GeneratorModel, reward_fn: RewardFn) -> np.ndarray:
    """
    Exact action values Q(Y_{1:t}) = E[reward | Y_{1:t}] under ``model`` for every enumerated sequence.

    Returns:
        (|Y|**T, T) matrix aligned with enumerate_sequences
    """
    vocab_size, horizon = model.dims.vocab_size, model.dims.seq_len
    tokens = enumerate_sequences(vocab_size, horizon)
    probs = sequence_probabilities(model, tokens)
    rewards = np.asarray(reward_fn(tokens), dtype=np.float64)
    q = np.empty((tokens.shape[0], horizon))
    for t in range(1, horizon + 1):
        block = vocab_size ** (horizon - t)
        weight = probs.reshape(-1, block)
        value = (weight * rewards.reshape(-1, block)).sum(axis=1) / weight.sum(axis=1)
        q[:, t - 1] = np.repeat(value, block)
    return q


def exact_objective(model: GeneratorModel, reward_fn: RewardFn) -> float:
    """J(theta) = sum_Y P_theta(Y) * reward(Y)."""
    tokens = enumerate_sequences(model.dims.vocab_size, model.dims.seq_len)
    return float(np.sum(sequence_probabilities(model, tokens) * reward_fn(tokens)))


def exact_policy_gradient(
    model: GeneratorModel,
    reward_fn: RewardFn,
    rollout_model: Optional[GeneratorModel] = None,
) -> GradientSnapshot:
    """
    Closed-form policy gradient by exact summation.

    sum_Y P_theta(Y) sum_t Q(Y_{1:t}) grad log G_theta(y_t | Y_{1:t-1}), with Q computed
    exactly under ``rollout_model`` (default: the model itself, which gives grad J).
    """
    tokens = enumerate_sequences(model.dims.vocab_size, model.dims.seq_len)
    probs = sequence_probabilities(model, tokens)
    q = exact_q_values(rollout_model if rollout_model is not None else model, reward_fn)
    _, grads = nll_gradient(model, tokens, weights=probs[:, None] * q)
    return {name: -g for name, g in grads.items()}


def exact_expected_nll(generator: GeneratorModel, oracle: GeneratorModel) -> float:
    """E_{Y ~ generator}[-log P_oracle(Y)] by enumeration."""
    tokens = enumerate_sequences(generator.dims.vocab_size, generator.dims.seq_len)
    probs = sequence_probabilities(generator, tokens)
    return float(np.sum(probs * -log_likelihood_batch(oracle, tokens)))
