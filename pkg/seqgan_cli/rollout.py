"""Monte Carlo search with a roll-out policy, action-value estimation and the REINFORCE generator update."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from seqgan_cli.discriminator import DiscriminatorModel, predict_proba
from seqgan_cli.errors import DimensionError
from seqgan_cli.generator import (
    START_TOKEN,
    GeneratorDims,
    GeneratorModel,
    Sequence,
    TokenData,
    as_token_matrix,
    cell_forward,
    nll_gradient,
    sample_batch,
)
from seqgan_cli.numerics import GradientSnapshot, OptimizerConfig, Rng, optimizer_step


logger = logging.getLogger(__name__)

# Maps an (M, T) token matrix to M rewards in [0, 1].
RewardFn = Callable[[np.ndarray], np.ndarray]

BASELINES = ("none", "mean")


@dataclass
class RolloutPolicy:
    """Snapshot G_beta of the generator used to complete partial sequences."""

    model: GeneratorModel

    @classmethod
    def from_generator(cls, gen: GeneratorModel) -> "RolloutPolicy":
        return cls(gen.copy())

    @property
    def dims(self) -> GeneratorDims:
        return self.model.dims


@dataclass
class QEstimate:
    """Per-timestep action values q_1..q_T and the rollout count used for t < T."""

    values: np.ndarray
    rollout_num: int


def sync_rollout(rollout: RolloutPolicy, gen: GeneratorModel) -> None:
    """Copy theta into beta; later generator updates leave beta untouched."""
    if rollout.dims != gen.dims:
        raise DimensionError("Roll-out policy and generator have different dimensions")
    rollout.model.params.load_values(gen.params)


def discriminator_reward(disc: DiscriminatorModel) -> RewardFn:
    """Dropout-off discriminator probabilities as terminal rewards."""

    def reward(tokens: np.ndarray) -> np.ndarray:
        return predict_proba(disc, tokens)

    return reward


def as_reward_fn(reward: Union[DiscriminatorModel, RewardFn]) -> RewardFn:
    if isinstance(reward, DiscriminatorModel):
        return discriminator_reward(reward)
    return reward


def _complete(
    model: GeneratorModel,
    h: np.ndarray,
    s: np.ndarray,
    completions: np.ndarray,
    t: int,
    rng: Rng,
) -> np.ndarray:
    """Fill ``completions[:, t:]`` by sampling from the state reached after consuming y_1..y_{t-1}."""
    last = completions[:, t - 1]
    for u in range(t, model.dims.seq_len):
        h, s, probs, _ = cell_forward(model.params, h, s, last)
        last = rng.categorical(probs) + 1
        completions[:, u] = last
    return completions


def mc_search(prefix: Sequence, policy: RolloutPolicy, N: int, rng: Rng) -> np.ndarray:
    """
    Complete ``prefix`` N times by sampling the remaining tokens from the roll-out policy.

    Args:
        prefix: Tokens y_1..y_t with 1 <= t <= T
        policy: Roll-out policy G_beta
        N: Number of completions
        rng: Sampling stream

    Returns:
        (N, T) matrix whose rows all start with ``prefix``

    Raises:
        ValueError: If the prefix is empty or longer than T, or N < 1.
    """
    prefix = np.asarray(prefix, dtype=np.int64).ravel()
    horizon = policy.dims.seq_len
    if not 1 <= prefix.size <= horizon:
        raise ValueError(f"Prefix length must lie in [1, {horizon}], got {prefix.size}")
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    policy.dims.vocab.check_tokens(prefix)

    params = policy.model.params
    h = np.zeros((1, policy.dims.hidden_dim), dtype=params.dtype)
    s = np.zeros_like(h)
    inputs = np.concatenate([[START_TOKEN], prefix[:-1]])
    for token in inputs:
        h, s, _, _ = cell_forward(params, h, s, np.array([token]))

    completions = np.zeros((N, horizon), dtype=np.int64)
    completions[:, :prefix.size] = prefix
    return _complete(policy.model, np.repeat(h, N, axis=0), np.repeat(s, N, axis=0), completions, prefix.size, rng)


def estimate_q_batch(
    tokens: TokenData,
    rollout: RolloutPolicy,
    reward_fn: RewardFn,
    N: int,
    rng: Rng,
) -> np.ndarray:
    """
    Action values for every (episode, t) of a batch.

    The roll-out policy is replayed once over each episode; the state after
    each prefix is cloned across the N completions. Step t draws from the
    child stream ``t{t}``.

    Returns:
        (B, T) matrix with q[:, t-1] the mean reward of the N completions of Y_{1:t}
        and q[:, T-1] the reward of the full sequence
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    tokens = as_token_matrix(tokens, rollout.dims)
    batch, horizon = tokens.shape
    params = rollout.model.params
    q = np.empty((batch, horizon), dtype=np.float64)

    h = np.zeros((batch, rollout.dims.hidden_dim), dtype=params.dtype)
    s = np.zeros_like(h)
    inputs = np.full(batch, START_TOKEN, dtype=np.int64)
    for t in range(1, horizon):
        # state after consuming the inputs start, y_1..y_{t-1}
        h, s, _, _ = cell_forward(params, h, s, inputs)
        inputs = tokens[:, t - 1]
        completions = np.zeros((batch * N, horizon), dtype=np.int64)
        completions[:, :t] = np.repeat(tokens[:, :t], N, axis=0)
        _complete(rollout.model, np.repeat(h, N, axis=0), np.repeat(s, N, axis=0), completions, t, rng.child(f"t{t}"))
        q[:, t - 1] = np.asarray(reward_fn(completions)).reshape(batch, N).mean(axis=1)
    q[:, horizon - 1] = reward_fn(tokens)
    return q


def estimate_q(
    seq: Sequence,
    gen: GeneratorModel,
    rollout: RolloutPolicy,
    disc: DiscriminatorModel,
    N: int,
    rng: Rng,
) -> QEstimate:
    """
    Monte Carlo action values of one complete sequence, with the discriminator as reward.

    Raises:
        ValueError: If N < 1.
        DimensionError: If generator and roll-out policy disagree on dimensions.
    """
    if gen.dims != rollout.dims:
        raise DimensionError("Roll-out policy and generator have different dimensions")
    values = estimate_q_batch(as_token_matrix(seq, gen.dims), rollout, discriminator_reward(disc), N, rng)[0]
    return QEstimate(values, N)


def episode_gradients(gen: GeneratorModel, tokens: TokenData, q: np.ndarray) -> GradientSnapshot:
    """Ascent direction (1/B) sum_b sum_t q[b, t] grad log G(y_t | Y_{1:t-1})."""
    tokens = as_token_matrix(tokens, gen.dims)
    _, grads = nll_gradient(gen, tokens, weights=np.asarray(q, dtype=np.float64) / tokens.shape[0])
    return {name: -g for name, g in grads.items()}


def policy_gradient_step(
    gen: GeneratorModel,
    rollout: RolloutPolicy,
    reward: Union[DiscriminatorModel, RewardFn],
    batch_size: int,
    N: int,
    opt: OptimizerConfig,
    rng: Rng,
    baseline: str = "none",
) -> float:
    """
    One REINFORCE update of the generator.

    Samples ``batch_size`` episodes from G_theta, estimates their action values
    with the roll-out policy, and applies one optimizer step along
    sum_t q_t grad log G(y_t | Y_{1:t-1}) averaged over episodes.

    Args:
        gen: Generator G_theta (updated in place)
        rollout: Roll-out policy G_beta
        reward: Discriminator or any reward function over token matrices
        batch_size: Episodes per update
        N: Monte Carlo completions per (episode, t)
        opt: Optimizer configuration
        rng: Stream for episodes and completions
        baseline: "none", or "mean" to subtract the batch-mean q

    Returns:
        Mean q over episodes and timesteps
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    if baseline not in BASELINES:
        raise ValueError(f"Unknown baseline '{baseline}'. Expected one of {list(BASELINES)}.")

    tokens, _ = sample_batch(gen, batch_size, rng.child("episodes"))
    q = estimate_q_batch(tokens, rollout, as_reward_fn(reward), N, rng.child("rollout"))
    advantage = q - q.mean() if baseline == "mean" else q

    # descend on -sum q log G
    _, grads = nll_gradient(gen, tokens, weights=advantage / batch_size)
    gen.params.accumulate(grads)
    optimizer_step(gen.params, opt)
    gen.params.check_finite()

    mean_q = float(q.mean())
    logger.debug("policy gradient step: mean q %.5f", mean_q)
    return mean_q
