"""Tests for Monte Carlo search, action values and the policy-gradient update."""

import math

import numpy as np
import pytest

from seqgan_cli.discriminator import DiscriminatorConfig, DiscriminatorModel, predict_proba
from seqgan_cli.enumeration import (
    enumerate_sequences,
    exact_objective,
    exact_policy_gradient,
    exact_q_values,
    sequence_probabilities,
)
from seqgan_cli.errors import DimensionError
from seqgan_cli.generator import GeneratorDims, GeneratorModel, sample_batch
from seqgan_cli.numerics import OptimizerConfig, Rng, finite_diff_grad
from seqgan_cli.rollout import (
    RolloutPolicy,
    discriminator_reward,
    episode_gradients,
    estimate_q,
    estimate_q_batch,
    mc_search,
    policy_gradient_step,
    sync_rollout,
)


def _binary_setup():
    """|Y| = 2, T = 3 generator and discriminator."""
    gen = GeneratorModel.init_random(GeneratorDims(2, 3, 3, 3), Rng(21), scale=0.5)
    disc = DiscriminatorModel.init_random(
        DiscriminatorConfig(2, 3, 3, kernels=((1, 2), (2, 2)), dropout_keep=1.0), Rng(22), scale=0.8,
    )
    return gen, disc


ENUMERABLE = [(3, 2), (2, 4)]


def _enumerable_setup(vocab_size, seq_len):
    gen = GeneratorModel.init_random(GeneratorDims(vocab_size, seq_len, 4, 5), Rng(7), scale=0.5)
    kernels = ((1, 3), (2, 2)) if seq_len == 2 else ((1, 2), (3, 2))
    disc = DiscriminatorModel.init_random(
        DiscriminatorConfig(vocab_size, seq_len, 4, kernels=kernels, dropout_keep=1.0), Rng(11), scale=0.5,
    )
    return gen, disc


def _index(seq, vocab_size):
    """Row of ``seq`` in enumerate_sequences."""
    index = 0
    for token in seq:
        index = index * vocab_size + (token - 1)
    return index


def _chunked_mean_and_se(chunks):
    """Per-component mean and standard error over equally sized chunk means."""
    stacked = {name: np.stack([chunk[name] for chunk in chunks]) for name in chunks[0]}
    mean = {name: values.mean(axis=0) for name, values in stacked.items()}
    se = {name: values.std(axis=0, ddof=1) / math.sqrt(len(chunks)) for name, values in stacked.items()}
    return mean, se


class TestMcSearch:
    """Tests for mc_search."""

    def test_full_prefix(self, tiny_generator):
        out = mc_search(np.array([2, 3]), RolloutPolicy.from_generator(tiny_generator), 5, Rng(0))
        assert out.tolist() == [[2, 3]] * 5

    def test_prefix_is_kept(self):
        gen, _ = _binary_setup()
        out = mc_search(np.array([2]), RolloutPolicy.from_generator(gen), 50, Rng(0))
        assert out.shape == (50, 3)
        assert np.all(out[:, 0] == 2)

    def test_delta_policy(self):
        model = GeneratorModel.zeros(GeneratorDims(3, 4, 2, 2))
        model.params["c"][2] = 1000.0
        out = mc_search(np.array([1]), RolloutPolicy(model), 20, Rng(1))
        assert np.all(out == out[0])
        assert out[0].tolist() == [1, 3, 3, 3]

    def test_uniform_suffix_frequencies(self):
        policy = RolloutPolicy(GeneratorModel.zeros(GeneratorDims(2, 3, 2, 2)))
        n = 10_000
        out = mc_search(np.array([1]), policy, n, Rng(2))
        codes = (out[:, 1] - 1) * 2 + (out[:, 2] - 1)
        counts = np.bincount(codes, minlength=4)
        sigma = math.sqrt(n * 0.25 * 0.75)
        assert np.all(np.abs(counts - n / 4) < 4 * sigma)

    @pytest.mark.parametrize("prefix,N", [([], 3), ([1, 2, 3], 3), ([1], 0)])
    def test_invalid(self, tiny_generator, prefix, N):
        with pytest.raises(ValueError):
            mc_search(np.array(prefix, dtype=np.int64), RolloutPolicy.from_generator(tiny_generator), N, Rng(0))


class TestEstimateQ:
    """Tests for action-value estimation."""

    def test_last_step_is_the_reward(self):
        gen, disc = _binary_setup()
        seq = np.array([2, 1, 2])
        q = estimate_q(seq, gen, RolloutPolicy.from_generator(gen), disc, 8, Rng(0))
        assert q.values[-1] == predict_proba(disc, seq)[0]
        assert q.rollout_num == 8
        assert np.all((q.values >= 0) & (q.values <= 1))

    def test_constant_reward(self, tiny_generator):
        tokens = np.array([[1, 2], [3, 3]])
        q = estimate_q_batch(tokens, RolloutPolicy.from_generator(tiny_generator), lambda t: np.full(len(t), 0.3), 4, Rng(0))
        assert np.allclose(q, 0.3)

    def test_deterministic(self):
        gen, disc = _binary_setup()
        rollout = RolloutPolicy.from_generator(gen)
        tokens = gen.sample(10, Rng(1))
        a = estimate_q_batch(tokens, rollout, discriminator_reward(disc), 4, Rng(2))
        b = estimate_q_batch(tokens, rollout, discriminator_reward(disc), 4, Rng(2))
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("t", [1, 2])
    def test_converges_to_enumerated_value(self, t):
        gen, disc = _binary_setup()
        rollout = RolloutPolicy.from_generator(gen)
        reward = discriminator_reward(disc)
        seq = np.array([2, 1, 1])
        n = 100_000

        q = estimate_q_batch(seq[None, :], rollout, reward, n, Rng(3))[0, t - 1]
        exact = exact_q_values(rollout.model, reward)[_index(seq, 2), t - 1]
        spread = reward(mc_search(seq[:t], rollout, n, Rng(4))).std(ddof=1)
        assert abs(q - exact) < 3 * spread / math.sqrt(n)

    def test_variance_scales_inversely_with_rollouts(self):
        gen, disc = _binary_setup()
        rollout = RolloutPolicy.from_generator(gen)
        replicates = np.tile([2, 1, 1], (400, 1))
        reward = discriminator_reward(disc)
        var16 = estimate_q_batch(replicates, rollout, reward, 16, Rng(5))[:, 0].var(ddof=1)
        var64 = estimate_q_batch(replicates, rollout, reward, 64, Rng(6))[:, 0].var(ddof=1)
        assert 2.0 < var16 / var64 < 8.0

    def test_monotone_reward_coupling(self):
        gen, disc = _binary_setup()
        rollout = RolloutPolicy.from_generator(gen)
        tokens = gen.sample(20, Rng(7))
        reward = discriminator_reward(disc)
        low = estimate_q_batch(tokens, rollout, reward, 8, Rng(8))
        high = estimate_q_batch(tokens, rollout, lambda t: np.minimum(1.0, reward(t) + 0.1), 8, Rng(8))
        assert np.all(high >= low)

    def test_rollout_count_must_be_positive(self, tiny_generator):
        with pytest.raises(ValueError):
            estimate_q_batch(np.array([[1, 2]]), RolloutPolicy.from_generator(tiny_generator), lambda t: t[:, 0] * 0.0, 0, Rng(0))

    def test_dimension_mismatch(self, tiny_generator, tiny_discriminator):
        other = RolloutPolicy(GeneratorModel.zeros(GeneratorDims(3, 2, 4, 6)))
        with pytest.raises(DimensionError):
            estimate_q(np.array([1, 2]), tiny_generator, other, tiny_discriminator, 2, Rng(0))


class TestSyncRollout:
    """Tests for the roll-out snapshot."""

    def test_identical_samples_after_sync(self, tiny_generator):
        rollout = RolloutPolicy(GeneratorModel.zeros(tiny_generator.dims))
        sync_rollout(rollout, tiny_generator)
        assert np.array_equal(rollout.model.sample(50, Rng(1)), tiny_generator.sample(50, Rng(1)))

    def test_snapshot_semantics(self, tiny_generator):
        rollout = RolloutPolicy.from_generator(tiny_generator)
        before = rollout.model.params.value_snapshot()
        tiny_generator.params["V"][...] += 1.0
        for name, value in before.items():
            assert np.array_equal(rollout.model.params[name], value)

    def test_idempotent(self, tiny_generator):
        rollout = RolloutPolicy.from_generator(tiny_generator)
        sync_rollout(rollout, tiny_generator)
        once = rollout.model.params.value_snapshot()
        sync_rollout(rollout, tiny_generator)
        for name, value in once.items():
            assert np.array_equal(rollout.model.params[name], value)

    def test_dimension_mismatch(self, tiny_generator):
        rollout = RolloutPolicy(GeneratorModel.zeros(GeneratorDims(4, 2, 4, 5)))
        with pytest.raises(DimensionError):
            sync_rollout(rollout, tiny_generator)


class TestPolicyGradient:
    """Tests for the REINFORCE update and its unbiasedness."""

    def test_zero_reward_leaves_parameters(self, tiny_generator):
        before = tiny_generator.params.value_snapshot()
        rollout = RolloutPolicy.from_generator(tiny_generator)
        mean_q = policy_gradient_step(
            tiny_generator, rollout, lambda t: np.zeros(len(t)), 16, 4, OptimizerConfig("adam", 0.1), Rng(0),
        )
        assert mean_q == 0.0
        for name, value in before.items():
            assert np.array_equal(tiny_generator.params[name], value)

    def test_constant_reward_has_zero_mean_gradient(self, tiny_generator):
        chunks = []
        for i in range(200):
            tokens, _ = sample_batch(tiny_generator, 500, Rng(10).child(i))
            chunks.append(episode_gradients(tiny_generator, tokens, np.ones(tokens.shape)))
        mean, se = _chunked_mean_and_se(chunks)
        for name in mean:
            assert np.all(np.abs(mean[name]) <= 4 * se[name] + 1e-12), name

    @pytest.mark.parametrize("vocab_size,seq_len", ENUMERABLE)
    def test_closed_form_matches_finite_differences(self, vocab_size, seq_len):
        gen, disc = _enumerable_setup(vocab_size, seq_len)
        reward = discriminator_reward(disc)
        closed = exact_policy_gradient(gen, reward)
        numeric = finite_diff_grad(lambda _: exact_objective(gen, reward), gen.params, 1e-5)
        for name in closed:
            assert np.max(np.abs(closed[name] - numeric[name])) < 1e-6, name

    @pytest.mark.parametrize("vocab_size,seq_len", ENUMERABLE)
    def test_estimator_is_unbiased(self, vocab_size, seq_len):
        gen, disc = _enumerable_setup(vocab_size, seq_len)
        reward = discriminator_reward(disc)
        rollout = RolloutPolicy.from_generator(gen)
        exact = exact_policy_gradient(gen, reward)

        chunks = []
        for i in range(200):
            rng = Rng(20).child(i)
            tokens, _ = sample_batch(gen, 1000, rng.child("episodes"))
            q = estimate_q_batch(tokens, rollout, reward, 4, rng.child("rollout"))
            chunks.append(episode_gradients(gen, tokens, q))
        mean, se = _chunked_mean_and_se(chunks)

        within3 = total = 0
        for name in exact:
            z = np.abs(mean[name] - exact[name])
            bound = se[name] + 1e-12
            assert np.all(z <= 5 * bound), name
            within3 += int(np.sum(z <= 3 * bound))
            total += z.size
        assert within3 / total >= 0.99

    def test_enumeration_probabilities_sum_to_one(self, tiny_generator):
        probs = sequence_probabilities(tiny_generator)
        assert probs.shape == (9,)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert enumerate_sequences(3, 2)[_index([2, 3], 3)].tolist() == [2, 3]

    def test_updates_increase_expected_reward(self, tiny_generator):
        def reward(tokens):
            return np.mean(tokens == 1, axis=1)

        rollout = RolloutPolicy.from_generator(tiny_generator)
        before = exact_objective(tiny_generator, reward)
        opt = OptimizerConfig("adam", 0.05)
        for i in range(30):
            policy_gradient_step(tiny_generator, rollout, reward, 32, 4, opt, Rng(30).child(i), baseline="mean")
            sync_rollout(rollout, tiny_generator)
        assert exact_objective(tiny_generator, reward) > before + 0.1

    def test_mean_baseline(self, tiny_generator, tiny_discriminator):
        rollout = RolloutPolicy.from_generator(tiny_generator)
        mean_q = policy_gradient_step(
            tiny_generator, rollout, tiny_discriminator, 8, 2, OptimizerConfig("adam", 0.01), Rng(0), baseline="mean",
        )
        assert 0.0 <= mean_q <= 1.0

    def test_invalid_arguments(self, tiny_generator, tiny_discriminator):
        rollout = RolloutPolicy.from_generator(tiny_generator)
        with pytest.raises(ValueError):
            policy_gradient_step(tiny_generator, rollout, tiny_discriminator, 0, 2, OptimizerConfig(), Rng(0))
        with pytest.raises(ValueError):
            policy_gradient_step(tiny_generator, rollout, tiny_discriminator, 4, 2, OptimizerConfig(), Rng(0), baseline="ema")
