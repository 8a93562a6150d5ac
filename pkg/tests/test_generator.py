"""Tests for the LSTM generator."""

import math

import numpy as np
import pytest

from seqgan_cli.errors import DataError, HorizonError, VocabError
from seqgan_cli.generator import (
    GeneratorDims,
    GeneratorModel,
    as_token_matrix,
    curriculum_rate,
    log_likelihood,
    log_likelihood_batch,
    mle_train_epoch,
    nll_gradient,
    read_sequences,
    sample_batch,
    sample_sequence,
    scheduled_sampling_epoch,
    step,
    write_sequences,
)
from seqgan_cli.numerics import OptimizerConfig, Rng, finite_diff_grad, max_relative_error


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def _scalar_step(params, h, s, token):
    """Plain-Python LSTM step, independent of the vectorized implementation."""
    x = list(params["embedding"][token])
    z = list(h) + x
    hidden = len(h)

    def affine(gate, row):
        return sum(params[f"W_{gate}"][row][j] * z[j] for j in range(len(z))) + params[f"b_{gate}"][row]

    s_new, h_new = [], []
    for r in range(hidden):
        f = _sigmoid(affine("f", r))
        i = _sigmoid(affine("i", r))
        o = _sigmoid(affine("o", r))
        g = math.tanh(affine("s", r))
        s_new.append(f * s[r] + i * g)
        h_new.append(o * math.tanh(s_new[-1]))
    logits = [sum(params["V"][v][r] * h_new[r] for r in range(hidden)) + params["c"][v] for v in range(len(params["c"]))]
    top = max(logits)
    exps = [math.exp(l - top) for l in logits]
    return h_new, s_new, [e / sum(exps) for e in exps]


class TestStep:
    """Tests for single generator steps."""

    def test_zero_parameters_give_uniform(self):
        model = GeneratorModel.zeros(GeneratorDims(4, 3, 2, 3))
        state, dist = step(model, model.initial_state(), 0)
        assert np.array_equal(state.h, np.zeros(3))
        assert np.array_equal(state.s, np.zeros(3))
        assert np.allclose(dist, 0.25)

        state, dist = step(model, state, 2)
        assert state.t == 2
        assert np.array_equal(state.h, np.zeros(3))
        assert np.allclose(dist, 0.25)

    def test_matches_scalar_recomputation(self, tiny_generator):
        state, dist = step(tiny_generator, tiny_generator.initial_state(), 0)
        h, s, expected = _scalar_step(tiny_generator.params, [0.0] * 5, [0.0] * 5, 0)
        assert np.allclose(state.h, h, atol=1e-14)
        assert np.allclose(state.s, s, atol=1e-14)
        assert np.allclose(dist, expected, atol=1e-14)

        state, dist = step(tiny_generator, state, 3)
        _, _, expected = _scalar_step(tiny_generator.params, h, s, 3)
        assert np.allclose(dist, expected, atol=1e-14)

    def test_is_pure(self, tiny_generator):
        first, _ = step(tiny_generator, tiny_generator.initial_state(), 0)
        a, dist_a = step(tiny_generator, first, 2)
        b, dist_b = step(tiny_generator, first, 2)
        assert np.array_equal(a.h, b.h)
        assert np.array_equal(dist_a, dist_b)

    def test_distribution_is_valid(self):
        model = GeneratorModel.init_random(GeneratorDims(6, 2, 3, 3), Rng(0), scale=5.0)
        _, dist = step(model, model.initial_state(), 0)
        assert np.all(dist >= 0)
        assert abs(dist.sum() - 1.0) < 1e-12

    def test_horizon(self, tiny_generator):
        state = tiny_generator.initial_state()
        state, _ = step(tiny_generator, state, 0)
        state, _ = step(tiny_generator, state, 1)
        with pytest.raises(HorizonError):
            step(tiny_generator, state, 1)

    def test_invalid_token(self, tiny_generator):
        with pytest.raises(VocabError):
            step(tiny_generator, tiny_generator.initial_state(), 4)


class TestSampling:
    """Tests for sequence sampling."""

    def test_delta_distribution(self):
        model = GeneratorModel.zeros(GeneratorDims(4, 5, 2, 2))
        model.params["c"][1] = 1000.0
        tokens, dists = sample_sequence(model, Rng(0))
        assert tokens.tolist() == [2] * 5
        assert dists.shape == (5, 4)

    def test_zero_model_is_uniform(self):
        model = GeneratorModel.zeros(GeneratorDims(5, 2, 2, 2))
        n = 100_000
        tokens, _ = sample_batch(model, n, Rng(1))
        counts = np.bincount(tokens[:, 0], minlength=6)[1:]
        sigma = math.sqrt(n * 0.2 * 0.8)
        assert np.all(np.abs(counts - n * 0.2) < 4 * sigma)

    def test_first_token_marginal(self, tiny_generator):
        _, dist = step(tiny_generator, tiny_generator.initial_state(), 0)
        n = 100_000
        tokens, _ = sample_batch(tiny_generator, n, Rng(2))
        counts = np.bincount(tokens[:, 0], minlength=4)[1:]
        sigma = np.sqrt(n * dist * (1 - dist))
        assert np.all(np.abs(counts - n * dist) < 4 * sigma)

    def test_deterministic(self, tiny_generator):
        assert np.array_equal(sample_sequence(tiny_generator, Rng(3))[0], sample_sequence(tiny_generator, Rng(3))[0])

    def test_never_emits_start_token(self, tiny_generator):
        tokens = tiny_generator.sample(2000, Rng(4))
        assert tokens.min() >= 1
        assert tokens.max() <= 3

    def test_count_must_be_positive(self, tiny_generator):
        with pytest.raises(ValueError):
            sample_batch(tiny_generator, 0, Rng(0))


class TestLogLikelihood:
    """Tests for sequence log-likelihood."""

    def test_zero_model(self):
        model = GeneratorModel.zeros(GeneratorDims(4, 3, 2, 2))
        assert log_likelihood(model, np.array([1, 4, 2])) == pytest.approx(-3 * math.log(4), abs=1e-12)
        assert log_likelihood(model, np.array([1, 4, 2])) == pytest.approx(-4.1589, abs=1e-4)

    def test_matches_composed_steps(self, tiny_generator):
        seq = [2, 3]
        state, total, token = tiny_generator.initial_state(), 0.0, 0
        for y in seq:
            state, dist = step(tiny_generator, state, token)
            total += math.log(dist[y - 1])
            token = y
        assert log_likelihood(tiny_generator, np.array(seq)) == pytest.approx(total, abs=1e-12)

    def test_batch_rows(self, tiny_generator):
        tokens = np.array([[1, 2], [3, 3], [2, 1]])
        batch = log_likelihood_batch(tiny_generator, tokens)
        for row, value in zip(tokens, batch):
            assert value == pytest.approx(log_likelihood(tiny_generator, row), abs=1e-14)
        assert np.all(batch <= 0)

    def test_rejects_wrong_length(self, tiny_generator):
        with pytest.raises(DataError):
            log_likelihood(tiny_generator, np.array([1, 2, 3]))


class TestGradients:
    """Tests for the BPTT gradient of the NLL."""

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_finite_differences(self, seed):
        rng = Rng(seed)
        dims = GeneratorDims(3, 3, 3, 4)
        model = GeneratorModel.init_random(dims, rng.child("model"), scale=0.5)
        tokens = rng.child("data").integers(1, 4, size=(2, 3))

        _, analytic = nll_gradient(model, tokens)
        numeric = finite_diff_grad(lambda _: float(-log_likelihood_batch(model, tokens).mean()), model.params, 1e-5)
        assert max_relative_error(analytic, numeric, floor=1e-4) < 1e-4

    def test_weights_scale_gradient(self, tiny_generator):
        tokens = np.array([[1, 2], [3, 1]])
        _, mean_grad = nll_gradient(tiny_generator, tokens)
        _, doubled = nll_gradient(tiny_generator, tokens, weights=np.full((2, 2), 1.0))
        for name in mean_grad:
            assert np.allclose(doubled[name], 2.0 * mean_grad[name])

    def test_omega_below_one_requires_rng(self, tiny_generator):
        with pytest.raises(ValueError):
            nll_gradient(tiny_generator, np.array([[1, 2]]), omega=0.5)


class TestTraining:
    """Tests for MLE and scheduled-sampling epochs."""

    def test_memorizes_single_sequence(self):
        dims = GeneratorDims(4, 3, 8, 8)
        model = GeneratorModel.init_random(dims, Rng(0))
        data = np.tile([1, 3, 2], (8, 1))
        opt = OptimizerConfig("adam", 0.05)
        losses = [mle_train_epoch(model, data, opt, 8, Rng(0).child(f"e{e}")) for e in range(200)]
        assert losses[-1] < losses[0]
        assert losses[-1] < 0.1

    def test_zero_learning_rate(self, tiny_generator):
        before = tiny_generator.params.value_snapshot()
        data = np.array([[1, 2], [2, 3], [3, 1]])
        opt = OptimizerConfig("adam", 0.0)
        first = mle_train_epoch(tiny_generator, data, opt, 2, Rng(0))
        second = mle_train_epoch(tiny_generator, data, opt, 2, Rng(1))
        assert first == pytest.approx(second, abs=1e-12)
        for name, value in before.items():
            assert np.array_equal(tiny_generator.params[name], value)

    def test_empty_dataset(self, tiny_generator):
        with pytest.raises(DataError):
            mle_train_epoch(tiny_generator, np.zeros((0, 2), dtype=np.int64), OptimizerConfig(), 4, Rng(0))

    def test_fully_guided_equals_mle(self, tiny_generator):
        data = Rng(5).integers(1, 4, size=(20, 2))
        opt = OptimizerConfig("adam", 0.01)
        mle, ss = tiny_generator.copy(), tiny_generator.copy()
        mle_loss = mle_train_epoch(mle, data, opt, 4, Rng(9))
        ss_loss = scheduled_sampling_epoch(ss, data, opt, 1.0, Rng(9), batch=4)
        assert mle_loss == ss_loss
        for name in mle.params:
            assert np.array_equal(mle.params[name], ss.params[name])

    def test_free_running_differs_from_mle(self, tiny_generator):
        data = Rng(5).integers(1, 4, size=(20, 2))
        opt = OptimizerConfig("adam", 0.01)
        mle, free = tiny_generator.copy(), tiny_generator.copy()
        mle_train_epoch(mle, data, opt, 4, Rng(9))
        scheduled_sampling_epoch(free, data, opt, 0.0, Rng(9), batch=4)
        assert not np.array_equal(mle.params["embedding"], free.params["embedding"])

    @pytest.mark.parametrize("omega", [-0.1, 1.5])
    def test_omega_range(self, tiny_generator, omega):
        with pytest.raises(ValueError):
            scheduled_sampling_epoch(tiny_generator, np.array([[1, 2]]), OptimizerConfig(), omega, Rng(0))

    def test_curriculum_rate(self):
        assert curriculum_rate(0) == 1.0
        assert curriculum_rate(100, 0.002) == pytest.approx(0.8)
        assert curriculum_rate(600, 0.002) == 0.0
        assert curriculum_rate(50, 0.0) == 1.0


class TestSequenceFiles:
    """Tests for reading and writing sequence files."""

    def test_write_format(self, tmp_path):
        path = write_sequences(tmp_path / "seqs.txt", [[1, 2, 3], [3, 2, 1]])
        assert path.read_text() == "1 2 3\n3 2 1\n"
        assert read_sequences(path).tolist() == [[1, 2, 3], [3, 2, 1]]

    def test_read_validates_against_dims(self, tmp_path):
        path = tmp_path / "seqs.txt"
        path.write_text("1 2 9\n")
        with pytest.raises(VocabError):
            read_sequences(path, GeneratorDims(3, 3))

    @pytest.mark.parametrize("text", ["", "1 x 2\n", "1 2\n1\n"])
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "seqs.txt"
        path.write_text(text)
        with pytest.raises(DataError):
            read_sequences(path)

    def test_as_token_matrix_single_sequence(self):
        assert as_token_matrix([1, 2]).shape == (1, 2)
