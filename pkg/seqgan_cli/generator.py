"""LSTM generator policy G_theta: token embedding, LSTM recurrence and a softmax over the vocabulary."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence as SequenceType, Tuple, Union

import numpy as np

from seqgan_cli.errors import DataError, DimensionError, HorizonError, VocabError
from seqgan_cli.numerics import (
    DEFAULT_DTYPE,
    GradientSnapshot,
    OptimizerConfig,
    ParameterStore,
    Rng,
    optimizer_step,
    safe_log,
    sigmoid,
    softmax,
)


logger = logging.getLogger(__name__)

START_TOKEN = 0
GATES = ("f", "i", "o", "s")

# A sequence is a 1-D integer array of length T; datasets are (n, T) matrices.
Sequence = np.ndarray
TokenData = Union[np.ndarray, SequenceType[SequenceType[int]]]


@dataclass(frozen=True)
class Vocab:
    """
    Token id layout shared by every model.

    Ids 1..size are the |Y| emitted tokens. Id 0 is the start token: it is
    embedded like any other id but never emitted.
    """

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"Vocabulary size must be positive, got {self.size}")

    @property
    def start_id(self) -> int:
        return START_TOKEN

    @property
    def num_ids(self) -> int:
        return self.size + 1

    def check_tokens(self, tokens: np.ndarray, allow_start: bool = False) -> None:
        tokens = np.asarray(tokens)
        low = 0 if allow_start else 1
        if tokens.size and (tokens.min() < low or tokens.max() > self.size):
            raise VocabError(f"Token ids must lie in [{low}, {self.size}]")


@dataclass(frozen=True)
class GeneratorDims:
    vocab_size: int
    seq_len: int
    embedding_dim: int = 32
    hidden_dim: int = 32

    def __post_init__(self):
        for name in ("vocab_size", "seq_len", "embedding_dim", "hidden_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def vocab(self) -> Vocab:
        return Vocab(self.vocab_size)


@dataclass
class GenState:
    """LSTM hidden vector h, cell vector s and the number of steps taken."""

    h: np.ndarray
    s: np.ndarray
    t: int = 0


def _parameter_shapes(dims: GeneratorDims) -> List[Tuple[str, Tuple[int, ...]]]:
    h, k = dims.hidden_dim, dims.embedding_dim
    shapes = [("embedding", (dims.vocab_size + 1, k))]
    for gate in GATES:
        shapes.append((f"W_{gate}", (h, h + k)))
        shapes.append((f"b_{gate}", (h,)))
    shapes.append(("V", (dims.vocab_size, h)))
    shapes.append(("c", (dims.vocab_size,)))
    return shapes


class GeneratorModel:
    """LSTM policy over a fixed horizon T."""

    def __init__(self, dims: GeneratorDims, params: ParameterStore):
        expected = dict(_parameter_shapes(dims))
        if params.shapes() != expected:
            raise DimensionError("Parameter store does not match generator dimensions")
        self.dims = dims
        self.params = params

    @classmethod
    def zeros(cls, dims: GeneratorDims, dtype=DEFAULT_DTYPE) -> "GeneratorModel":
        store = ParameterStore(dtype)
        for name, shape in _parameter_shapes(dims):
            store.add(name, np.zeros(shape))
        return cls(dims, store)

    @classmethod
    def init_random(
        cls,
        dims: GeneratorDims,
        rng: Rng,
        scale: float = 0.05,
        forget_bias: float = 1.0,
        dtype=DEFAULT_DTYPE,
    ) -> "GeneratorModel":
        """Uniform(-scale, scale) weights with the forget-gate bias set to ``forget_bias``."""
        store = ParameterStore(dtype)
        for name, shape in _parameter_shapes(dims):
            if name == "b_f":
                store.add(name, np.full(shape, forget_bias))
            else:
                store.add(name, rng.uniform(-scale, scale, shape))
        return cls(dims, store)

    @property
    def vocab(self) -> Vocab:
        return self.dims.vocab

    def copy(self) -> "GeneratorModel":
        return GeneratorModel(self.dims, self.params.copy())

    def initial_state(self) -> GenState:
        h = np.zeros(self.dims.hidden_dim, dtype=self.params.dtype)
        return GenState(h, h.copy(), 0)

    def sample(self, count: int, rng: Rng, chunk: int = 1024) -> np.ndarray:
        """Sample ``count`` sequences, in chunks so the per-step distributions stay small."""
        parts = [sample_batch(self, min(chunk, count - start), rng)[0] for start in range(0, count, chunk)]
        return np.concatenate(parts)


def cell_forward(params: ParameterStore, h: np.ndarray, s: np.ndarray, inputs: np.ndarray):
    """One batched LSTM step followed by the softmax output layer."""
    x = params["embedding"][inputs]
    z = np.concatenate([h, x], axis=1)
    f = sigmoid(z @ params["W_f"].T + params["b_f"])
    i = sigmoid(z @ params["W_i"].T + params["b_i"])
    o = sigmoid(z @ params["W_o"].T + params["b_o"])
    g = np.tanh(z @ params["W_s"].T + params["b_s"])
    s_new = f * s + i * g
    tanh_s = np.tanh(s_new)
    h_new = o * tanh_s
    probs = softmax(h_new @ params["V"].T + params["c"], axis=1)
    cache = (inputs, z, f, i, o, g, s, tanh_s, h_new)
    return h_new, s_new, probs, cache


def as_token_matrix(data: TokenData, dims: Optional[GeneratorDims] = None) -> np.ndarray:
    """Convert a sequence or list of sequences into an (n, T) int64 matrix and validate it."""
    try:
        tokens = np.asarray(data, dtype=np.int64)
    except ValueError:
        raise DataError("Sequences must all have the same length")
    if tokens.ndim == 1 and tokens.size == 0:
        return np.empty((0, dims.seq_len if dims is not None else 0), dtype=np.int64)
    if tokens.ndim == 1:
        tokens = tokens[None, :]
    if tokens.ndim != 2:
        raise DataError(f"Expected a list of sequences, got an array of shape {tokens.shape}")
    if dims is not None:
        if tokens.shape[1] != dims.seq_len:
            raise DataError(f"Sequences have length {tokens.shape[1]}, expected {dims.seq_len}")
        dims.vocab.check_tokens(tokens)
    return tokens


def step(model: GeneratorModel, state: GenState, input_token: int) -> Tuple[GenState, np.ndarray]:
    """
    Advance the policy by one token.

    Args:
        model: Generator
        state: Current state (t < T)
        input_token: Token fed at this step (0 is the start token)

    Returns:
        (next state, distribution over the |Y| emitted tokens; entry j is token j+1)

    Raises:
        HorizonError: If state.t >= T.
        VocabError: If input_token is not a valid id.
    """
    if state.t >= model.dims.seq_len:
        raise HorizonError(f"Cannot step past the horizon T={model.dims.seq_len}")
    if not 0 <= int(input_token) <= model.dims.vocab_size:
        raise VocabError(f"Invalid token id {input_token}")
    h, s, probs, _ = cell_forward(
        model.params,
        np.asarray(state.h)[None, :],
        np.asarray(state.s)[None, :],
        np.array([int(input_token)]),
    )
    return GenState(h[0], s[0], state.t + 1), probs[0]


def sample_batch(model: GeneratorModel, count: int, rng: Rng) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sample ``count`` sequences from the policy.

    Returns:
        (tokens of shape (count, T), distributions of shape (count, T, |Y|))
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    dims = model.dims
    h = np.zeros((count, dims.hidden_dim), dtype=model.params.dtype)
    s = np.zeros_like(h)
    inputs = np.full(count, START_TOKEN, dtype=np.int64)
    tokens = np.empty((count, dims.seq_len), dtype=np.int64)
    dists = np.empty((count, dims.seq_len, dims.vocab_size), dtype=model.params.dtype)
    for t in range(dims.seq_len):
        h, s, probs, _ = cell_forward(model.params, h, s, inputs)
        inputs = rng.categorical(probs) + 1
        tokens[:, t] = inputs
        dists[:, t] = probs
    return tokens, dists


def sample_sequence(model: GeneratorModel, rng: Rng) -> Tuple[Sequence, np.ndarray]:
    """Sample one sequence; returns its tokens and the per-step distributions used."""
    tokens, dists = sample_batch(model, 1, rng)
    return tokens[0], dists[0]


def _unroll(model: GeneratorModel, targets: np.ndarray, omega: float = 1.0, rng: Optional[Rng] = None):
    """
    Feed a batch through the LSTM, keeping the activations for BPTT.

    With omega < 1 the input at step t > 0 is the true previous token with
    probability omega and otherwise a token sampled from the previous step's
    distribution.
    """
    batch, horizon = targets.shape
    h = np.zeros((batch, model.dims.hidden_dim), dtype=model.params.dtype)
    s = np.zeros_like(h)
    inputs = np.full(batch, START_TOKEN, dtype=np.int64)
    probs_all = np.empty((batch, horizon, model.dims.vocab_size), dtype=model.params.dtype)
    caches = []
    for t in range(horizon):
        if t > 0:
            inputs = targets[:, t - 1]
            if omega < 1.0:
                sampled = rng.categorical(probs_all[:, t - 1]) + 1
                inputs = np.where(rng.random(batch) < omega, inputs, sampled)
        h, s, probs, cache = cell_forward(model.params, h, s, inputs)
        probs_all[:, t] = probs
        caches.append(cache)
    return probs_all, caches


def _target_log_probs(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    picked = np.take_along_axis(probs, (targets - 1)[:, :, None], axis=2)[:, :, 0]
    return safe_log(picked)


def _backward(
    model: GeneratorModel,
    probs: np.ndarray,
    caches: list,
    targets: np.ndarray,
    weights: np.ndarray,
) -> GradientSnapshot:
    """Gradient of sum_{b,t} weights[b,t] * -log G(targets[b,t] | prefix) by BPTT."""
    params = model.params
    hidden = model.dims.hidden_dim
    grads = {name: np.zeros_like(params[name]) for name in params}
    batch = targets.shape[0]
    dh_next = np.zeros((batch, hidden), dtype=params.dtype)
    ds_next = np.zeros_like(dh_next)
    rows = np.arange(batch)

    for t in reversed(range(targets.shape[1])):
        inputs, z, f, i, o, g, s_prev, tanh_s, h = caches[t]
        dlogits = probs[:, t].copy()
        dlogits[rows, targets[:, t] - 1] -= 1.0
        dlogits *= weights[:, t, None]

        grads["V"] += dlogits.T @ h
        grads["c"] += dlogits.sum(axis=0)
        dh = dlogits @ params["V"] + dh_next
        ds = dh * o * (1.0 - tanh_s**2) + ds_next

        pre = {
            "o": dh * tanh_s * o * (1.0 - o),
            "i": ds * g * i * (1.0 - i),
            "f": ds * s_prev * f * (1.0 - f),
            "s": ds * i * (1.0 - g**2),
        }
        dz = np.zeros_like(z)
        for gate, d in pre.items():
            grads[f"W_{gate}"] += d.T @ z
            grads[f"b_{gate}"] += d.sum(axis=0)
            dz += d @ params[f"W_{gate}"]

        dh_next = dz[:, :hidden]
        ds_next = ds * f
        np.add.at(grads["embedding"], inputs, dz[:, hidden:])
    return grads


def nll_gradient(
    model: GeneratorModel,
    tokens: TokenData,
    weights: Optional[np.ndarray] = None,
    omega: float = 1.0,
    rng: Optional[Rng] = None,
) -> Tuple[np.ndarray, GradientSnapshot]:
    """
    Per-sequence NLL and the gradient of the weighted NLL, without touching the store.

    Args:
        model: Generator
        tokens: (B, T) target tokens
        weights: (B, T) per-step weights on -log G; defaults to 1/B everywhere (mean NLL)
        omega: Probability of feeding the true previous token (scheduled sampling)
        rng: Stream for the curriculum draws, required when omega < 1

    Returns:
        (-sum_t log G(y_t | inputs) per row, gradient of sum_{b,t} weights * -log G)
    """
    tokens = as_token_matrix(tokens, model.dims)
    if omega < 1.0 and rng is None:
        raise ValueError("An rng is required when omega < 1")
    if weights is None:
        weights = np.full(tokens.shape, 1.0 / tokens.shape[0])
    elif weights.shape != tokens.shape:
        raise DimensionError(f"weights have shape {weights.shape}, expected {tokens.shape}")

    probs, caches = _unroll(model, tokens, omega, rng)
    nll = -_target_log_probs(probs, tokens).sum(axis=1)
    return nll, _backward(model, probs, caches, tokens, weights)


def nll_and_grad(
    model: GeneratorModel,
    tokens: TokenData,
    weights: Optional[np.ndarray] = None,
    omega: float = 1.0,
    rng: Optional[Rng] = None,
) -> float:
    """Mean per-sequence NLL of ``tokens``; accumulates the weighted BPTT gradient into the store."""
    nll, grads = nll_gradient(model, tokens, weights, omega, rng)
    model.params.accumulate(grads)
    return float(nll.mean())


def log_likelihood_batch(model: GeneratorModel, tokens: TokenData) -> np.ndarray:
    """sum_t log G(y_t | Y_{1:t-1}) for each row, feeding the true tokens."""
    tokens = as_token_matrix(tokens, model.dims)
    probs, _ = _unroll(model, tokens)
    return _target_log_probs(probs, tokens).sum(axis=1)


def log_likelihood(model: GeneratorModel, seq: Sequence) -> float:
    """Log-likelihood of one sequence under the model (always <= 0)."""
    return float(log_likelihood_batch(model, seq)[0])


def _train_epoch(
    model: GeneratorModel,
    dataset: TokenData,
    opt: OptimizerConfig,
    batch: int,
    rng: Rng,
    omega: float,
) -> float:
    tokens = as_token_matrix(dataset, model.dims)
    if tokens.shape[0] == 0:
        raise DataError("Cannot train on an empty dataset")
    if batch < 1:
        raise ValueError(f"batch must be positive, got {batch}")

    order = rng.permutation(tokens.shape[0])
    feed_rng = rng.child("feed")
    total = 0.0
    for start in range(0, len(order), batch):
        rows = tokens[order[start:start + batch]]
        loss = nll_and_grad(model, rows, omega=omega, rng=feed_rng)
        optimizer_step(model.params, opt)
        total += loss * rows.shape[0]
    model.params.check_finite()
    return total / tokens.shape[0]


def mle_train_epoch(
    model: GeneratorModel,
    dataset: TokenData,
    opt: OptimizerConfig,
    batch: int,
    rng: Rng,
) -> float:
    """
    One shuffled maximum-likelihood pass over ``dataset``.

    Returns:
        Mean per-sequence NLL, each batch measured before its update

    Raises:
        DataError: If the dataset is empty.
    """
    return _train_epoch(model, dataset, opt, batch, rng, omega=1.0)


def scheduled_sampling_epoch(
    model: GeneratorModel,
    dataset: TokenData,
    opt: OptimizerConfig,
    omega: float,
    rng: Rng,
    batch: int = 64,
) -> float:
    """
    One pass where each input is the true token with probability ``omega``, else a model sample.

    The loss target stays the true token. With omega = 1 this is exactly mle_train_epoch.
    """
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    return _train_epoch(model, dataset, opt, batch, rng, omega=omega)


def curriculum_rate(epoch: int, decay: float = 0.002) -> float:
    """Probability of feeding the true token after ``epoch`` decay steps."""
    return max(0.0, 1.0 - decay * epoch)


def write_sequences(path: Union[str, Path], tokens: TokenData) -> Path:
    """Write one sequence per line as space-separated decimal ids."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = as_token_matrix(tokens)
    path.write_text("".join(" ".join(str(t) for t in row) + "\n" for row in rows), encoding="utf-8")
    return path


def read_sequences(path: Union[str, Path], dims: Optional[GeneratorDims] = None) -> np.ndarray:
    """Read a sequence file written by write_sequences."""
    path = Path(path)
    rows = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([int(t) for t in line.split()])
        except ValueError:
            raise DataError(f"Non-integer token on line {line_no} of {path}")
    if not rows:
        raise DataError(f"No sequences in {path}")
    return as_token_matrix(rows, dims)
