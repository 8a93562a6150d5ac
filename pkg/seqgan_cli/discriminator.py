"""CNN discriminator D_phi: embedding matrix, multi-width convolutions, max-over-time pooling, highway and sigmoid output."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence as SequenceType, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from seqgan_cli.errors import ConfigError, DataError, DimensionError
from seqgan_cli.generator import TokenData, Vocab, as_token_matrix
from seqgan_cli.numerics import (
    DEFAULT_DTYPE,
    GradientSnapshot,
    OptimizerConfig,
    ParameterStore,
    Rng,
    optimizer_step,
    relu,
    sigmoid,
)


logger = logging.getLogger(__name__)

KernelSpec = Tuple[int, int]

KERNEL_PRESETS: Dict[str, List[KernelSpec]] = {
    "full_t20": [
        (1, 100), (2, 200), (3, 200), (4, 200), (5, 200),
        (6, 100), (7, 100), (8, 100), (9, 100), (10, 100),
        (15, 160), (20, 160),
    ],
    "full_t32": [
        (1, 100), (2, 200), (3, 200), (4, 200), (5, 200),
        (6, 100), (7, 100), (8, 100), (9, 100), (10, 100),
        (16, 160), (24, 160), (32, 160),
    ],
    "desk": [(window, 25) for window in range(1, 6)],
}

# Rows per chunk when scoring large token matrices.
PREDICT_CHUNK = 512


def load_kernel_preset(name_or_path: Union[str, Path], seq_len: int) -> List[KernelSpec]:
    """
    Resolve a kernel preset name or a ``window,count`` file.

    Args:
        name_or_path: One of KERNEL_PRESETS or a path to a text file with one ``window,count`` pair per line
        seq_len: Sequence length T the kernels will run over

    Returns:
        List of (window, count) pairs

    Raises:
        ConfigError: If the file is malformed or a window exceeds T.
    """
    if str(name_or_path) in KERNEL_PRESETS:
        kernels = list(KERNEL_PRESETS[str(name_or_path)])
    else:
        path = Path(name_or_path)
        if not path.exists():
            raise ConfigError(f"Unknown kernel preset '{name_or_path}'", key="discriminator.kernels")
        kernels = []
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                window, count = (int(part) for part in line.split(","))
            except ValueError:
                raise ConfigError(f"Expected 'window,count' in {path}", key="discriminator.kernels", line=line_no)
            kernels.append((window, count))
    too_wide = [window for window, _ in kernels if window > seq_len]
    if too_wide:
        raise ConfigError(
            f"Kernel windows {too_wide} exceed the sequence length {seq_len}",
            key="discriminator.kernels",
        )
    return kernels


@dataclass(frozen=True)
class DiscriminatorConfig:
    vocab_size: int
    seq_len: int
    embedding_dim: int = 64
    kernels: Tuple[KernelSpec, ...] = tuple(KERNEL_PRESETS["desk"])
    dropout_keep: float = 0.75

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(tuple(k) for k in self.kernels))
        if not self.kernels:
            raise ValueError("At least one kernel is required")
        for window, count in self.kernels:
            if not 1 <= window <= self.seq_len:
                raise ValueError(f"Kernel window {window} must lie in [1, {self.seq_len}]")
            if count < 1:
                raise ValueError(f"Kernel count must be positive, got {count}")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ValueError(f"dropout_keep must lie in (0, 1], got {self.dropout_keep}")

    @property
    def feature_dim(self) -> int:
        return sum(count for _, count in self.kernels)

    @property
    def vocab(self) -> Vocab:
        return Vocab(self.vocab_size)


def _parameter_shapes(config: DiscriminatorConfig) -> List[Tuple[str, Tuple[int, ...]]]:
    k, features = config.embedding_dim, config.feature_dim
    shapes = [("embedding", (config.vocab_size + 1, k))]
    for j, (window, count) in enumerate(config.kernels):
        shapes.append((f"conv{j}_w", (count, window, k)))
        shapes.append((f"conv{j}_b", (count,)))
    shapes += [
        ("W_T", (features, features)),
        ("b_T", (features,)),
        ("W_H", (features, features)),
        ("W_o", (features,)),
        ("b_o", (1,)),
    ]
    return shapes


class DiscriminatorModel:
    """Binary classifier returning the probability that a sequence is real."""

    def __init__(self, config: DiscriminatorConfig, params: ParameterStore):
        if params.shapes() != dict(_parameter_shapes(config)):
            raise DimensionError("Parameter store does not match discriminator configuration")
        self.config = config
        self.params = params

    @classmethod
    def zeros(cls, config: DiscriminatorConfig, dtype=DEFAULT_DTYPE) -> "DiscriminatorModel":
        store = ParameterStore(dtype)
        for name, shape in _parameter_shapes(config):
            store.add(name, np.zeros(shape))
        return cls(config, store)

    @classmethod
    def init_random(
        cls,
        config: DiscriminatorConfig,
        rng: Rng,
        scale: float = 0.1,
        dtype=DEFAULT_DTYPE,
    ) -> "DiscriminatorModel":
        store = ParameterStore(dtype)
        for name, shape in _parameter_shapes(config):
            if name.endswith("_b") or name.startswith("b_"):
                store.add(name, np.zeros(shape))
            else:
                store.add(name, rng.normal(shape, scale=scale))
        return cls(config, store)

    def copy(self) -> "DiscriminatorModel":
        return DiscriminatorModel(self.config, self.params.copy())


@dataclass
class LabeledBatch:
    """Sequences with binary labels: 1 for real data, 0 for generated."""

    sequences: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.sequences = as_token_matrix(self.sequences)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.sequences.shape[0] != self.labels.shape[0]:
            raise DataError("sequences and labels must have equal lengths")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise DataError("labels must be 0 or 1")

    def __len__(self) -> int:
        return int(self.labels.shape[0])


@dataclass
class ForwardCache:
    tokens: np.ndarray
    conv: List[tuple] = field(default_factory=list)
    features: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    dropped: Optional[np.ndarray] = None
    tau: Optional[np.ndarray] = None
    highway_pre: Optional[np.ndarray] = None
    highway: Optional[np.ndarray] = None
    combined: Optional[np.ndarray] = None
    logits: Optional[np.ndarray] = None


def embed_concat(model: DiscriminatorModel, seq: SequenceType[int]) -> np.ndarray:
    """Stack the embeddings of ``seq`` into a T x k matrix (row t is the embedding of y_t)."""
    tokens = as_token_matrix(seq)
    model.config.vocab.check_tokens(tokens)
    return model.params["embedding"][tokens[0]].copy()


def _forward(model: DiscriminatorModel, tokens: np.ndarray, dropout_rng: Optional[Rng] = None):
    params, config = model.params, model.config
    batch = tokens.shape[0]
    emb = params["embedding"][tokens]
    cache = ForwardCache(tokens=tokens)

    pooled = []
    for j, (window, count) in enumerate(config.kernels):
        # (B, P, k, l) -> (B, P, l*k) with the window index major
        patches = sliding_window_view(emb, window, axis=1).transpose(0, 1, 3, 2)
        patches = patches.reshape(batch, -1, window * config.embedding_dim)
        kernel = params[f"conv{j}_w"].reshape(count, -1)
        pre = patches @ kernel.T + params[f"conv{j}_b"]
        act = relu(pre)
        argmax = act.argmax(axis=1)
        pooled.append(np.take_along_axis(act, argmax[:, None, :], axis=1)[:, 0, :])
        cache.conv.append((patches, pre, argmax))
    features = np.concatenate(pooled, axis=1)
    cache.features = features

    dropped = features
    if dropout_rng is not None and config.dropout_keep < 1.0:
        cache.mask = (dropout_rng.random(features.shape) < config.dropout_keep) / config.dropout_keep
        dropped = features * cache.mask
    cache.dropped = dropped

    cache.tau = sigmoid(dropped @ params["W_T"].T + params["b_T"])
    cache.highway_pre = dropped @ params["W_H"].T
    cache.highway = relu(cache.highway_pre)
    cache.combined = cache.tau * cache.highway + (1.0 - cache.tau) * dropped
    cache.logits = cache.combined @ params["W_o"] + params["b_o"][0]
    return sigmoid(cache.logits), cache


def forward(
    model: DiscriminatorModel,
    seq: SequenceType[int],
    dropout_rng: Optional[Rng] = None,
) -> Tuple[float, ForwardCache]:
    """
    Probability that ``seq`` is real.

    Args:
        model: Discriminator
        seq: One sequence of length T
        dropout_rng: When given, dropout is applied to the pooled features

    Returns:
        (probability, cached activations)
    """
    tokens = as_token_matrix(seq)
    model.config.vocab.check_tokens(tokens)
    probs, cache = _forward(model, tokens, dropout_rng)
    return float(probs[0]), cache


def predict_proba(model: DiscriminatorModel, tokens: TokenData) -> np.ndarray:
    """Dropout-off probabilities for every row of ``tokens``."""
    tokens = as_token_matrix(tokens)
    model.config.vocab.check_tokens(tokens)
    out = np.empty(tokens.shape[0], dtype=np.float64)
    for start in range(0, tokens.shape[0], PREDICT_CHUNK):
        out[start:start + PREDICT_CHUNK] = _forward(model, tokens[start:start + PREDICT_CHUNK])[0]
    return out


def _cross_entropy(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    # -y log sigma(x) - (1 - y) log(1 - sigma(x)) written in terms of the logit
    return np.logaddexp(0.0, logits) - labels * logits


def _backward(model: DiscriminatorModel, cache: ForwardCache, dlogits: np.ndarray) -> GradientSnapshot:
    params, config = model.params, model.config
    grads = {name: np.zeros_like(params[name]) for name in params}
    dropped, tau, highway = cache.dropped, cache.tau, cache.highway

    grads["W_o"] = cache.combined.T @ dlogits
    grads["b_o"] = np.array([dlogits.sum()])
    dcombined = dlogits[:, None] * params["W_o"][None, :]

    dtau_pre = dcombined * (highway - dropped) * tau * (1.0 - tau)
    dhighway_pre = dcombined * tau * (cache.highway_pre > 0)
    grads["W_T"] = dtau_pre.T @ dropped
    grads["b_T"] = dtau_pre.sum(axis=0)
    grads["W_H"] = dhighway_pre.T @ dropped
    dfeatures = dcombined * (1.0 - tau) + dtau_pre @ params["W_T"] + dhighway_pre @ params["W_H"]
    if cache.mask is not None:
        dfeatures = dfeatures * cache.mask

    tokens = cache.tokens
    demb = np.zeros(tokens.shape + (config.embedding_dim,), dtype=params.dtype)
    offset = 0
    for j, (window, count) in enumerate(config.kernels):
        patches, pre, argmax = cache.conv[j]
        dact = np.zeros_like(pre)
        np.put_along_axis(dact, argmax[:, None, :], dfeatures[:, None, offset:offset + count], axis=1)
        offset += count
        dpre = dact * (pre > 0)
        grads[f"conv{j}_w"] = np.einsum("bpm,bpd->md", dpre, patches).reshape(params[f"conv{j}_w"].shape)
        grads[f"conv{j}_b"] = dpre.sum(axis=(0, 1))
        dpatches = (dpre @ params[f"conv{j}_w"].reshape(count, -1)).reshape(
            pre.shape[0], pre.shape[1], window, config.embedding_dim
        )
        positions = pre.shape[1]
        for w in range(window):
            demb[:, w:w + positions] += dpatches[:, :, w, :]
    np.add.at(grads["embedding"], tokens, demb)
    return grads


def loss_and_grad(
    model: DiscriminatorModel,
    batch: LabeledBatch,
    dropout_rng: Optional[Rng] = None,
) -> float:
    """
    Mean binary cross-entropy of ``batch``; accumulates analytic gradients into the store.

    Raises:
        DataError: If the batch is empty.
    """
    if len(batch) == 0:
        raise DataError("Cannot compute a loss on an empty batch")
    model.config.vocab.check_tokens(batch.sequences)
    probs, cache = _forward(model, batch.sequences, dropout_rng)
    model.params.accumulate(_backward(model, cache, (probs - batch.labels) / len(batch)))
    return float(_cross_entropy(cache.logits, batch.labels).mean())


def cross_entropy(model: DiscriminatorModel, batch: LabeledBatch) -> float:
    """Dropout-off mean cross-entropy without touching gradients."""
    if len(batch) == 0:
        raise DataError("Cannot compute a loss on an empty batch")
    total = 0.0
    for start in range(0, len(batch), PREDICT_CHUNK):
        rows = slice(start, start + PREDICT_CHUNK)
        _, cache = _forward(model, batch.sequences[rows])
        total += float(_cross_entropy(cache.logits, batch.labels[rows]).sum())
    return total / len(batch)


def accuracy(model: DiscriminatorModel, positives: TokenData, negatives: TokenData) -> float:
    """Fraction of sequences classified correctly at threshold 0.5."""
    pos = predict_proba(model, positives)
    neg = predict_proba(model, negatives)
    correct = np.sum(pos > 0.5) + np.sum(neg <= 0.5)
    return float(correct) / (pos.size + neg.size)


def balanced_batch(positives: TokenData, negatives: TokenData) -> LabeledBatch:
    positives = as_token_matrix(positives)
    negatives = as_token_matrix(negatives)
    if positives.shape[0] == 0 or negatives.shape[0] == 0:
        raise DataError("Both positive and negative examples are required")
    return LabeledBatch(
        np.concatenate([positives, negatives]),
        np.concatenate([np.ones(positives.shape[0]), np.zeros(negatives.shape[0])]),
    )


def train_epochs(
    model: DiscriminatorModel,
    positives: TokenData,
    negatives: TokenData,
    k: int,
    opt: OptimizerConfig,
    rng: Rng,
    batch_size: int = 64,
    dropout: bool = True,
) -> float:
    """
    Train for ``k`` shuffled epochs over positives (label 1) and negatives (label 0).

    Returns:
        Mean loss of the last epoch; with k = 0 the dropout-off loss of the untouched model

    Raises:
        DataError: If either class is empty.
    """
    data = balanced_batch(positives, negatives)
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k == 0:
        return cross_entropy(model, data)

    dropout_rng = rng.child("dropout") if dropout else None
    epoch_loss = float("nan")
    for epoch in range(k):
        order = rng.permutation(len(data))
        total = 0.0
        for start in range(0, len(order), batch_size):
            rows = order[start:start + batch_size]
            loss = loss_and_grad(model, LabeledBatch(data.sequences[rows], data.labels[rows]), dropout_rng)
            optimizer_step(model.params, opt)
            total += loss * rows.size
        epoch_loss = total / len(data)
        logger.debug("discriminator epoch %d/%d loss %.5f", epoch + 1, k, epoch_loss)
    model.params.check_finite()
    return epoch_loss
