"""Dense numerics for SeqGAN CLI: activations, parameter storage, optimizers, seeded RNG and gradient checking."""

import logging
import zlib
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, Mapping, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from seqgan_cli.errors import DimensionError, DivergenceError


logger = logging.getLogger(__name__)

PRECISIONS = {
    "float64": np.float64,
    "float32": np.float32,
}
DEFAULT_DTYPE = np.float64
OPTIMIZER_KINDS = ("sgd", "adam", "rmsprop")

# Floor applied to probabilities before taking logs.
PROB_FLOOR = 1e-300

GradientSnapshot = Dict[str, np.ndarray]


def resolve_dtype(precision: Union[str, type, np.dtype, None]) -> np.dtype:
    """Map a precision name ("float64"/"float32") or dtype to a numpy dtype."""
    if precision is None:
        return np.dtype(DEFAULT_DTYPE)
    if isinstance(precision, str):
        if precision not in PRECISIONS:
            raise ValueError(f"Unknown precision '{precision}'. Expected one of {sorted(PRECISIONS)}.")
        return np.dtype(PRECISIONS[precision])
    return np.dtype(precision)


def check_finite(name: str, array: np.ndarray) -> None:
    """Raise DivergenceError if ``array`` holds NaN or Inf."""
    if not np.all(np.isfinite(array)):
        raise DivergenceError(f"Non-finite values in '{name}'")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Matrix product with an explicit shape check.

    Args:
        a: Array of shape (..., n)
        b: Array of shape (n, ...)

    Returns:
        The product ``a @ b``

    Raises:
        DimensionError: If the inner dimensions disagree.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim == 0 or b.ndim == 0:
        raise DimensionError("matmul requires at least 1-D operands")
    inner_b = b.shape[0] if b.ndim == 1 else b.shape[-2]
    if a.shape[-1] != inner_b:
        raise DimensionError(f"Cannot multiply shapes {a.shape} and {b.shape}")
    return np.matmul(a, b)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis``."""
    x = np.asarray(x)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=axis, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return expit(x)


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def safe_log(p: np.ndarray) -> np.ndarray:
    """Natural log with probabilities floored at PROB_FLOOR."""
    return np.log(np.maximum(p, PROB_FLOOR))


class Rng:
    """
    Counter-based deterministic random stream with labeled children.

    Built on numpy's Philox bit generator. ``child(label)`` derives an
    independent stream from the same seed, so consumers that draw from
    distinct children never perturb each other.
    """

    def __init__(self, seed: int, path: Tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self.path = tuple(path)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    @staticmethod
    def _label_key(label: Union[str, int]) -> int:
        return zlib.crc32(str(label).encode("utf-8"))

    def child(self, label: Union[str, int]) -> "Rng":
        """Return the independent child stream named ``label``."""
        return Rng(self.seed, self.path + (self._label_key(label),))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def random(self, size=None) -> np.ndarray:
        return self._generator.random(size)

    def normal(self, size=None, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
        return self._generator.normal(loc, scale, size)

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        return self._generator.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self._generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def categorical(self, probs: np.ndarray) -> np.ndarray:
        """
        Draw one index per row of ``probs`` by inverting the row CDF.

        Args:
            probs: Array of shape (rows, categories), rows summing to 1

        Returns:
            Integer array of shape (rows,)
        """
        probs = np.atleast_2d(probs)
        cdf = np.cumsum(probs, axis=1)
        draws = self._generator.random((probs.shape[0], 1))
        index = np.sum(draws * cdf[:, -1:] >= cdf, axis=1)
        return np.minimum(index, probs.shape[1] - 1)

    def spawn_seed(self) -> int:
        """Draw a fresh 63-bit seed from this stream."""
        return int(self._generator.integers(0, 2**63 - 1))


@dataclass
class OptimizerConfig:
    """Optimizer hyperparameters for one model."""

    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: Optional[float] = None
    l2_coefficient: float = 0.0

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ValueError(f"Unknown optimizer '{self.kind}'. Expected one of {list(OPTIMIZER_KINDS)}.")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0 < self.beta1 < 1 or not 0 < self.beta2 < 1:
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive when set")
        if self.l2_coefficient < 0:
            raise ValueError("l2_coefficient must be non-negative")


@dataclass
class ParameterEntry:
    value: np.ndarray
    grad: np.ndarray
    state: Dict[str, np.ndarray] = field(default_factory=dict)


class ParameterStore:
    """Ordered named parameters with paired gradient buffers and optimizer state."""

    def __init__(self, dtype=DEFAULT_DTYPE):
        self.dtype = np.dtype(dtype)
        self.step_count = 0
        self._entries: Dict[str, ParameterEntry] = {}

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        """
        Register a parameter.

        Args:
            name: Unique parameter name
            value: Initial value (copied and cast to the store dtype)

        Returns:
            The stored value array

        Raises:
            ValueError: If the name is already registered.
        """
        if name in self._entries:
            raise ValueError(f"Parameter '{name}' already registered")
        array = np.array(value, dtype=self.dtype)
        if array.ndim == 0:
            raise DimensionError(f"Parameter '{name}' must have at least one dimension")
        self._entries[name] = ParameterEntry(array, np.zeros_like(array))
        return array

    def __getitem__(self, name: str) -> np.ndarray:
        return self._entries[name].value

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> Iterator[Tuple[str, ParameterEntry]]:
        return iter(self._entries.items())

    def grad(self, name: str) -> np.ndarray:
        return self._entries[name].grad

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: entry.value.shape for name, entry in self._entries.items()}

    @property
    def num_scalars(self) -> int:
        return int(sum(entry.value.size for entry in self._entries.values()))

    def accumulate(self, grads: Mapping[str, np.ndarray], scale: float = 1.0) -> None:
        """Add ``scale * grads[name]`` into each named gradient buffer."""
        for name, g in grads.items():
            entry = self._entries[name]
            if g.shape != entry.grad.shape:
                raise DimensionError(f"Gradient for '{name}' has shape {g.shape}, expected {entry.grad.shape}")
            entry.grad += scale * g

    def zero_grad(self) -> None:
        for entry in self._entries.values():
            entry.grad.fill(0.0)

    def grad_snapshot(self) -> GradientSnapshot:
        return {name: entry.grad.copy() for name, entry in self._entries.items()}

    def value_snapshot(self) -> GradientSnapshot:
        return {name: entry.value.copy() for name, entry in self._entries.items()}

    def copy(self) -> "ParameterStore":
        """Deep copy of values; gradients and optimizer state start fresh."""
        clone = ParameterStore(self.dtype)
        for name, entry in self._entries.items():
            clone.add(name, entry.value)
        return clone

    def load_values(self, other: "ParameterStore") -> None:
        """Copy values from ``other`` into this store in place."""
        if self.shapes() != other.shapes():
            raise DimensionError("Parameter stores have different names or shapes")
        for name, entry in self._entries.items():
            entry.value[...] = other[name]

    def freeze(self) -> None:
        """Mark every value read-only."""
        for entry in self._entries.values():
            entry.value.setflags(write=False)

    def check_finite(self) -> None:
        for name, entry in self._entries.items():
            check_finite(name, entry.value)

    def global_grad_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(entry.grad**2)) for entry in self._entries.values())))


def clip_global_norm(store: ParameterStore, max_norm: float) -> float:
    """Rescale all gradients so their joint L2 norm is at most ``max_norm``; returns the pre-clip norm."""
    norm = store.global_grad_norm()
    if norm > max_norm:
        scale = max_norm / norm
        for _, entry in store.entries():
            entry.grad *= scale
    return norm


def _prepare_update(store: ParameterStore, cfg: OptimizerConfig, step_index: int) -> None:
    if step_index < 1:
        raise ValueError(f"step_index must be a positive integer, got {step_index}")
    if cfg.clip_norm is not None:
        clip_global_norm(store, cfg.clip_norm)
    if cfg.l2_coefficient > 0:
        # decoupled weight decay
        decay = 1.0 - cfg.learning_rate * cfg.l2_coefficient
        for _, entry in store.entries():
            entry.value *= decay


def sgd_step(store: ParameterStore, cfg: OptimizerConfig, step_index: int) -> None:
    _prepare_update(store, cfg, step_index)
    for _, entry in store.entries():
        entry.value -= cfg.learning_rate * entry.grad
    store.zero_grad()


def rmsprop_step(store: ParameterStore, cfg: OptimizerConfig, step_index: int) -> None:
    _prepare_update(store, cfg, step_index)
    for _, entry in store.entries():
        g = entry.grad
        v = entry.state.setdefault("v", np.zeros_like(entry.value))
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        entry.value -= cfg.learning_rate * g / (np.sqrt(v) + cfg.epsilon)
    store.zero_grad()


def adam_step(store: ParameterStore, cfg: OptimizerConfig, step_index: int) -> None:
    """
    Bias-corrected Adam update, in place.

    Gradient clipping and decoupled L2 decay (when configured) are applied
    before the moment update. Gradients are zeroed afterwards.

    Args:
        store: Parameters with populated gradients
        cfg: Optimizer configuration
        step_index: 1-based update counter used for bias correction

    Raises:
        ValueError: If step_index is not positive.
    """
    _prepare_update(store, cfg, step_index)
    correction1 = 1.0 - cfg.beta1**step_index
    correction2 = 1.0 - cfg.beta2**step_index
    for _, entry in store.entries():
        g = entry.grad
        m = entry.state.setdefault("m", np.zeros_like(entry.value))
        v = entry.state.setdefault("v", np.zeros_like(entry.value))
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        entry.value -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    store.zero_grad()


_STEP_FUNCTIONS = {
    "sgd": sgd_step,
    "adam": adam_step,
    "rmsprop": rmsprop_step,
}


def optimizer_step(store: ParameterStore, cfg: OptimizerConfig) -> None:
    """Advance the store's step counter and apply one update of kind ``cfg.kind``."""
    store.step_count += 1
    _STEP_FUNCTIONS[cfg.kind](store, cfg, store.step_count)


def finite_diff_grad(
    f: Callable[[ParameterStore], float],
    store: ParameterStore,
    h: float = 1e-5,
) -> GradientSnapshot:
    """
    Central-difference gradient of a scalar function of the store.

    Args:
        f: Deterministic function of the store's current values
        store: Parameters to perturb (restored afterwards)
        h: Perturbation size

    Returns:
        Mapping from parameter name to an array of partial derivatives

    Raises:
        DivergenceError: If ``f`` returns a non-finite value; the message names the parameter.
    """
    snapshot: GradientSnapshot = {}
    for name, entry in store.entries():
        value = entry.value
        grad = np.zeros_like(value)
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + h
            upper = float(f(store))
            value[index] = original - h
            lower = float(f(store))
            value[index] = original
            if not (np.isfinite(upper) and np.isfinite(lower)):
                raise DivergenceError(f"Non-finite objective while perturbing '{name}'{list(index)}")
            grad[index] = (upper - lower) / (2.0 * h)
        snapshot[name] = grad
    return snapshot


def max_relative_error(
    analytic: Union[GradientSnapshot, np.ndarray],
    numeric: Union[GradientSnapshot, np.ndarray],
    floor: float = 1e-6,
) -> float:
    """Largest elementwise |a - n| / max(|a|, |n|, floor) over all entries."""
    if isinstance(analytic, dict):
        if set(analytic) != set(numeric):
            raise DimensionError("Gradient snapshots name different parameters")
        return max(
            (max_relative_error(analytic[name], numeric[name], floor) for name in analytic),
            default=0.0,
        )
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise DimensionError(f"Cannot compare shapes {a.shape} and {n.shape}")
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / scale))
