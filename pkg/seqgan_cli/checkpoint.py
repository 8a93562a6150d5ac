"""Versioned text checkpoints for parameter stores."""

from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from seqgan_cli.errors import DataError, DimensionError
from seqgan_cli.numerics import DEFAULT_DTYPE, ParameterStore


CHECKPOINT_HEADER = "seqgan-ckpt v1"


def _format_shape(shape) -> str:
    return "x".join(str(d) for d in shape)


def _parse_shape(text: str, line_no: int) -> tuple:
    try:
        shape = tuple(int(d) for d in text.split("x"))
    except ValueError:
        raise DataError(f"Invalid shape '{text}' on line {line_no}")
    if not shape or any(d < 1 for d in shape):
        raise DataError(f"Invalid shape '{text}' on line {line_no}")
    return shape


def save_checkpoint(store: ParameterStore, path: Union[str, Path]) -> Path:
    """
    Write every parameter of ``store`` to ``path``.

    Each line is ``name dim0xdim1 v0 v1 ...`` with values in shortest
    round-trip decimal form, so loading reproduces the values bit for bit.

    Args:
        store: Parameters to save
        path: Destination file (parent directories are created)

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines: List[str] = [CHECKPOINT_HEADER]
    for name, entry in store.entries():
        values = " ".join(repr(float(v)) for v in entry.value.ravel())
        lines.append(f"{name} {_format_shape(entry.value.shape)} {values}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_checkpoint(
    path: Union[str, Path],
    store: Optional[ParameterStore] = None,
    dtype=DEFAULT_DTYPE,
) -> ParameterStore:
    """
    Read a checkpoint.

    Args:
        path: Checkpoint file
        store: If given, values are loaded into it in place and names/shapes must match
        dtype: Dtype of a freshly created store

    Returns:
        The populated store

    Raises:
        DataError: If the file is malformed.
        DimensionError: If it does not match ``store``.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != CHECKPOINT_HEADER:
        raise DataError(f"{path} is not a '{CHECKPOINT_HEADER}' checkpoint")

    loaded = ParameterStore(store.dtype if store is not None else dtype)
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 3:
            raise DataError(f"Truncated parameter entry on line {line_no} of {path}")
        name, shape = parts[0], _parse_shape(parts[1], line_no)
        values = np.array([float(v) for v in parts[2:]], dtype=loaded.dtype)
        if values.size != int(np.prod(shape)):
            raise DataError(f"Parameter '{name}' on line {line_no} has {values.size} values, expected shape {shape}")
        loaded.add(name, values.reshape(shape))

    if store is None:
        return loaded
    if loaded.shapes() != store.shapes():
        raise DimensionError(f"Checkpoint {path} does not match the model's parameters")
    store.load_values(loaded)
    return store
