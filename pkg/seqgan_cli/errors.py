"""Exception types raised by SeqGAN CLI and the exit codes they map to."""

from pathlib import Path
from typing import Optional


class SeqGANError(Exception):
    """Base class for errors raised by seqgan_cli."""

    exit_code = 1


class ConfigError(SeqGANError, ValueError):
    """Invalid experiment configuration."""

    exit_code = 2

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        location = ""
        if key:
            location = f" [{key}"
            if line:
                location += f", line {line}"
            location += "]"
        super().__init__(f"{message}{location}")


class DataError(SeqGANError, ValueError):
    """Unusable input data (empty corpus, malformed sequence file, ...)."""

    exit_code = 3


class DimensionError(SeqGANError, ValueError):
    """Shapes of tensors or models do not agree."""


class HorizonError(SeqGANError, ValueError):
    """A generator was stepped past its sequence length."""


class VocabError(SeqGANError, ValueError):
    """A token id outside the vocabulary."""


class DivergenceError(SeqGANError, ArithmeticError):
    """Training produced a non-finite value and was aborted."""

    exit_code = 4

    def __init__(self, message: str, checkpoint: Optional[Path] = None):
        self.checkpoint = checkpoint
        if checkpoint is not None:
            message += f" (last good checkpoint: {checkpoint})"
        super().__init__(message)
