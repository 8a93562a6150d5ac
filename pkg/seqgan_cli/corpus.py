"""Ingestion of whitespace-tokenized text corpora into fixed-length token id sequences."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence as SequenceType, Tuple, Union

import numpy as np

from seqgan_cli.errors import DataError
from seqgan_cli.generator import START_TOKEN, GeneratorDims, as_token_matrix, read_sequences, write_sequences


logger = logging.getLogger(__name__)

START_SYMBOL = "<s>"
UNK_SYMBOL = "<unk>"


@dataclass(frozen=True)
class CorpusVocab:
    """Token strings indexed by id: id 0 is the start symbol and the last id is UNK."""

    tokens: Tuple[str, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        if len(tokens) < 3 or tokens[0] != START_SYMBOL or tokens[-1] != UNK_SYMBOL:
            raise DataError(f"A vocabulary must start with {START_SYMBOL}, end with {UNK_SYMBOL} and hold a token")
        if len(set(tokens)) != len(tokens):
            raise DataError("Vocabulary tokens must be unique")
        object.__setattr__(self, "_index", {token: i for i, token in enumerate(tokens)})

    @classmethod
    def build(cls, sequences: Iterable[SequenceType[str]]) -> "CorpusVocab":
        """Most frequent tokens first, ties broken lexicographically."""
        counts = Counter(token for seq in sequences for token in seq)
        counts.pop(START_SYMBOL, None)
        counts.pop(UNK_SYMBOL, None)
        ordered = sorted(counts, key=lambda token: (-counts[token], token))
        return cls((START_SYMBOL, *ordered, UNK_SYMBOL))

    @property
    def size(self) -> int:
        """Number of emittable ids (UNK included, start excluded)."""
        return len(self.tokens) - 1

    @property
    def unk_id(self) -> int:
        return len(self.tokens) - 1

    def encode(self, tokens: SequenceType[str]) -> Tuple[List[int], int]:
        """Ids of ``tokens`` and how many of them were mapped to UNK."""
        ids, unknown = [], 0
        for token in tokens:
            i = self._index.get(token, START_TOKEN)
            if i == START_TOKEN:
                i = self.unk_id
                unknown += 1
            ids.append(i)
        return ids, unknown

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.tokens[int(i)] for i in ids]

    def write(self, path: Union[str, Path]) -> Path:
        """One token per line; the line index is the id."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{token}\n" for token in self.tokens), encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: Union[str, Path]) -> "CorpusVocab":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise DataError(f"Cannot read vocabulary {path}: {e.strerror}")
        return cls(tuple(line.strip() for line in lines if line.strip()))


@dataclass
class Corpus:
    sequences: np.ndarray
    vocab: CorpusVocab

    @property
    def seq_len(self) -> int:
        return int(self.sequences.shape[1])

    def __len__(self) -> int:
        return int(self.sequences.shape[0])

    def decode(self, row: int) -> List[str]:
        return self.vocab.decode(self.sequences[row])


@dataclass
class IngestReport:
    """Counts from normalizing one split to length T."""

    split: str
    lines_read: int = 0
    kept: int = 0
    dropped_short: int = 0
    dropped_long: int = 0
    truncated: int = 0
    unknown_tokens: int = 0


def _read_lines(path: Path) -> List[List[str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e.strerror}")
    return [line.split() for line in text.splitlines() if line.strip()]


def normalize_length(
    lines: SequenceType[SequenceType[str]],
    seq_len: int,
    report: IngestReport,
    truncate: bool = True,
) -> List[List[str]]:
    """Drop lines shorter than ``seq_len``; truncate (or drop) longer ones."""
    kept = []
    for tokens in lines:
        report.lines_read += 1
        if len(tokens) < seq_len:
            report.dropped_short += 1
            continue
        if len(tokens) > seq_len:
            if not truncate:
                report.dropped_long += 1
                continue
            report.truncated += 1
        kept.append(list(tokens[:seq_len]))
    report.kept = len(kept)
    return kept


def _encode_split(lines: List[List[str]], vocab: CorpusVocab, report: IngestReport, seq_len: int) -> np.ndarray:
    rows = []
    for tokens in lines:
        ids, unknown = vocab.encode(tokens)
        report.unknown_tokens += unknown
        rows.append(ids)
    if not rows:
        return np.zeros((0, seq_len), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)


def ingest_corpus(
    train_path: Union[str, Path],
    test_path: Union[str, Path],
    seq_len: int,
    vocab: Optional[CorpusVocab] = None,
    truncate: bool = True,
) -> Tuple[Corpus, Corpus, List[IngestReport]]:
    """
    Turn a train/test pair of tokenized text files into fixed-length id sequences.

    Args:
        train_path: Training split, one whitespace-tokenized sequence per line
        test_path: Test split in the same format
        seq_len: Sequence length T
        vocab: Existing vocabulary; built from the normalized training split if omitted
        truncate: Truncate lines longer than T (otherwise drop them)

    Returns:
        (train corpus, test corpus, [train report, test report])

    Raises:
        ValueError: If seq_len < 1.
        DataError: If the training split is empty or no training line reaches length T.
    """
    if seq_len < 1:
        raise ValueError(f"seq_len must be at least 1, got {seq_len}")
    train_path, test_path = Path(train_path), Path(test_path)

    train_lines = _read_lines(train_path)
    if not train_lines:
        raise DataError(f"Training file {train_path} is empty")
    train_report = IngestReport("train")
    train_lines = normalize_length(train_lines, seq_len, train_report, truncate)
    if not train_lines:
        raise DataError(f"No line of {train_path} has at least {seq_len} tokens")

    test_report = IngestReport("test")
    test_lines = normalize_length(_read_lines(test_path), seq_len, test_report, truncate)

    if vocab is None:
        vocab = CorpusVocab.build(train_lines)
    train = Corpus(_encode_split(train_lines, vocab, train_report, seq_len), vocab)
    test = Corpus(_encode_split(test_lines, vocab, test_report, seq_len), vocab)

    for report in (train_report, test_report):
        logger.info(
            "%s: %d lines, %d kept, %d too short, %d truncated, %d unknown tokens",
            report.split, report.lines_read, report.kept, report.dropped_short, report.truncated,
            report.unknown_tokens,
        )
    return train, test, [train_report, test_report]


def write_ingested(directory: Union[str, Path], train: Corpus, test: Corpus) -> Dict[str, Path]:
    """Write ``vocab.txt``, ``train.ids`` and ``test.ids`` to ``directory``."""
    directory = Path(directory)
    return {
        "vocab": train.vocab.write(directory / "vocab.txt"),
        "train": write_sequences(directory / "train.ids", train.sequences),
        "test": write_sequences(directory / "test.ids", test.sequences),
    }


def read_ingested(directory: Union[str, Path]) -> Tuple[Corpus, Corpus]:
    """Load a directory written by write_ingested."""
    directory = Path(directory)
    vocab = CorpusVocab.read(directory / "vocab.txt")
    train = read_sequences(directory / "train.ids")
    dims = GeneratorDims(vocab.size, train.shape[1])
    train = as_token_matrix(train, dims)
    test_path = directory / "test.ids"
    if test_path.exists() and test_path.read_text(encoding="utf-8").strip():
        test = read_sequences(test_path, dims)
    else:
        test = np.zeros((0, dims.seq_len), dtype=np.int64)
    return Corpus(train, vocab), Corpus(test, vocab)
