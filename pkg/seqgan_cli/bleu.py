"""Sentence BLEU-n against a reference set, with clipped counts and add-one smoothing of higher orders."""

import math
from collections import Counter
from typing import Dict, Hashable, Iterable, List, Sequence as SequenceType, Tuple

import numpy as np

from seqgan_cli.errors import DataError


Tokens = SequenceType[Hashable]


def ngrams(tokens: Tokens, n: int) -> Counter:
    """Counts of the order-``n`` n-grams of ``tokens``."""
    tokens = tuple(tokens)
    return Counter(tokens[i:i + n] for i in range(len(tokens) - n + 1))


def _as_tuple(tokens) -> Tuple:
    if isinstance(tokens, np.ndarray):
        return tuple(tokens.tolist())
    return tuple(tokens)


class BleuScorer:
    """
    BLEU-n scorer with the reference statistics computed once.

    Holds, per order, the maximum count of every n-gram over all references
    (the clipping bound), and the set of reference lengths for the brevity
    penalty. Duplicating a reference changes neither.
    """

    def __init__(self, references: Iterable[Tokens], max_n: int = 2):
        if max_n < 1:
            raise ValueError(f"n must be at least 1, got {max_n}")
        self.max_n = max_n
        self._max_counts: List[Dict[tuple, int]] = [{} for _ in range(max_n)]
        lengths = set()
        for reference in references:
            reference = _as_tuple(reference)
            lengths.add(len(reference))
            for order in range(1, max_n + 1):
                bound = self._max_counts[order - 1]
                for gram, count in ngrams(reference, order).items():
                    if count > bound.get(gram, 0):
                        bound[gram] = count
        if not lengths:
            raise DataError("BLEU needs at least one reference")
        self._ref_lengths = sorted(lengths)

    def _brevity_penalty(self, length: int) -> float:
        closest = min(self._ref_lengths, key=lambda r: (abs(r - length), r))
        if length > closest:
            return 1.0
        return math.exp(1.0 - closest / length)

    def score(self, candidate: Tokens) -> float:
        candidate = _as_tuple(candidate)
        if not candidate:
            return 0.0
        log_total = 0.0
        for order in range(1, self.max_n + 1):
            counts = ngrams(candidate, order)
            bound = self._max_counts[order - 1]
            total = sum(counts.values())
            matched = sum(min(count, bound.get(gram, 0)) for gram, count in counts.items())
            if order == 1 and matched == 0:
                return 0.0
            if matched == 0:
                precision = 1.0 / (total + 1.0)
            else:
                precision = matched / total
            log_total += math.log(precision)
        return self._brevity_penalty(len(candidate)) * math.exp(log_total / self.max_n)

    def score_batch(self, candidates) -> np.ndarray:
        return np.array([self.score(candidate) for candidate in candidates], dtype=np.float64)

    def __call__(self, tokens: np.ndarray) -> np.ndarray:
        return self.score_batch(tokens)


def bleu(candidate: Tokens, references: Iterable[Tokens], n: int) -> float:
    """
    BLEU-n of ``candidate`` against ``references``.

    Args:
        candidate: Candidate tokens
        references: Nonempty collection of reference token sequences
        n: Highest n-gram order

    Returns:
        Score in [0, 1]
    """
    return BleuScorer(references, n).score(candidate)
