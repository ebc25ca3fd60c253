"""Candidates, ordered pairs, comparison streams, weights and rankings.

Candidates are 0-based integers. Ordered pairs ``(i, j)`` with ``i != j`` are
laid out lexicographically, so for ``n = 3`` the flat order is
``(0,1) (0,2) (1,0) (1,2) (2,0) (2,1)``.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DataError, InvalidPairError

Ranking = tuple[int, ...]


class Origin(enum.Enum):
    ORIGINAL = "original"
    ADVERSARIAL = "adversarial"


@dataclass(frozen=True, slots=True)
class Comparison:
    """One pairwise outcome: ``winner`` beat ``loser``."""

    winner: int
    loser: int
    origin: Origin = Origin.ORIGINAL

    def __post_init__(self) -> None:
        if self.winner == self.loser:
            raise InvalidPairError(f"self-comparison of candidate {self.winner}")
        if self.winner < 0 or self.loser < 0:
            raise InvalidPairError(f"negative candidate in ({self.winner}, {self.loser})")


def num_pairs(n: int) -> int:
    return n * (n - 1)


def pair_index(i: int, j: int, n: int) -> int:
    """Flat lexicographic index of the ordered pair ``(i, j)``."""
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidPairError(f"pair ({i}, {j}) out of range for n={n}")
    if i == j:
        raise InvalidPairError(f"self-pair ({i}, {j})")
    return i * (n - 1) + (j if j < i else j - 1)


def pair_from_index(flat: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`pair_index`."""
    if not 0 <= flat < num_pairs(n):
        raise InvalidPairError(f"flat index {flat} out of range for n={n}")
    i, r = divmod(flat, n - 1)
    return i, (r if r < i else r + 1)


@dataclass(frozen=True, slots=True)
class PairIndex:
    i: int
    j: int
    flat: int

    @classmethod
    def of(cls, i: int, j: int, n: int) -> PairIndex:
        return cls(i, j, pair_index(i, j, n))

    @classmethod
    def from_flat(cls, flat: int, n: int) -> PairIndex:
        i, j = pair_from_index(flat, n)
        return cls(i, j, flat)


@lru_cache(maxsize=64)
def _pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    first = np.repeat(np.arange(n), n - 1)
    second = np.array([j for i in range(n) for j in range(n) if j != i], dtype=np.intp)
    reverse = np.array([pair_index(j, i, n) for i, j in zip(first, second)], dtype=np.intp)
    for arr in (first, second, reverse):
        arr.setflags(write=False)
    return first, second, reverse


def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arrays ``(first, second, reverse)`` over flat pair indices.

    ``first[k], second[k]`` is the k-th ordered pair and ``reverse[k]`` is the
    flat index of the opposite pair.
    """
    if n < 2:
        raise DataError(f"need at least 2 candidates, got {n}")
    return _pair_arrays(n)


@dataclass(frozen=True)
class ComparisonGraph:
    """Integer counts of every ordered pair over ``n`` candidates."""

    n: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.int64, copy=True)
        if w.shape != (num_pairs(self.n),):
            raise DataError(f"expected {num_pairs(self.n)} weights for n={self.n}, got shape {w.shape}")
        if (w < 0).any():
            raise DataError("weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def empty(cls, n: int) -> ComparisonGraph:
        return cls(n, np.zeros(num_pairs(n), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.weights.sum())

    def weight(self, i: int, j: int) -> int:
        return int(self.weights[pair_index(i, j, self.n)])

    def matrix(self) -> np.ndarray:
        """Dense ``n x n`` count matrix with ``W[i, j] = w_ij``."""
        first, second, _ = pair_arrays(self.n)
        out = np.zeros((self.n, self.n), dtype=np.int64)
        out[first, second] = self.weights
        return out

    def normalized(self) -> np.ndarray:
        """Weights divided by their total (the empirical pair distribution)."""
        total = self.total
        if total == 0:
            raise DataError("cannot normalize an empty comparison graph")
        return self.weights / total

    def added(self, stream: Iterable[Comparison]) -> ComparisonGraph:
        extra = weights_from_stream(stream, self.n)
        return ComparisonGraph(self.n, self.weights + extra.weights)


def weights_from_stream(stream: Iterable[Comparison], n: int) -> ComparisonGraph:
    """Count how often each ordered pair occurs in ``stream``."""
    flat = [pair_index(c.winner, c.loser, n) for c in stream]
    counts = np.bincount(np.asarray(flat, dtype=np.intp), minlength=num_pairs(n))
    return ComparisonGraph(n, counts)


def ranking_from_scores(scores: Sequence[float] | np.ndarray) -> Ranking:
    """Candidates sorted by descending score, ties broken by lower index."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise DataError("scores must be a nonempty vector")
    if np.isnan(s).any():
        raise DataError("NaN score")
    order = np.lexsort((np.arange(s.size), -s))
    return tuple(int(k) for k in order)


def check_ranking(order: Sequence[int], n: int | None = None) -> Ranking:
    """Validate a permutation and return it as a tuple."""
    r = tuple(int(k) for k in order)
    size = len(r) if n is None else n
    if sorted(r) != list(range(size)):
        raise DataError(f"not a permutation of 0..{size - 1}: {r}")
    return r


def positions(order: Sequence[int]) -> np.ndarray:
    """``positions(order)[c]`` is the 0-based place of candidate ``c``."""
    pos = np.empty(len(order), dtype=np.intp)
    pos[np.asarray(order, dtype=np.intp)] = np.arange(len(order))
    return pos
