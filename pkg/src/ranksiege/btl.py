"""Bradley-Terry-Luce kernel in the exponential-margin form.

The probability that ``i`` beats ``j`` is ``1 / (1 + exp(theta_j - theta_i))``.
Positive strengths ``s`` map to scores via ``theta = log(s)``.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.special import expit, log_expit

from .core import (
    Comparison,
    ComparisonGraph,
    Origin,
    PairIndex,
    Ranking,
    check_ranking,
    num_pairs,
    pair_arrays,
)
from .errors import DataError, InvalidPairError


def btl_prob(scores: np.ndarray, i: int, j: int) -> float:
    """Probability that candidate ``i`` beats ``j``.

    The value for ``i < j`` is computed directly and the other orientation is
    derived as its complement, so the two always add up to one.
    """
    if i == j:
        raise InvalidPairError(f"self-pair ({i}, {j})")
    if i < j:
        return float(expit(scores[i] - scores[j]))
    return 1.0 - float(expit(scores[j] - scores[i]))


def pair_probs(scores: np.ndarray) -> np.ndarray:
    """``g_ij`` for every ordered pair in flat order."""
    first, second, _ = pair_arrays(len(scores))
    return expit(scores[first] - scores[second])


def pair_log_probs(scores: np.ndarray) -> np.ndarray:
    """``log g_ij`` for every ordered pair, stable for large margins."""
    first, second, _ = pair_arrays(len(scores))
    return log_expit(scores[first] - scores[second])


def strengths_to_scores(strengths: Sequence[float] | np.ndarray) -> np.ndarray:
    s = np.asarray(strengths, dtype=float)
    if (s <= 0).any():
        raise DataError("strengths must be positive")
    return np.log(s)


def scores_to_strengths(scores: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.exp(np.asarray(scores, dtype=float))


def sample_comparison(scores: np.ndarray, pair: PairIndex, rng: np.random.Generator) -> Comparison:
    """Draw the outcome of comparing ``pair.i`` with ``pair.j``."""
    if rng.random() < btl_prob(scores, pair.i, pair.j):
        return Comparison(pair.i, pair.j, Origin.ORIGINAL)
    return Comparison(pair.j, pair.i, Origin.ORIGINAL)


def sample_stream(scores: np.ndarray, size: int, rng: np.random.Generator) -> list[Comparison]:
    """``size`` BTL outcomes over uniformly drawn unordered pairs."""
    n = len(scores)
    a = rng.integers(0, n, size=size)
    b = rng.integers(0, n - 1, size=size)
    b = np.where(b >= a, b + 1, b)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    p_lo = expit(np.asarray(scores)[lo] - np.asarray(scores)[hi])
    lo_wins = rng.random(size) < p_lo
    return [
        Comparison(int(x), int(y)) if w else Comparison(int(y), int(x))
        for x, y, w in zip(lo, hi, lo_wins)
    ]


def _as_weight_vector(weights: ComparisonGraph | np.ndarray, n: int) -> np.ndarray:
    if isinstance(weights, ComparisonGraph):
        if weights.n != n:
            raise DataError(f"graph has n={weights.n}, scores have n={n}")
        return weights.weights.astype(float)
    w = np.asarray(weights, dtype=float)
    if w.shape != (num_pairs(n),):
        raise DataError(f"expected {num_pairs(n)} pair weights, got shape {w.shape}")
    return w


def log_likelihood(scores: np.ndarray, weights: ComparisonGraph | np.ndarray) -> float:
    """``sum_ij w_ij log g_ij(theta)``; weights may be counts or fractions."""
    theta = np.asarray(scores, dtype=float)
    w = _as_weight_vector(weights, len(theta))
    return float(w @ pair_log_probs(theta))


def log_likelihood_grad(scores: np.ndarray, weights: ComparisonGraph | np.ndarray) -> np.ndarray:
    theta = np.asarray(scores, dtype=float)
    n = len(theta)
    w = _as_weight_vector(weights, n)
    return pair_weighted_grad(theta, w)


def pair_weighted_grad(theta: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Gradient of ``sum_k coef_k log g_k(theta)``."""
    n = len(theta)
    first, second, _ = pair_arrays(n)
    push = coef * expit(theta[second] - theta[first])
    return np.bincount(first, push, minlength=n) - np.bincount(second, push, minlength=n)


def arithmetic_levels(n: int) -> np.ndarray:
    """Default target magnitudes ``(n, n-1, ..., 1)`` normalized to sum 1."""
    levels = np.arange(n, 0, -1, dtype=float)
    return levels / levels.sum()


def target_scores_from_ranking(
    target: Sequence[int],
    beta: float = 0.05,
    levels: Sequence[float] | None = None,
) -> np.ndarray:
    """Simplex scores whose descending order is ``target``.

    ``levels`` are the magnitudes assigned from best to worst; they default to
    an arithmetic progression and are renormalized onto the simplex. ``beta``
    is the squared radius of the support ball that will be centered here and
    is only validated.
    """
    order: Ranking = check_ranking(target)
    n = len(order)
    if n < 2:
        raise DataError("target ranking needs at least 2 candidates")
    if not beta > 0:
        raise DataError(f"beta must be positive, got {beta}")
    vals = arithmetic_levels(n) if levels is None else np.asarray(levels, dtype=float)
    if vals.shape != (n,) or (vals < 0).any() or not (np.diff(vals) < 0).all():
        raise DataError("levels must be nonnegative and strictly decreasing")
    vals = vals / vals.sum()
    theta = np.empty(n)
    theta[np.asarray(order)] = vals
    return theta
