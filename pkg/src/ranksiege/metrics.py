"""Agreement between the adversary's target ranking and a produced ranking."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .core import check_ranking, positions
from .errors import DataError


def _pair_up(target: Sequence[int], produced: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if sorted(target) != sorted(produced):
        raise DataError("rankings cover different candidate sets")
    return check_ranking(target), check_ranking(produced)


def reciprocal_rank(target: Sequence[int], produced: Sequence[int]) -> float:
    """``1 / position`` of the target's winner inside ``produced`` (1-based)."""
    target, produced = _pair_up(target, produced)
    return 1.0 / (produced.index(target[0]) + 1)


def kendall_tau(target: Sequence[int], produced: Sequence[int]) -> float:
    """Classic Kendall rank correlation in [-1, 1]."""
    target, produced = _pair_up(target, produced)
    n = len(target)
    if n < 2:
        raise DataError("Kendall tau needs at least 2 candidates")
    a = positions(target)
    b = positions(produced)
    upper = np.triu_indices(n, k=1)
    agree = np.sign(np.subtract.outer(a, a)[upper] * np.subtract.outer(b, b)[upper])
    return float(agree.sum()) / (n * (n - 1) / 2)


def tau_to_unit(tau: float) -> float:
    """Map the classic coefficient onto [0, 1] (fraction of concordant pairs)."""
    return 0.5 * (tau + 1.0)


@dataclass(frozen=True)
class MetricReport:
    reciprocal_rank: float
    kendall_tau: float

    @classmethod
    def compare(cls, target: Sequence[int], produced: Sequence[int]) -> MetricReport:
        return cls(reciprocal_rank(target, produced), kendall_tau(target, produced))
