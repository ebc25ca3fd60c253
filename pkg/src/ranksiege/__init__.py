"""Online manipulation of pairwise rank aggregation."""

from .aggregators import hodgerank, rank_centrality
from .core import Comparison, ComparisonGraph, Origin, PairIndex, ranking_from_scores, weights_from_stream
from .errors import (
    AggregationError,
    ConfigError,
    DataError,
    InfeasibleError,
    NumericError,
    ParseError,
    RankSiegeError,
)
from .estimation import RobustConfig, SupportSet, mle, robust_estimate
from .game import GameConfig, GameTrace, PolicyKind, Victim, run_game
from .metrics import MetricReport, kendall_tau, reciprocal_rank

__all__ = [
    "AggregationError",
    "Comparison",
    "ComparisonGraph",
    "ConfigError",
    "DataError",
    "GameConfig",
    "GameTrace",
    "InfeasibleError",
    "MetricReport",
    "NumericError",
    "Origin",
    "PairIndex",
    "ParseError",
    "PolicyKind",
    "RankSiegeError",
    "RobustConfig",
    "SupportSet",
    "Victim",
    "hodgerank",
    "kendall_tau",
    "mle",
    "rank_centrality",
    "ranking_from_scores",
    "reciprocal_rank",
    "robust_estimate",
    "run_game",
    "weights_from_stream",
]

__version__ = "0.1.0"
