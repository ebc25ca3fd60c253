"""Exception hierarchy shared by the library and mapped to CLI exit codes."""

from __future__ import annotations


class RankSiegeError(Exception):
    """Base class for every error raised on purpose by this package."""


class InvalidPairError(RankSiegeError, ValueError):
    """An ordered pair with equal or out-of-range candidate indices."""


class DataError(RankSiegeError, ValueError):
    """Malformed input data (streams, ballots, configs)."""


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ConfigError(DataError):
    def __init__(self, message: str, field: str | None = None) -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class AggregationError(RankSiegeError):
    """A victim aggregator cannot produce scores for the given graph."""

    def __init__(self, message: str, components: list[list[int]] | None = None) -> None:
        self.components = components or []
        super().__init__(message)


class NumericError(RankSiegeError, ArithmeticError):
    """An iterative solver failed or produced non-finite values."""

    def __init__(self, message: str, residual: float | None = None) -> None:
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class InfeasibleError(NumericError):
    """A constrained subproblem has an empty feasible set."""
