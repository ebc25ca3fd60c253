"""Bernoulli and reservoir sampling of comparison streams."""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TypeVar

import numpy as np

from .errors import DataError

T = TypeVar("T")


class SamplerKind(enum.Enum):
    IDENTITY = "identity"
    BERNOULLI = "bernoulli"
    RESERVOIR = "reservoir"


@dataclass(frozen=True)
class SamplerConfig:
    kind: SamplerKind = SamplerKind.IDENTITY
    param: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind is SamplerKind.BERNOULLI and not 0 <= self.param <= 1:
            raise DataError(f"Bernoulli rate must be in [0, 1], got {self.param}")
        if self.kind is SamplerKind.RESERVOIR and (self.param < 1 or int(self.param) != self.param):
            raise DataError(f"reservoir capacity must be a positive integer, got {self.param}")

    @classmethod
    def bernoulli(cls, rate: float, seed: int = 0) -> SamplerConfig:
        return cls(SamplerKind.BERNOULLI, rate, seed)

    @classmethod
    def reservoir(cls, capacity: int, seed: int = 0) -> SamplerConfig:
        return cls(SamplerKind.RESERVOIR, capacity, seed)


def bernoulli_indices(length: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= rate <= 1:
        raise DataError(f"Bernoulli rate must be in [0, 1], got {rate}")
    return np.flatnonzero(rng.random(length) < rate)


def reservoir_indices(length: int, capacity: int, rng: np.random.Generator) -> np.ndarray:
    """Positions kept by Algorithm R, in stream order.

    Item ``t >= capacity`` draws a slot uniformly from ``0..t`` and replaces
    that slot when it is below ``capacity``. A slot ends up holding the last
    item that drew it, so the whole pass reduces to one vectorized draw.
    """
    if capacity < 1:
        raise DataError(f"reservoir capacity must be >= 1, got {capacity}")
    if length <= capacity:
        return np.arange(length)
    t = np.arange(capacity, length)
    slot = rng.integers(0, t + 1)
    hit = slot < capacity
    held = np.arange(capacity)
    # later items overwrite earlier ones, so each slot keeps its largest hit
    np.maximum.at(held, slot[hit], t[hit])
    return np.sort(held)


def bernoulli_sample(stream: Sequence[T], rate: float, rng: np.random.Generator) -> list[T]:
    return [stream[k] for k in bernoulli_indices(len(stream), rate, rng)]


def reservoir_sample(stream: Sequence[T], capacity: int, rng: np.random.Generator) -> list[T]:
    return [stream[k] for k in reservoir_indices(len(stream), capacity, rng)]


def sample_indices(length: int, config: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    if config.kind is SamplerKind.IDENTITY:
        return np.arange(length)
    if config.kind is SamplerKind.BERNOULLI:
        return bernoulli_indices(length, config.param, rng)
    return reservoir_indices(length, int(config.param), rng)


def density(sample: Sequence[T], membership: Callable[[T], bool]) -> float:
    if len(sample) == 0:
        raise DataError("density of an empty sample")
    return sum(1 for item in sample if membership(item)) / len(sample)


@dataclass(frozen=True)
class RepresentativenessResult:
    approx_ok: bool
    gap: float
    sample_size: int


def representativeness_trial(
    stream: Sequence[T],
    sampler: SamplerConfig,
    membership: Callable[[T], bool] | np.ndarray,
    epsilon: float,
    rng: np.random.Generator | None = None,
) -> RepresentativenessResult:
    """Compare a subset's density in the sample against the whole stream.

    ``membership`` may be a predicate or a precomputed boolean mask over the
    stream, which avoids re-evaluating the predicate across many trials.
    """
    if rng is None:
        rng = np.random.default_rng(sampler.seed)
    if callable(membership):
        mask = np.fromiter((bool(membership(c)) for c in stream), dtype=bool, count=len(stream))
    else:
        mask = np.asarray(membership, dtype=bool)
    idx = sample_indices(len(mask), sampler, rng)
    if idx.size == 0:
        raise DataError("sampler emitted no elements")
    gap = abs(float(mask.mean()) - float(mask[idx].mean()))
    return RepresentativenessResult(gap <= epsilon, gap, int(idx.size))


def bernoulli_rate_bound(epsilon: float, delta: float, sources: int, length: int) -> float:
    """Smallest Bernoulli rate the dynamic-stream guarantee asks for."""
    return 10.0 * (math.log(sources) + math.log(4.0 / delta)) / (epsilon**2 * length)


def reservoir_capacity_bound(epsilon: float, delta: float, sources: int) -> int:
    """Smallest reservoir capacity the dynamic-stream guarantee asks for."""
    return math.ceil(10.0 * (math.log(sources) + math.log(2.0 / delta)) / epsilon**2)


class StreamSampler:
    """Online form of the samplers, fed one item at a time by the game loop."""

    def __init__(self, config: SamplerConfig, rng: np.random.Generator) -> None:
        self.config = config
        self.rng = rng
        self.seen = 0
        self.kept: list[int] = []

    def offer(self) -> tuple[bool, int | None]:
        """Offer the next item; returns ``(kept, evicted position)``."""
        t = self.seen
        self.seen += 1
        kind = self.config.kind
        if kind is SamplerKind.IDENTITY:
            self.kept.append(t)
            return True, None
        if kind is SamplerKind.BERNOULLI:
            if self.rng.random() < self.config.param:
                self.kept.append(t)
                return True, None
            return False, None
        capacity = int(self.config.param)
        if t < capacity:
            self.kept.append(t)
            return True, None
        slot = int(self.rng.integers(0, t + 1))
        if slot < capacity:
            evicted = self.kept[slot]
            self.kept[slot] = t
            return True, evicted
        return False, None
