"""Online interaction between the comparison source, sampler, adversary and victims."""

from __future__ import annotations

import enum
import json
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .aggregators import hodgerank, rank_centrality
from .btl import sample_comparison, target_scores_from_ranking
from .core import (
    Comparison,
    ComparisonGraph,
    Origin,
    PairIndex,
    Ranking,
    check_ranking,
    num_pairs,
    pair_index,
    ranking_from_scores,
)
from .errors import ConfigError, RankSiegeError
from .estimation import DEFAULT_BETA, RobustConfig, SupportSet
from .policy import (
    Baseline,
    PolicyConfig,
    ProposedAdversary,
    StoppingConfig,
    baseline_rule,
    sample_pair,
)
from .sampling import SamplerConfig, StreamSampler


class Victim(enum.Enum):
    HODGERANK = "hodgerank"
    RANKCENTRALITY = "rankcentrality"
    BOTH = "both"

    def members(self) -> list[Victim]:
        if self is Victim.BOTH:
            return [Victim.HODGERANK, Victim.RANKCENTRALITY]
        return [self]


class PolicyKind(enum.Enum):
    PROPOSED = "proposed"
    GREEDY = "greedy"
    STRAIGHT = "straight"
    RANDOM = "random"
    NONE = "none"


AGGREGATORS = {Victim.HODGERANK: hodgerank, Victim.RANKCENTRALITY: rank_centrality}


@dataclass(frozen=True)
class GameConfig:
    """One game. ``stream`` replays recorded comparisons instead of BTL draws.

    When replaying, the stream is cut into ``turns`` nearly equal consecutive
    chunks, one per turn. ``beta`` and ``target_levels`` shape the
    adversary's support set around its target scores.
    """

    n: int
    true_scores: tuple[float, ...]
    target: Ranking
    turns: int
    insert_budget: int = 5
    observe_prob: float = 1.0
    sampler: SamplerConfig = SamplerConfig()
    policy: PolicyKind = PolicyKind.PROPOSED
    victim: Victim = Victim.BOTH
    seed: int = 0
    stream: tuple[Comparison, ...] | None = None
    beta: float = DEFAULT_BETA
    target_levels: tuple[float, ...] | None = None
    robust: RobustConfig = RobustConfig()
    adversary: PolicyConfig = PolicyConfig()
    stopping: StoppingConfig | None = StoppingConfig()

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigError("need at least 2 candidates", "n")
        if len(self.true_scores) != self.n:
            raise ConfigError(f"expected {self.n} scores", "true_scores")
        try:
            check_ranking(self.target, self.n)
        except RankSiegeError as exc:
            raise ConfigError(str(exc), "target") from exc
        if self.turns < 1:
            raise ConfigError("must be >= 1", "turns")
        if self.insert_budget < 0:
            raise ConfigError("must be >= 0", "insert_budget")
        if not 0 <= self.observe_prob <= 1:
            raise ConfigError("must be in [0, 1]", "observe_prob")
        if self.stream is not None and len(self.stream) < self.turns:
            raise ConfigError("stream shorter than the number of turns", "stream")

    def support(self) -> SupportSet:
        levels = None if self.target_levels is None else np.asarray(self.target_levels)
        center = target_scores_from_ranking(self.target, self.beta, levels)
        return SupportSet(center, self.beta)


def mask_knowledge(
    new_comparisons: Sequence[Comparison], observe_prob: float, rng: np.random.Generator
) -> list[bool]:
    """Independently reveal each new comparison with probability ``observe_prob``.

    Returns one flag per comparison. A comparison missed here is never shown
    again; the caller only ever passes fresh comparisons.
    """
    if not 0 <= observe_prob <= 1:
        raise ConfigError("must be in [0, 1]", "observe_prob")
    draws = rng.random(len(new_comparisons))
    return [bool(u < observe_prob) for u in draws]


@dataclass
class TurnRecord:
    turn: int
    original: list[Comparison]
    observed: list[bool]
    inserted: list[Comparison]
    stopped: bool
    weights: np.ndarray


@dataclass
class GameTrace:
    n: int
    target: Ranking
    policy: str
    seed: int
    turns: list[TurnRecord] = field(default_factory=list)
    retained: list[Comparison] = field(default_factory=list)
    final_graph: ComparisonGraph | None = None
    scores: dict[str, list[float]] = field(default_factory=dict)
    rankings: dict[str, Ranking] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def inserted_total(self) -> int:
        return sum(len(t.inserted) for t in self.turns)

    def insertions(self) -> list[Comparison]:
        return [c for t in self.turns for c in t.inserted]

    def to_dict(self) -> dict:
        def comp(c: Comparison) -> list[int]:
            return [c.winner, c.loser]

        return {
            "n": self.n,
            "target": list(self.target),
            "policy": self.policy,
            "seed": self.seed,
            "turns": [
                {
                    "turn": t.turn,
                    "original": [comp(c) for c in t.original],
                    "observed": t.observed,
                    "inserted": [comp(c) for c in t.inserted],
                    "stopped": t.stopped,
                    "weights": t.weights.tolist(),
                }
                for t in self.turns
            ],
            "final_weights": None if self.final_graph is None else self.final_graph.weights.tolist(),
            "scores": self.scores,
            "rankings": {k: list(v) for k, v in self.rankings.items()},
            "errors": self.errors,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _turn_chunks(length: int, turns: int) -> list[np.ndarray]:
    return np.array_split(np.arange(length), turns)


def run_game(config: GameConfig) -> GameTrace:
    """Play every turn and aggregate the final retained comparisons."""
    n = config.n
    seeds = np.random.SeedSequence(config.seed).spawn(4)
    source_rng, mask_rng, sampler_rng, adv_rng = (np.random.default_rng(s) for s in seeds)
    sampler = StreamSampler(config.sampler, sampler_rng)
    true_scores = np.asarray(config.true_scores, dtype=float)

    adversary = None
    fixed_rule = None
    if config.policy is PolicyKind.PROPOSED:
        stopping = config.stopping
        if stopping is not None and stopping.gamma != config.robust.gamma:
            stopping = StoppingConfig(stopping.mode, stopping.chi, stopping.alpha, stopping.robust, config.robust.gamma)
        adversary = ProposedAdversary(config.support(), config.robust, config.adversary, stopping)
    elif config.policy is not PolicyKind.NONE:
        fixed_rule = baseline_rule(Baseline(config.policy.value), config.target, n)

    trace = GameTrace(n, tuple(config.target), config.policy.value, config.seed)
    emitted: list[Comparison] = []
    counts = np.zeros(num_pairs(n), dtype=np.int64)
    knowledge = np.zeros(num_pairs(n))

    def feed(c: Comparison) -> None:
        kept, evicted = sampler.offer()
        emitted.append(c)
        if evicted is not None:
            old = emitted[evicted]
            counts[pair_index(old.winner, old.loser, n)] -= 1
        if kept:
            counts[pair_index(c.winner, c.loser, n)] += 1

    chunks = _turn_chunks(len(config.stream), config.turns) if config.stream is not None else None
    for turn in range(config.turns):
        if chunks is not None:
            original = [config.stream[k] for k in chunks[turn]]
        else:
            i, j = source_rng.choice(n, size=2, replace=False)
            original = [sample_comparison(true_scores, PairIndex.of(int(i), int(j), n), source_rng)]
        for c in original:
            feed(c)
        observed = mask_knowledge(original, config.observe_prob, mask_rng)
        for c, seen in zip(original, observed):
            if seen:
                knowledge[pair_index(c.winner, c.loser, n)] += 1.0

        inserted: list[Comparison] = []
        stopped = False
        if any(observed) and config.policy is not PolicyKind.NONE:
            for _ in range(config.insert_budget):
                if adversary is not None:
                    c = adversary.step(knowledge / knowledge.sum(), adv_rng)
                    if c is None:
                        stopped = True
                        break
                else:
                    c = sample_pair(fixed_rule, n, adv_rng)
                inserted.append(c)
                knowledge[pair_index(c.winner, c.loser, n)] += 1.0
                feed(c)
        trace.turns.append(TurnRecord(turn, original, observed, inserted, stopped, counts.copy()))

    trace.retained = [emitted[k] for k in sorted(sampler.kept)]
    trace.final_graph = ComparisonGraph(n, counts)
    for victim in config.victim.members():
        try:
            scores = AGGREGATORS[victim](trace.final_graph)
        except RankSiegeError as exc:
            trace.errors[victim.value] = str(exc)
            continue
        trace.scores[victim.value] = scores.tolist()
        trace.rankings[victim.value] = ranking_from_scores(scores)
    return trace
