"""Seeded multi-trial campaigns: config schema, execution and result tables.

Config files are JSON objects. Candidate ids inside them are 1-based.

    {
      "n": 10,
      "true_ranking": [10, 9, 8, 7, 6, 5, 4, 3, 2, 1],  # or "true_scores": [...]
      "target": [8, 9, 10, 7, 5, 6, 4, 3, 2, 1],
      "turns": 75, "insert_budget": 5, "observe_prob": 0.8,
      "stream": {"length": 744, "seed": 0, "require_recovery": true},
      "trials": 50, "seed": 0,
      "policies": ["proposed", "greedy", "straight", "random"],
      "victims": ["hodgerank", "rankcentrality"],
      "output_dir": "out"
    }

``stream`` may also be ``{"path": "file.csv"}`` or ``null`` (one fresh BTL
draw per turn). A synthesized stream is fixed across trials and shuffled
per trial. The remaining optional keys are listed in ``_OPTIONAL``.
"""

from __future__ import annotations

import csv
import json
import math
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .aggregators import hodgerank, rank_centrality
from .btl import sample_stream, strengths_to_scores
from .core import (
    Comparison,
    ComparisonGraph,
    num_pairs,
    pair_from_index,
    pair_index,
    ranking_from_scores,
    weights_from_stream,
)
from .data_io import parse_pairwise_csv
from .errors import ConfigError, RankSiegeError
from .estimation import DEFAULT_BETA, RobustConfig
from .game import AGGREGATORS, GameConfig, PolicyKind, Victim, run_game
from .metrics import kendall_tau, reciprocal_rank
from .policy import PolicyConfig, StopMode, StoppingConfig
from .sampling import SamplerConfig, SamplerKind

SEED_ENV = "RANKSIEGE_SEED"
RECOVERY_ATTEMPTS = 1000

_REQUIRED = ("n", "target", "turns", "trials", "policies", "victims", "output_dir")
_OPTIONAL = {
    "true_scores", "true_ranking", "insert_budget", "observe_prob", "stream", "shuffle",
    "seed", "beta", "gamma", "target_levels", "adversary", "stopping", "sampler",
    "series_stride", "figures",
}


@dataclass(frozen=True)
class StreamSpec:
    length: int | None = None
    seed: int = 0
    require_recovery: bool = False
    path: str | None = None


@dataclass(frozen=True)
class CampaignConfig:
    game: GameConfig
    trials: int
    policies: tuple[PolicyKind, ...]
    victims: tuple[Victim, ...]
    output_dir: Path
    stream: StreamSpec | None = None
    shuffle: bool = True
    series_stride: int = 1
    figures: bool = True
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def base_seed(self) -> int:
        return self.game.seed


def _field(raw: dict, key: str, kind: Callable, default=None):
    if key not in raw:
        if default is None:
            raise ConfigError("missing required field", key)
        return default
    try:
        return kind(raw[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value {raw[key]!r}: {exc}", key) from None


def _enum_list(raw: dict, key: str, kind: type, label: str) -> tuple:
    values = raw.get(key)
    if not isinstance(values, list) or not values:
        raise ConfigError("must be a nonempty list", key)
    out = []
    for v in values:
        try:
            out.append(kind(str(v).lower()))
        except ValueError:
            raise ConfigError(f"unknown {label} {v!r}", key) from None
    return tuple(dict.fromkeys(out))


def _one_based(values, key: str, n: int) -> tuple[int, ...]:
    if not isinstance(values, list) or sorted(values) != list(range(1, n + 1)):
        raise ConfigError(f"must be a permutation of 1..{n}", key)
    return tuple(int(v) - 1 for v in values)


def _sub(raw: dict, key: str, kind: type, convert: dict[str, Callable] | None = None):
    body = raw.get(key)
    if body is None:
        return None
    if not isinstance(body, dict):
        raise ConfigError("must be an object or null", key)
    convert = convert or {}
    try:
        return kind(**{k: convert.get(k, lambda v: v)(v) for k, v in body.items()})
    except (TypeError, ValueError, RankSiegeError) as exc:
        raise ConfigError(str(exc), key) from None


def parse_campaign(raw: dict, base_dir: Path | None = None, env: dict | None = None) -> CampaignConfig:
    """Validate a decoded JSON config; errors name the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "<root>")
    for key in raw:
        if key not in _OPTIONAL and key not in _REQUIRED:
            raise ConfigError("unknown field", key)
    env = os.environ if env is None else env
    n = _field(raw, "n", int)
    if n < 2:
        raise ConfigError("need at least 2 candidates", "n")
    target = _one_based(raw.get("target"), "target", n)
    if "true_scores" in raw:
        true_scores = raw["true_scores"]
        if not isinstance(true_scores, list) or len(true_scores) != n:
            raise ConfigError(f"expected {n} numbers", "true_scores")
        true_scores = tuple(float(s) for s in true_scores)
    else:
        order = _one_based(raw.get("true_ranking", list(range(n, 0, -1))), "true_ranking", n)
        strengths = np.empty(n)
        strengths[list(order)] = np.arange(n, 0, -1)
        true_scores = tuple(strengths_to_scores(strengths).tolist())

    seed = _field(raw, "seed", int, 0)
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"not an integer: {env[SEED_ENV]!r}", SEED_ENV) from None

    stream = _sub(raw, "stream", StreamSpec)
    if stream is not None and (stream.path is None) == (stream.length is None):
        raise ConfigError("give exactly one of 'path' or 'length'", "stream")
    if stream is not None and stream.path is not None and base_dir is not None:
        stream = replace(stream, path=str(base_dir / stream.path))

    sampler = _sub(raw, "sampler", SamplerConfig, {"kind": lambda v: SamplerKind(str(v).lower())})
    stopping = _sub(raw, "stopping", StoppingConfig, {"mode": lambda v: StopMode(str(v).upper())})
    adversary = _sub(raw, "adversary", PolicyConfig) or PolicyConfig()
    levels = raw.get("target_levels")
    try:
        game = GameConfig(
            n=n,
            true_scores=true_scores,
            target=target,
            turns=_field(raw, "turns", int),
            insert_budget=_field(raw, "insert_budget", int, 5),
            observe_prob=_field(raw, "observe_prob", float, 1.0),
            sampler=sampler or SamplerConfig(),
            seed=seed,
            beta=_field(raw, "beta", float, DEFAULT_BETA),
            target_levels=None if levels is None else tuple(float(v) for v in levels),
            robust=RobustConfig(gamma=_field(raw, "gamma", float, 0.0)),
            adversary=adversary,
            stopping=stopping,
        )
        game.support()
    except ConfigError:
        raise
    except (RankSiegeError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc), "target_levels" if levels is not None else "beta") from None

    trials = _field(raw, "trials", int)
    if trials < 1:
        raise ConfigError("must be >= 1", "trials")
    stride = _field(raw, "series_stride", int, 1)
    if stride < 1:
        raise ConfigError("must be >= 1", "series_stride")
    out = Path(str(raw["output_dir"]))
    if base_dir is not None and not out.is_absolute():
        out = base_dir / out
    return CampaignConfig(
        game=game,
        trials=trials,
        policies=_enum_list(raw, "policies", PolicyKind, "policy"),
        victims=_enum_list(raw, "victims", Victim, "victim"),
        output_dir=out,
        stream=stream,
        shuffle=bool(raw.get("shuffle", True)),
        series_stride=stride,
        figures=bool(raw.get("figures", True)),
        raw=dict(raw, seed=seed),
    )


def load_campaign(path: str | Path, env: dict | None = None) -> CampaignConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "<root>") from None
    return parse_campaign(raw, path.parent, env)


def recovers_order(graph: ComparisonGraph, truth: tuple[int, ...]) -> bool:
    try:
        return all(ranking_from_scores(agg(graph)) == truth for agg in (hodgerank, rank_centrality))
    except RankSiegeError:
        return False


def base_stream(cfg: CampaignConfig) -> tuple[tuple[Comparison, ...] | None, int | None]:
    """The campaign's recorded stream and, when synthesized, the seed that made it."""
    spec = cfg.stream
    if spec is None:
        return None, None
    if spec.path is not None:
        stream = parse_pairwise_csv(Path(spec.path).read_text())
        if stream and max(max(c.winner, c.loser) for c in stream) >= cfg.game.n:
            raise ConfigError("stream mentions more candidates than n", "stream")
        return tuple(stream), None
    scores = np.asarray(cfg.game.true_scores)
    truth = ranking_from_scores(scores)
    for seed in range(spec.seed, spec.seed + RECOVERY_ATTEMPTS):
        stream = sample_stream(scores, spec.length, np.random.default_rng(seed))
        if not spec.require_recovery or recovers_order(weights_from_stream(stream, cfg.game.n), truth):
            return tuple(stream), seed
    raise ConfigError(f"no stream recovering the true order in {RECOVERY_ATTEMPTS} seeds", "stream")


@dataclass(frozen=True)
class Task:
    trial: int
    seed: int
    policy: PolicyKind
    game: GameConfig
    victims: tuple[Victim, ...]
    stride: int


def _victim_field(victims: tuple[Victim, ...]) -> Victim:
    return victims[0] if len(victims) == 1 else Victim.BOTH


def _safe_metrics(graph: ComparisonGraph, victim: Victim, target) -> tuple[float | None, float | None]:
    try:
        produced = ranking_from_scores(AGGREGATORS[victim](graph))
    except RankSiegeError:
        return None, None
    return reciprocal_rank(target, produced), kendall_tau(target, produced)


def run_task(task: Task) -> list[dict]:
    """One game; one record per victim. Failures become records, not exceptions."""
    try:
        trace = run_game(task.game)
    except RankSiegeError as exc:
        return [
            {"trial": task.trial, "seed": task.seed, "policy": task.policy.value, "victim": v.value,
             "reciprocal_rank": None, "kendall_tau": None, "ranking": None, "inserted": None,
             "error": f"{type(exc).__name__}: {exc}", "series": [], "pairs": []}
            for v in task.victims
        ]
    n = task.game.n
    pairs = np.zeros(num_pairs(n), dtype=np.int64)
    for c in trace.insertions():
        pairs[pair_index(c.winner, c.loser, n)] += 1
    turns = list(range(task.stride - 1, len(trace.turns), task.stride))
    if turns and turns[-1] != len(trace.turns) - 1:
        turns.append(len(trace.turns) - 1)
    records = []
    for victim in task.victims:
        series = [
            [t + 1, *_safe_metrics(ComparisonGraph(n, trace.turns[t].weights), victim, task.game.target)]
            for t in turns
        ]
        ranking = trace.rankings.get(victim.value)
        records.append({
            "trial": task.trial,
            "seed": task.seed,
            "policy": task.policy.value,
            "victim": victim.value,
            "reciprocal_rank": None if ranking is None else reciprocal_rank(task.game.target, ranking),
            "kendall_tau": None if ranking is None else kendall_tau(task.game.target, ranking),
            "ranking": None if ranking is None else [r + 1 for r in ranking],
            "inserted": trace.inserted_total,
            "error": trace.errors.get(victim.value),
            "series": series,
            "pairs": pairs.tolist(),
        })
    return records


def build_tasks(cfg: CampaignConfig, stream: tuple[Comparison, ...] | None) -> list[Task]:
    tasks = []
    for trial in range(cfg.trials):
        seed = cfg.base_seed + trial
        trial_stream = stream
        if stream is not None and cfg.shuffle:
            order = np.random.default_rng(seed).permutation(len(stream))
            trial_stream = tuple(stream[k] for k in order)
        for policy in cfg.policies:
            game = replace(cfg.game, policy=policy, seed=seed, stream=trial_stream,
                           victim=_victim_field(cfg.victims))
            tasks.append(Task(trial, seed, policy, game, cfg.victims, cfg.series_stride))
    return tasks


def execute(tasks: list[Task], jobs: int = 1, progress: Callable[[int, int], None] | None = None) -> list[dict]:
    """Run tasks, in parallel when ``jobs > 1``; output order follows ``tasks``."""
    out: list[dict] = []
    if jobs <= 1:
        results: Iterable[list[dict]] = map(run_task, tasks)
        for k, recs in enumerate(results, start=1):
            out.extend(recs)
            if progress:
                progress(k, len(tasks))
        return out
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for k, recs in enumerate(pool.map(run_task, tasks), start=1):
            out.extend(recs)
            if progress:
                progress(k, len(tasks))
    return out


METRICS = ("reciprocal_rank", "kendall_tau")
SUMMARY_FIELDS = ("policy", "victim", "metric", "count", "failures", "median", "mean", "q25", "q75", "iqr")


def summarize(records: list[dict]) -> list[dict]:
    """Median, mean and interquartile range per (policy, victim, metric) cell."""
    cells: dict[tuple[str, str], list[dict]] = {}
    for r in records:
        cells.setdefault((r["policy"], r["victim"]), []).append(r)
    rows = []
    for (policy, victim), recs in cells.items():
        for metric in METRICS:
            vals = np.array([r[metric] for r in recs if r[metric] is not None], dtype=float)
            row = {"policy": policy, "victim": victim, "metric": metric, "count": len(vals),
                   "failures": len(recs) - len(vals)}
            if len(vals):
                q25, med, q75 = np.percentile(vals, [25, 50, 75])
                row.update(median=float(med), mean=float(vals.mean()), q25=float(q25),
                           q75=float(q75), iqr=float(q75 - q25))
            else:
                row.update(median=math.nan, mean=math.nan, q25=math.nan, q75=math.nan, iqr=math.nan)
            rows.append(row)
    return rows


def per_turn_series(records: list[dict]) -> list[dict]:
    buckets: dict[tuple[str, str, int], list[list]] = {}
    for r in records:
        for turn, rr, kt in r["series"]:
            buckets.setdefault((r["policy"], r["victim"], turn), []).append([rr, kt])
    rows = []
    for (policy, victim, turn), vals in buckets.items():
        ok = np.array([v for v in vals if v[0] is not None], dtype=float).reshape(-1, 2)
        stats = (
            {"median_rr": float(np.median(ok[:, 0])), "mean_rr": float(ok[:, 0].mean()),
             "median_kt": float(np.median(ok[:, 1])), "mean_kt": float(ok[:, 1].mean())}
            if len(ok) else dict.fromkeys(("median_rr", "mean_rr", "median_kt", "mean_kt"), math.nan)
        )
        rows.append({"policy": policy, "victim": victim, "turn": turn, "count": len(ok), **stats})
    return rows


def pair_frequencies(records: list[dict], n: int) -> list[dict]:
    """Inserted comparisons per ordered pair, summed over trials (1-based ids)."""
    totals: dict[str, np.ndarray] = {}
    seen: set[tuple[str, int]] = set()
    for r in records:
        if not r["pairs"] or r["policy"] == PolicyKind.NONE.value or (r["policy"], r["trial"]) in seen:
            continue
        seen.add((r["policy"], r["trial"]))
        totals.setdefault(r["policy"], np.zeros(num_pairs(n), dtype=np.int64))
        totals[r["policy"]] += np.asarray(r["pairs"], dtype=np.int64)
    rows = []
    for policy, counts in totals.items():
        for flat, count in enumerate(counts.tolist()):
            i, j = pair_from_index(flat, n)
            rows.append({"policy": policy, "winner": i + 1, "loser": j + 1, "count": count})
    return rows


def _write_csv(path: Path, fields: Iterable[str], rows: Iterable[dict]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def write_outputs(cfg: CampaignConfig, records: list[dict], stream_seed: int | None,
                  stream_length: int | None) -> dict[str, Path]:
    out = cfg.output_dir
    plot = out / "plotdata"
    plot.mkdir(parents=True, exist_ok=True)
    results = {
        "config": cfg.raw,
        "stream": {"length": stream_length, "seed": stream_seed},
        "runs": [{k: v for k, v in r.items() if k not in ("series", "pairs")} for r in records],
    }
    paths = {"results": out / "results.json", "summary": out / "summary.csv"}
    paths["results"].write_text(json.dumps(results, indent=2) + "\n")
    _write_csv(paths["summary"], SUMMARY_FIELDS, summarize(records))

    paths["boxplot"] = plot / "boxplot.csv"
    _write_csv(paths["boxplot"], ("policy", "victim", "trial", *METRICS),
               ({k: r[k] for k in ("policy", "victim", "trial", *METRICS)} for r in records))
    paths["per_turn"] = plot / "per_turn.csv"
    _write_csv(paths["per_turn"],
               ("policy", "victim", "turn", "count", "median_rr", "mean_rr", "median_kt", "mean_kt"),
               per_turn_series(records))
    paths["pairs"] = plot / "pair_frequency.csv"
    _write_csv(paths["pairs"], ("policy", "winner", "loser", "count"), pair_frequencies(records, cfg.game.n))
    return paths


def run_campaign(cfg: CampaignConfig, jobs: int = 1,
                 progress: Callable[[int, int], None] | None = None) -> tuple[list[dict], dict[str, Path]]:
    stream, stream_seed = base_stream(cfg)
    records = execute(build_tasks(cfg, stream), jobs, progress)
    paths = write_outputs(cfg, records, stream_seed, None if stream is None else len(stream))
    if cfg.figures:
        from .report import render_figures

        paths.update(render_figures(paths, cfg.output_dir / "figures"))
    return records, paths
