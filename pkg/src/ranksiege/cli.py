"""``ranksiege`` command line: simulate, aggregate and ingest."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import data_io
from .campaign import load_campaign, run_campaign
from .core import ranking_from_scores, weights_from_stream
from .errors import AggregationError, NumericError, RankSiegeError
from .game import AGGREGATORS, Victim

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _victim(name: str) -> Victim:
    try:
        victim = Victim(name.lower())
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown victim {name!r}") from None
    if victim is Victim.BOTH:
        raise argparse.ArgumentTypeError("pick one victim")
    return victim


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_campaign(args.config)

    def progress(done: int, total: int) -> None:
        print(f"\r{done}/{total} games", end="", file=sys.stderr, flush=True)

    records, paths = run_campaign(cfg, args.jobs, None if args.quiet else progress)
    if not args.quiet:
        print(file=sys.stderr)
    failed = sum(r["error"] is not None for r in records)
    for name, path in paths.items():
        print(f"{name}\t{path}")
    if failed:
        print(f"{failed} of {len(records)} runs recorded errors", file=sys.stderr)
    return EXIT_OK


def cmd_aggregate(args: argparse.Namespace) -> int:
    stream = data_io.parse_pairwise_csv(Path(args.stream).read_text())
    n = args.n if args.n is not None else max(data_io.candidate_count(stream), 2)
    scores = AGGREGATORS[args.victim](weights_from_stream(stream, n))
    ranking = ranking_from_scores(scores)
    for pos, c in enumerate(ranking, start=1):
        print(f"{pos}\t{c + 1}\t{scores[c]:.12g}")
    doc = {"victim": args.victim.value, "n": n, "scores": scores.tolist(), "ranking": [c + 1 for c in ranking]}
    print(json.dumps(doc))
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace) -> int:
    text = Path(args.input).read_text()
    if args.format == "preflib":
        election = data_io.parse_preflib(text)
        stream = data_io.ballots_to_comparisons(election.ballots)
        manifest = {"format": "preflib", "n": election.n, "ballots": len(election.ballots),
                    "voters": sum(b.count for b in election.ballots)}
    else:
        stream = data_io.parse_pairwise_csv(text)
        manifest = {"format": "csv", "n": data_io.candidate_count(stream)}
    manifest["comparisons"] = len(stream)
    out = Path(args.out)
    out.write_text(data_io.serialize_stream(stream))
    manifest_path = out.with_name(out.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    print(json.dumps(manifest))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ranksiege", description="Online rank-aggregation manipulation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a campaign from a JSON config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--jobs", type=int, default=1)
    sim.add_argument("--quiet", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    agg = sub.add_parser("aggregate", help="rank a comparison stream")
    agg.add_argument("--stream", required=True)
    agg.add_argument("--victim", required=True, type=_victim)
    agg.add_argument("--n", type=int, help="candidate count (default: largest id seen)")
    agg.set_defaults(func=cmd_aggregate)

    ing = sub.add_parser("ingest", help="convert ballots or pairwise CSV to a stream CSV")
    ing.add_argument("--input", required=True)
    ing.add_argument("--format", required=True, choices=("preflib", "csv"))
    ing.add_argument("--out", required=True)
    ing.set_defaults(func=cmd_ingest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            parser.error("--jobs must be >= 1")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except AggregationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for k, comp in enumerate(exc.components or [], start=1):
            print(f"  component {k}: {' '.join(str(c + 1) for c in comp)}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RankSiegeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
