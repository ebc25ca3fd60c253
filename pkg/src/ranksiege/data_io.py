"""Reading and writing ballots and comparison streams.

Files use 1-based candidate ids; everything returned here is 0-based.

PrefLib election files come in two layouts and both are accepted. The
current one has ``# KEY: value`` metadata lines (``# NUMBER ALTERNATIVES``,
``# ALTERNATIVE NAME k``) followed by ``count: c1,c2,...`` ballot lines. The
legacy one starts with the candidate count, one ``id,name`` line per
candidate, a ``voters,total,unique`` line, and ``count,c1,c2,...`` ballots.

Pairwise CSV streams hold one ``winner,loser`` per line. An optional
``# base: 0`` or ``# base: 1`` line picks the id base (1 by default), an
optional ``winner,loser[,origin]`` header names the columns, and a third
``origin`` column may mark adversarial rows.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import Comparison, ComparisonGraph, Origin, num_pairs, pair_index
from .errors import ParseError


@dataclass(frozen=True)
class Ballot:
    count: int
    ranking: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("ballot count must be nonnegative")
        if len(set(self.ranking)) != len(self.ranking):
            raise ValueError(f"repeated candidate in ballot {self.ranking}")

    @property
    def comparisons(self) -> int:
        k = len(self.ranking)
        return self.count * k * (k - 1) // 2


@dataclass(frozen=True)
class Election:
    n: int
    ballots: tuple[Ballot, ...]
    names: dict[int, str] = field(default_factory=dict)

    @property
    def total_comparisons(self) -> int:
        return sum(b.comparisons for b in self.ballots)


_META = re.compile(r"#\s*([^:]+?)\s*:\s*(.*)$")
_NEW_BALLOT = re.compile(r"^\s*(\d+)\s*:\s*(.*)$")


def _parse_ranking(fields: Iterable[str], lineno: int, n: int | None) -> tuple[int, ...]:
    out = []
    for raw in fields:
        tok = raw.strip()
        if not tok:
            continue
        if "{" in tok or "}" in tok:
            raise ParseError("tied candidates are not supported", lineno)
        if not tok.isdigit():
            raise ParseError(f"bad candidate id {tok!r}", lineno)
        cid = int(tok)
        if cid < 1 or (n is not None and cid > n):
            raise ParseError(f"unknown candidate id {cid}", lineno)
        if cid - 1 in out:
            raise ParseError(f"candidate {cid} appears twice", lineno)
        out.append(cid - 1)
    return tuple(out)


def parse_preflib(text: str) -> Election:
    lines = text.splitlines()
    first = next((ln.strip() for ln in lines if ln.strip()), "")
    if first.isdigit():
        return _parse_legacy(lines)
    n: int | None = None
    names: dict[int, str] = {}
    ballots: list[Ballot] = []
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            m = _META.match(s)
            if not m:
                continue
            key, value = m.group(1).upper(), m.group(2).strip()
            if key == "NUMBER ALTERNATIVES":
                if not value.isdigit():
                    raise ParseError(f"bad alternative count {value!r}", lineno)
                n = int(value)
            elif key.startswith("ALTERNATIVE NAME"):
                tail = key.rsplit(" ", 1)[-1]
                if tail.isdigit():
                    names[int(tail) - 1] = value
            continue
        m = _NEW_BALLOT.match(s)
        if not m:
            raise ParseError(f"malformed ballot line {s!r}", lineno)
        ranking = _parse_ranking(m.group(2).split(","), lineno, n)
        ballots.append(Ballot(int(m.group(1)), ranking))
    if n is None:
        n = 1 + max((c for b in ballots for c in b.ranking), default=-1)
    return Election(n, tuple(ballots), names)


def _parse_legacy(lines: Sequence[str]) -> Election:
    body = [(k, ln.strip()) for k, ln in enumerate(lines, start=1) if ln.strip()]
    lineno, head = body[0]
    n = int(head)
    names: dict[int, str] = {}
    if len(body) < n + 2:
        raise ParseError("truncated candidate header", lineno)
    for lineno, s in body[1 : n + 1]:
        cid, _, name = s.partition(",")
        if not cid.strip().isdigit():
            raise ParseError(f"bad candidate line {s!r}", lineno)
        names[int(cid) - 1] = name.strip()
    ballots = []
    for lineno, s in body[n + 2 :]:
        count, _, rest = s.partition(",")
        if not count.strip().isdigit():
            raise ParseError(f"malformed ballot line {s!r}", lineno)
        ballots.append(Ballot(int(count), _parse_ranking(rest.split(","), lineno, n)))
    return Election(n, tuple(ballots), names)


def serialize_preflib(election: Election) -> str:
    out = [f"# NUMBER ALTERNATIVES: {election.n}"]
    for cid in sorted(election.names):
        out.append(f"# ALTERNATIVE NAME {cid + 1}: {election.names[cid]}")
    for b in election.ballots:
        out.append(f"{b.count}: " + ",".join(str(c + 1) for c in b.ranking))
    return "\n".join(out) + "\n"


def ballots_to_comparisons(ballots: Iterable[Ballot]) -> list[Comparison]:
    """Every above/below pair of every ballot, repeated by the ballot count."""
    out: list[Comparison] = []
    for b in ballots:
        r = b.ranking
        block = [Comparison(r[a], r[c]) for a in range(len(r)) for c in range(a + 1, len(r))]
        out.extend(block * b.count)
    return out


def ballots_to_graph(ballots: Iterable[Ballot], n: int) -> ComparisonGraph:
    """Counting shortcut for :func:`ballots_to_comparisons` on large elections."""
    w = np.zeros(num_pairs(n), dtype=np.int64)
    for b in ballots:
        r = b.ranking
        for a in range(len(r)):
            for c in range(a + 1, len(r)):
                w[pair_index(r[a], r[c], n)] += b.count
    return ComparisonGraph(n, w)


def parse_pairwise_csv(text: str) -> list[Comparison]:
    base = 1
    out: list[Comparison] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            m = _META.match(s)
            if m and m.group(1).lower() == "base":
                if m.group(2).strip() not in ("0", "1"):
                    raise ParseError(f"base must be 0 or 1, got {m.group(2)!r}", lineno)
                base = int(m.group(2))
            continue
        fields = [f.strip() for f in s.split(",")]
        if fields[0].lower() == "winner":
            continue
        if len(fields) not in (2, 3):
            raise ParseError(f"expected winner,loser[,origin], got {s!r}", lineno)
        try:
            winner, loser = int(fields[0]) - base, int(fields[1]) - base
        except ValueError:
            raise ParseError(f"non-integer candidate in {s!r}", lineno) from None
        if winner == loser:
            raise ParseError(f"self-comparison {s!r}", lineno)
        if winner < 0 or loser < 0:
            raise ParseError(f"candidate id below base {base} in {s!r}", lineno)
        origin = Origin.ORIGINAL
        if len(fields) == 3:
            try:
                origin = Origin(fields[2].lower())
            except ValueError:
                raise ParseError(f"unknown origin {fields[2]!r}", lineno) from None
        out.append(Comparison(winner, loser, origin))
    return out


def serialize_stream(stream: Iterable[Comparison], with_origin: bool = False) -> str:
    """Canonical 1-based CSV; parses back to the same stream."""
    out = ["winner,loser,origin" if with_origin else "winner,loser"]
    for c in stream:
        row = f"{c.winner + 1},{c.loser + 1}"
        out.append(f"{row},{c.origin.value}" if with_origin else row)
    return "\n".join(out) + "\n"


def candidate_count(stream: Iterable[Comparison]) -> int:
    return 1 + max((max(c.winner, c.loser) for c in stream), default=-1)
