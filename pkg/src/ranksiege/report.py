"""Figures drawn from the plot-data CSV files of a campaign."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_LABELS = {"reciprocal_rank": "R.Rank", "kendall_tau": "K.tau"}


def _read(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def _value(s: str) -> float | None:
    return None if s in ("", "None", "nan") else float(s)


def boxplots(rows: list[dict], out_dir: Path) -> list[Path]:
    paths = []
    victims = sorted({r["victim"] for r in rows})
    policies = list(dict.fromkeys(r["policy"] for r in rows))
    for metric, label in _LABELS.items():
        fig, axes = plt.subplots(1, len(victims), figsize=(4.5 * len(victims), 3.6), squeeze=False)
        for ax, victim in zip(axes[0], victims):
            data = [
                [v for r in rows if r["policy"] == p and r["victim"] == victim
                 if (v := _value(r[metric])) is not None]
                for p in policies
            ]
            ax.boxplot(data, showmeans=True)
            ax.set_xticks(range(1, len(policies) + 1), policies, rotation=20)
            ax.set_title(victim)
            ax.set_ylabel(label)
        fig.tight_layout()
        path = out_dir / f"boxplot_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def per_turn(rows: list[dict], out_dir: Path) -> list[Path]:
    series: dict[tuple[str, str], list[tuple[int, float | None, float | None]]] = defaultdict(list)
    for r in rows:
        series[(r["victim"], r["policy"])].append((int(r["turn"]), _value(r["mean_rr"]), _value(r["mean_kt"])))
    victims = sorted({v for v, _ in series})
    paths = []
    for col, (metric, label) in enumerate(_LABELS.items(), start=1):
        fig, axes = plt.subplots(1, len(victims), figsize=(4.5 * len(victims), 3.6), squeeze=False)
        for ax, victim in zip(axes[0], victims):
            for (v, policy), pts in series.items():
                if v != victim:
                    continue
                pts = sorted(p for p in pts if p[col] is not None)
                ax.plot([p[0] for p in pts], [p[col] for p in pts], label=policy)
            ax.set_title(victim)
            ax.set_xlabel("turn")
            ax.set_ylabel(f"mean {label}")
            ax.legend(fontsize="small")
        fig.tight_layout()
        path = out_dir / f"per_turn_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def pair_histograms(rows: list[dict], out_dir: Path) -> list[Path]:
    by_policy: dict[str, list[dict]] = defaultdict(list)
    for r in rows:
        by_policy[r["policy"]].append(r)
    paths = []
    for policy, recs in by_policy.items():
        top = sorted(recs, key=lambda r: -int(r["count"]))[:20]
        fig, ax = plt.subplots(figsize=(7, 3.4))
        ax.bar(range(len(top)), [int(r["count"]) for r in top])
        ax.set_xticks(range(len(top)), [f"{r['winner']}>{r['loser']}" for r in top], rotation=60, fontsize="small")
        ax.set_ylabel("insertions")
        ax.set_title(f"{policy}: most inserted comparisons")
        fig.tight_layout()
        path = out_dir / f"pair_frequency_{policy}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def render_figures(paths: dict[str, Path], out_dir: Path) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    figures = [
        *boxplots(_read(paths["boxplot"]), out_dir),
        *per_turn(_read(paths["per_turn"]), out_dir),
        *pair_histograms(_read(paths["pairs"]), out_dir),
    ]
    return {f"figure:{p.stem}": p for p in figures}
