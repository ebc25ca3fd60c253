import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ranksiege.campaign import load_campaign, parse_campaign, run_campaign, summarize
from ranksiege.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from ranksiege.errors import ConfigError

SMALL = {
    "n": 5,
    "target": [4, 5, 1, 2, 3],
    "turns": 10,
    "insert_budget": 3,
    "observe_prob": 0.8,
    "stream": {"length": 100, "seed": 0, "require_recovery": True},
    "trials": 2,
    "seed": 11,
    "beta": 0.004,
    "gamma": 0.01,
    "policies": ["proposed", "greedy", "none"],
    "victims": ["hodgerank", "rankcentrality"],
    "output_dir": "out",
    "figures": False,
}


def write_config(tmp_path, **changes):
    cfg = dict(SMALL, **changes)
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_writes_tables(tmp_path, monkeypatch):
    monkeypatch.delenv("RANKSIEGE_SEED", raising=False)
    path = write_config(tmp_path, figures=True)
    assert main(["simulate", "--config", str(path), "--quiet"]) == EXIT_OK
    out = tmp_path / "out"
    results = json.loads((out / "results.json").read_text())
    assert len(results["runs"]) == 2 * 3 * 2
    assert {r["seed"] for r in results["runs"]} == {11, 12}
    for name in ("boxplot.csv", "per_turn.csv", "pair_frequency.csv"):
        assert (out / "plotdata" / name).exists()
    assert (out / "figures" / "boxplot_reciprocal_rank.png").stat().st_size > 0

    # summary statistics recompute exactly from results.json
    rows = list(csv.DictReader((out / "summary.csv").open()))
    for row in rows:
        vals = [r[row["metric"]] for r in results["runs"]
                if r["policy"] == row["policy"] and r["victim"] == row["victim"] and r[row["metric"]] is not None]
        q25, med, q75 = np.percentile(vals, [25, 50, 75])
        assert float(row["median"]) == med and float(row["mean"]) == float(np.mean(vals))
        assert float(row["iqr"]) == q75 - q25


def test_results_are_deterministic(tmp_path, monkeypatch):
    monkeypatch.delenv("RANKSIEGE_SEED", raising=False)
    path = write_config(tmp_path, policies=["proposed"])
    main(["simulate", "--config", str(path), "--quiet"])
    first = (tmp_path / "out" / "results.json").read_text()
    main(["simulate", "--config", str(path), "--quiet", "--jobs", "2"])
    assert (tmp_path / "out" / "results.json").read_text() == first


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("RANKSIEGE_SEED", "40")
    cfg = load_campaign(write_config(tmp_path))
    assert cfg.base_seed == 40


def test_no_attack_baseline(tmp_path):
    cfg = parse_campaign(dict(SMALL, trials=1, policies=["none"]), tmp_path, env={})
    records, _ = run_campaign(cfg)
    rows = summarize(records)
    assert {r["policy"] for r in rows} == {"none"}
    assert all(r["count"] == 1 for r in rows)
    assert all(r["inserted"] == 0 for r in records)


@pytest.mark.parametrize(
    "change,field",
    [({"victims": ["dictator"]}, "victims"), ({"trials": 0}, "trials"), ({"policies": ["bribe"]}, "policies"),
     ({"turns": 0}, "turns"), ({"colour": 1}, "colour"), ({"target": [1, 2]}, "target")],
)
def test_bad_config_names_the_field(tmp_path, change, field, capsys):
    with pytest.raises(ConfigError) as err:
        parse_campaign(dict(SMALL, **change), tmp_path, env={})
    assert err.value.field == field
    path = write_config(tmp_path, **change)
    assert main(["simulate", "--config", str(path)]) == EXIT_DATA
    assert field in capsys.readouterr().err


def test_unknown_victim_message(tmp_path):
    with pytest.raises(ConfigError, match="unknown victim"):
        parse_campaign(dict(SMALL, victims=["oracle"]), tmp_path, env={})


def test_aggregate_two_candidates(tmp_path, capsys):
    path = tmp_path / "s.csv"
    path.write_text("1,2\n1,2\n1,2\n2,1\n")
    assert main(["aggregate", "--stream", str(path), "--victim", "rankcentrality"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    np.testing.assert_allclose(doc["scores"], [0.75, 0.25], atol=1e-9)
    assert doc["ranking"] == [1, 2]


def test_aggregate_symmetric_stream(tmp_path, capsys):
    path = tmp_path / "s.csv"
    path.write_text("1,2\n2,1\n2,3\n3,2\n1,3\n3,1\n")
    assert main(["aggregate", "--stream", str(path), "--victim", "hodgerank"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    np.testing.assert_allclose(doc["scores"], 0, atol=1e-12)
    assert doc["ranking"] == [1, 2, 3]


def test_aggregate_disconnected(tmp_path, capsys):
    path = tmp_path / "s.csv"
    path.write_text("")
    assert main(["aggregate", "--stream", str(path), "--victim", "hodgerank"]) == EXIT_DATA
    assert "component" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["aggregate", "--stream", "x.csv", "--victim", "dictator"]) == EXIT_USAGE
    assert main(["ingest", "--input", "x", "--format", "xml", "--out", "y"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_ingest_preflib_manifest(tmp_path):
    src = tmp_path / "tiny.soi"
    src.write_text("# NUMBER ALTERNATIVES: 4\n2: 1,2,3\n3: 4,1\n")
    out = tmp_path / "stream.csv"
    assert main(["ingest", "--input", str(src), "--format", "preflib", "--out", str(out)]) == EXIT_OK
    manifest = json.loads((tmp_path / "stream.csv.manifest.json").read_text())
    assert manifest["n"] == 4 and manifest["comparisons"] == 2 * 3 + 3 * 1
    assert out.read_text().splitlines()[1] == "1,2"


def test_ingest_csv_passthrough(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("winner,loser\n3,1\n1,2\n")
    out = tmp_path / "out.csv"
    assert main(["ingest", "--input", str(src), "--format", "csv", "--out", str(out)]) == EXIT_OK
    assert out.read_text() == src.read_text()


def test_ingest_parse_error_exit(tmp_path, capsys):
    src = tmp_path / "bad.soi"
    src.write_text("1: 2,2,3\n")
    assert main(["ingest", "--input", str(src), "--format", "preflib", "--out", str(tmp_path / "o")]) == EXIT_DATA
    assert "line 1" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("1,2\n2,1\n1,2\n")
    proc = subprocess.run([sys.executable, "-m", "ranksiege", "aggregate", "--stream", str(path), "--victim", "hodgerank"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout.splitlines()[-1])["ranking"] == [1, 2]
