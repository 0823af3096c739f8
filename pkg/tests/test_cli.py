import json
import subprocess
import sys

import pytest

from ca3sim import cli
from ca3sim.patterns import parse_pattern_set

SMALL = """regime: auto
variant: minimal
n_pyrs: 16
K_list: [2]
exposures: 3
seeds: [1, 2]
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(SMALL)
    return path


def test_validate_writes_nothing(config, tmp_path):
    before = set(tmp_path.iterdir())
    assert cli.main(["validate", str(config)]) == 0
    assert set(tmp_path.iterdir()) == before


def test_run_writes_report_and_table(config, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", str(config), "--out", str(out), "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert [r["seed"] for r in report["cells"][0]["seeds"]] == [1, 2]
    assert (out / "trials.csv").read_text().startswith("regime,variant")


def test_seed_offset(config, tmp_path):
    out = tmp_path / "o"
    cli.main(["run", str(config), "--out", str(out), "--seed-offset", "10", "--quiet"])
    report = json.loads((out / "report.json").read_text())
    assert [r["seed"] for r in report["cells"][0]["seeds"]] == [11, 12]


def test_stats_flags_corruption(config, tmp_path, capsys):
    out = tmp_path / "out"
    cli.main(["run", str(config), "--out", str(out), "--quiet"])
    path = out / "report.json"
    assert cli.main(["stats", str(path)]) == 0
    report = json.loads(path.read_text())
    report["cells"][0]["aggregates"]["jaccard"]["mean"] += 0.5
    path.write_text(json.dumps(report))
    capsys.readouterr()
    assert cli.main(["stats", str(path)]) == 1
    assert "jaccard.mean" in capsys.readouterr().err


def test_config_error_exit_and_path(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("mask_frac: 3\n")
    assert cli.main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert str(bad) in err and "mask_frac" in err


def test_runtime_error_exit(config, monkeypatch, capsys):
    def boom(*a, **k):
        raise RuntimeError("simulated failure")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["run", str(config), "--quiet"]) == 2
    assert "simulated failure" in capsys.readouterr().err


def test_patterns_subcommand(tmp_path):
    path = tmp_path / "p.txt"
    assert cli.main(["patterns", "--kind", "sequence", "-N", "12", "-K", "3", "--out", str(path)]) == 0
    pset = parse_pattern_set(path.read_text())
    assert pset.kind == "sequence" and pset.K == 3 and pset.n == 12


def test_module_entry_point(config):
    proc = subprocess.run([sys.executable, "-m", "ca3sim", "validate", str(config)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
