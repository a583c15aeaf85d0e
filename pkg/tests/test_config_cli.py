import csv
import json
import subprocess
import sys

import pytest

from cosrad.cli import main
from cosrad.config import RunConfig, parse_config, parse_grid, parse_overrides
from cosrad.errors import ConfigError


def test_parse_config_types_and_round_trip():
    cfg = parse_config("[run]\nsubcommand = walk\nR = 5\nhold = 0.25\nstrict = yes\nseed = 3\n")
    assert cfg.R == 5 and cfg.hold == 0.25 and cfg.strict is True and cfg.seed == 3
    again = parse_config(cfg.to_ini())
    assert again == cfg and again.digest() == cfg.digest()


@pytest.mark.parametrize("text,where", [
    ("[run]\nbogus = 1\n", "bogus"),
    ("[run]\nR = many\n", "R"),
    ("[other]\nR = 1\n", None),
    ("[run]\nR 1\n", ":2"),
])
def test_parse_config_errors_carry_location(text, where):
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "cfg.ini")
    assert exc.value.location.startswith("cfg.ini")
    if where:
        assert where in exc.value.location


def test_validate():
    with pytest.raises(ConfigError):
        RunConfig(subcommand="percolate").validate()
    with pytest.raises(ConfigError):
        RunConfig(subcommand="walk", p=2.0).validate()
    with pytest.raises(ConfigError):
        RunConfig(subcommand="nope").validate()
    RunConfig(subcommand="percolate", seed=1).validate()


def test_grids_and_overrides():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0.8, 0.9,0.95") == [0.8, 0.9, 0.95]
    with pytest.raises(ValueError):
        parse_grid("1:0:0.1")
    assert parse_overrides(["R=3", "R=4", "strict=true"]) == {"R": 4, "strict": True}
    with pytest.raises(ConfigError):
        parse_overrides(["nope=1"])


def _run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def _stderr_payload(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_exit_codes(tmp_path, capsys):
    assert _run(tmp_path, "percolate") == 2  # missing seed
    assert _stderr_payload(capsys)["status"] == 2
    assert main(["walk", "--config", str(tmp_path / "missing.ini")]) == 2
    capsys.readouterr()
    assert _run(tmp_path, "gen-graph", "--set", "family=free(3)", "--set", "R=30") == 3
    assert _stderr_payload(capsys)["error"] == "ResourceLimitError"
    assert _run(tmp_path, "walk", "--set", "R=2", "--set", "steps=5", "--strict") == 1
    assert _stderr_payload(capsys)["error"] == "TruncationError"


def test_dry_run(tmp_path, capsys):
    assert main(["scan-exponents", "--seed", "1", "--out", str(tmp_path / "x"), "--dry-run"]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert plan["outputs"][-1].endswith("MANIFEST")
    assert not (tmp_path / "x").exists()


def test_gen_graph_and_walk_growth(tmp_path):
    assert _run(tmp_path / "g", "gen-graph", "--set", "family=free(2)", "--set", "subgroup=<a>",
                "--set", "R=4") == 0
    assert (tmp_path / "g" / "graph.txt").read_text().startswith("# cosrad graph v1")
    assert _run(tmp_path / "w", "walk-growth", "--set", f"graph={tmp_path / 'g' / 'graph.txt'}",
                "--set", "n_max=4") == 0
    s = json.loads((tmp_path / "w" / "summary.json").read_text())
    assert s["log_growth"] == pytest.approx(1.3862943611198906)


def test_walk_exact_and_monte_carlo(tmp_path):
    assert _run(tmp_path / "e", "walk", "--set", "R=4", "--set", "steps=2") == 0
    rows = list(csv.DictReader(open(tmp_path / "e" / "distribution.csv")))
    root = [r for r in rows if r["word"] == ""][0]
    assert float(root["probability"]) == pytest.approx(0.25)
    assert _run(tmp_path / "m", "walk", "--seed", "3", "--set", "method=monte-carlo",
                "--set", "samples=500", "--set", "steps=2") == 0
    manifest = (tmp_path / "m" / "MANIFEST").read_text()
    assert "artifact.distribution.csv=" in manifest and "config_sha256=" in manifest


def test_cospectral_and_two_three(tmp_path):
    assert _run(tmp_path / "c", "cospectral", "--set", "R=6", "--set", "n_max=4",
                "--set", "target=coset", "--set", "subgroup=<a>", "--set", "spectral=true") == 0
    s = json.loads((tmp_path / "c" / "summary.json").read_text())
    assert 0.8 < s["estimate"]["value"] < 0.9
    assert "schreier_spectral_radius" in s
    assert _run(tmp_path / "t", "two-three", "--set", "k_max=9", "--strict") == 0
    assert json.loads((tmp_path / "t" / "report.json").read_text())["ok"] is True


def test_percolate(tmp_path):
    assert _run(tmp_path, "percolate", "--seed", "2", "--set", "family=free-abelian(2)",
                "--set", "R=5", "--set", "p=0.5") == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["approximate"] is True and s["root_cluster_size"] >= 1


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "cosrad.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("cosrad")


def test_cospectral_identity_on_free_group(tmp_path):
    assert _run(tmp_path, "cospectral", "--seed", "1", "--set", "R=12", "--set", "n_max=12",
                "--set", "target=identity") == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert abs(s["estimate"]["value"] - 3 ** 0.5 / 2) <= 0.02
