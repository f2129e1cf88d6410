import csv
import io
import json
import math

import pytest

from kprocess.cli import RunConfig, parse_grid, parse_states, run
from kprocess.plot import plot_aging_csv, plot_convergence_csv


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_closed_form_aging_prints_half(capsys):
    code, out, _ = call(capsys, "aging", "--alpha", "0.5", "--theta", "1", "--closed-form")
    assert code == 0
    assert out == "0.5\n"


def test_entrance_deterministic(capsys):
    args = ("entrance", "--set", "1..10", "--replicas", "100000", "--seed", "7")
    first = call(capsys, *args)[1]
    second = call(capsys, *args)[1]
    assert first == second
    assert "p_value" in first


def test_simulate_partition(tmp_path, capsys):
    path = tmp_path / "traj.csv"
    code, _, _ = call(capsys, "simulate", "--env", "geometric:0.5:3", "--T", "10", "--seed", "1", "--out", str(path))
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert math.fsum(float(r["end"]) - float(r["start"]) for r in rows) == pytest.approx(10.0, abs=1e-12)
    assert rows[-1]["end"] == "10"


@pytest.mark.parametrize("argv", [
    ["aging", "--bogus"],
    ["nonsense"],
    [],
    ["aging", "--alpha", "1.5", "--theta", "1", "--closed-form"],
    ["green", "--lam", "-1"],
    ["entrance", "--set", "a..b"],
    ["aging", "--seed", "-3", "--closed-form"],
    ["aging", "--seed", str(2 ** 64), "--closed-form"],
    ["simulate", "--env", "geometric:2:3"],
    ["simulate", "--y", "99"],
    ["converge", "--n-list", "100,10"],
])
def test_parameter_errors_exit_1(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 1
    assert err.startswith("error:")


def test_budget_exit_2(capsys):
    code, _, err = call(capsys, "simulate", "--env", "geometric:0.5:3", "--T", "100", "--tail-budget", "0.01")
    assert code == 2
    assert "budget" in err


def test_io_exit_3(tmp_path, capsys):
    assert call(capsys, "env", "--out", str(tmp_path / "missing" / "x.json"))[0] == 3
    assert call(capsys, "env", "--config", str(tmp_path / "nope.json"))[0] == 3
    assert call(capsys, "simulate", "--env", str(tmp_path / "nope.json"))[0] == 3


def test_formats_agree(capsys):
    base = ("green", "--lam", "0.5", "--x", "1..4")
    text = call(capsys, *base)[1]
    as_csv = call(capsys, *base, "--format", "csv")[1]
    as_json = json.loads(call(capsys, *base, "--format", "json")[1])
    rows = list(csv.DictReader(io.StringIO(as_csv)))
    assert [float(r["green"]) for r in rows] == [r["green"] for r in as_json["rows"]]
    assert len(text.splitlines()) == 5


def test_mc_formats_agree(capsys):
    base = ("aging", "--alpha", "0.5", "--epsilon", "1e-3", "--t", "1e-2", "--theta", "0.5,1", "--replicas", "500",
            "--seed", "3")
    as_csv = call(capsys, *base, "--format", "csv")[1]
    as_json = json.loads(call(capsys, *base, "--format", "json")[1])
    rows = list(csv.DictReader(io.StringIO(as_csv)))
    assert [float(r["estimate"]) for r in rows] == [r["estimate"] for r in as_json["rows"]]


def test_config_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 0.5, "theta": "2", "closed_form": True}))
    code, out, _ = call(capsys, "aging", "--config", str(cfg))
    assert code == 0 and float(out) == pytest.approx(0.39182655203060727, rel=1e-11)
    code, out, _ = call(capsys, "aging", "--config", str(cfg), "--theta", "1")
    assert out == "0.5\n"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert call(capsys, "aging", "--config", str(cfg))[0] == 1
    cfg.write_text("{not json")
    assert call(capsys, "aging", "--config", str(cfg))[0] == 1


def test_seed_from_environment(capsys, monkeypatch, tmp_path):
    args = ("entrance", "--set", "1..3", "--replicas", "200")
    monkeypatch.setenv("KPROC_SEED", "11")
    a = call(capsys, *args)[1]
    b = call(capsys, *args, "--seed", "11")[1]
    c = call(capsys, *args, "--seed", "12")[1]
    assert a == b != c
    man = tmp_path / "m.json"
    call(capsys, *args, "--manifest", str(man))
    doc = json.loads(man.read_text())
    assert doc["seed"] == 11 and doc["config"]["command"] == "entrance"


def test_manifest_echoes_config(tmp_path, capsys):
    man = tmp_path / "m.json"
    code, _, _ = call(capsys, "aging", "--closed-form", "--theta", "1", "--manifest", str(man), "--seed", "4")
    assert code == 0
    doc = json.loads(man.read_text())
    assert doc["config"]["params"]["theta"] == "1"
    assert len(doc["config_hash"]) == 64
    again = RunConfig.from_json(json.dumps(doc["config"]))
    assert again.seed == 4 and again.command == "aging"


def test_run_config_round_trip():
    cfg = RunConfig("trap", 2 ** 64 - 1, {"alpha": 0.5, "theta": [0.5, 1.0], "plot": None, "t": 1e-2})
    assert RunConfig.from_json(cfg.to_json()) == cfg


def test_grid_parsers():
    assert parse_grid("0.5,1,2") == [0.5, 1.0, 2.0]
    g = parse_grid("log:0.01:100:5")
    assert len(g) == 5 and g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(100)
    assert parse_states("2..4") == [2, 3, 4]
    assert parse_states("1,5") == [1, 5]


@pytest.mark.parametrize("cmd", [
    ["env", "--format", "csv"],
    ["oracle", "--alpha", "0.3", "--theta", "1"],
    ["correlation", "--lam", "1", "--mu", "2"],
    ["correlation", "--mc", "--replicas", "2000"],
    ["green", "--mc", "--replicas", "2000"],
    ["entrance", "--set", "1,2", "--lam", "1", "--replicas", "2000"],
    ["trap", "--n", "100", "--replicas", "500", "--draws", "2"],
    ["trap", "--n", "100", "--replicas", "500", "--phi", "2"],
    ["converge", "--env", "subordinator:0.5:1e-4", "--n-list", "5,50", "--replicas", "8"],
    ["aging", "--estimator", "phi2", "--epsilon", "1e-3", "--t", "0.01", "--theta", "1", "--replicas", "300"],
])
def test_commands_run(capsys, cmd):
    code, out, err = call(capsys, *cmd)
    assert code == 0, err
    assert out


def test_plots(tmp_path, capsys):
    svg = tmp_path / "a.svg"
    code, _, _ = call(capsys, "aging", "--closed-form", "--theta", "log:0.01:100:20", "--plot", str(svg))
    assert code == 0 and svg.read_text().lstrip().startswith("<?xml")
    conv = tmp_path / "c.svg"
    code, _, _ = call(capsys, "converge", "--env", "subordinator:0.5:1e-4", "--n-list", "5,50", "--replicas", "8",
                      "--plot", str(conv))
    assert code == 0 and "<svg" in conv.read_text()


def test_plot_from_csv(tmp_path):
    text = "theta,estimate,se,replicas\n0.5,0.6,0.01,100\n1,0.5,0.01,100\n"
    plot_aging_csv(text, tmp_path / "x.svg", ([0.5, 1.0], [0.61, 0.5]), title="t")
    plot_convergence_csv("n,median_disc\n10,0.3\n100,0.0\n", tmp_path / "y.svg")
    assert (tmp_path / "x.svg").stat().st_size > 0 and (tmp_path / "y.svg").stat().st_size > 0
    with pytest.raises(ValueError):
        plot_aging_csv("theta,value\n", tmp_path / "z.svg")


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "kprocess", "aging", "--closed-form", "--theta", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "0.5\n"
    bad = subprocess.run([sys.executable, "-m", "kprocess", "aging", "--nope"], capture_output=True, text=True)
    assert bad.returncode == 1
