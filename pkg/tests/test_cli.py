import json
import subprocess
import sys

import pytest

from qaoa_cluster.cli import main
from qaoa_cluster.compiler import parse_program
from qaoa_cluster.graphs import random_graph, random_weights, save_graph


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.json"
    save_graph(random_weights(random_graph(6, 2), 2), path)
    return path


def test_compile_writes_parseable_program(graph_file, tmp_path, capsys):
    out = tmp_path / "prog.txt"
    assert main(["compile", "--graph", str(graph_file), "--gamma", "0.4", "--beta", "0.1", "--basis", "cz", "--out", str(out)]) == 0
    prog = parse_program(out.read_text())
    assert prog.n_qubits == 6 and prog.count("CZ") > 0


def test_compile_rejects_wrong_angle_count(graph_file):
    assert main(["compile", "--graph", str(graph_file), "--p", "2", "--gamma", "1", "2", "3", "--beta", "0.1"]) == 2


def test_solve_prints_json(graph_file, capsys):
    assert main(["solve", "--graph", str(graph_file), "--shots", "50", "--budget", "4", "--seed", "7"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["bitstring"]) == 6 and out["cut"] <= out["optimum"] + 1e-12


def test_cluster(tmp_path, capsys):
    data = tmp_path / "pts.json"
    data.write_text(json.dumps({"kind": "points", "data": [[0, 0], [0.1, 0], [5, 5], [5, 5.1]]}))
    labels = tmp_path / "labels.json"
    assert main(["cluster", "--data", str(data), "--solver", "brute_force", "--out", str(labels)]) == 0
    assert json.loads(labels.read_text())["labels"] in ([0, 0, 1, 1], [1, 1, 0, 0])


def test_run_then_analyze(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"graph": {"source": "random", "n": 5}, "runs": 2, "shots": 40, "budget": 4}))
    out = tmp_path / "res"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "traces.csv").exists()
    capsys.readouterr()
    assert main(["analyze", "--traces", str(out / "traces.csv")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["runs"] == 2 and report["m"] == 4


def test_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"p": 0}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "p:" in capsys.readouterr().err
    assert main(["solve", "--graph", str(tmp_path / "missing.json")]) == 2
    assert main(["analyze", "--traces", str(tmp_path / "missing.csv")]) == 2


def test_runtime_failure_exit_code(graph_file, monkeypatch):
    import qaoa_cluster.cli as cli

    def boom(*a, **k):
        raise RuntimeError("simulator crashed")

    monkeypatch.setattr(cli, "solve_maxcut", boom)
    assert main(["solve", "--graph", str(graph_file)]) == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qaoa_cluster.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "compile" in proc.stdout
