import csv
import io
import subprocess
import sys

import pytest

from driftsfc.cli import main
from driftsfc.drift import CSV_HEADER, graph_drift
from driftsfc.network import load_graph

from conftest import CONFIGS


def test_graphs_then_drift(tmp_path, capsys, family):
    assert main(["graphs", "--config", str(CONFIGS / "smoke.toml"), "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert main(["drift", str(tmp_path / "G0.json"), str(tmp_path / "G3.json"), "--header"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == CSV_HEADER
    row = next(csv.DictReader(io.StringIO("\n".join(out))))
    want = graph_drift(load_graph(tmp_path / "G0.json"), load_graph(tmp_path / "G3.json"))
    assert float(row["delta_g"]) == pytest.approx(want.delta_g, rel=1e-12)


def test_drift_with_weights_file(tmp_path, capsys):
    main(["graphs", "--config", str(CONFIGS / "smoke.toml"), "--out", str(tmp_path)])
    (tmp_path / "w.toml").write_text("[weights]\nw_spec = 0.0\nw_cap = 1.0\nw_bw = 0.0\nw_edit = 0.0\n")
    capsys.readouterr()
    assert main(["drift", str(tmp_path / "G0.json"), str(tmp_path / "G1.json"), "--weights", str(tmp_path / "w.toml")]) == 0
    (tmp_path / "bad.toml").write_text("w_colour = 1.0\n")
    assert main(["drift", str(tmp_path / "G0.json"), str(tmp_path / "G1.json"), "--weights", str(tmp_path / "bad.toml")]) == 2


def test_trace_and_estimate(tmp_path, capsys):
    cfg = str(CONFIGS / "smoke.toml")
    assert main(["trace", "--config", cfg, "--graph", "G0", "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["trace", "--config", cfg, "--graph", "G3", "--out", str(tmp_path / "b.csv")]) == 0
    capsys.readouterr()
    assert main(["estimate", str(tmp_path / "a.csv"), str(tmp_path / "a.csv")]) == 0
    assert float(capsys.readouterr().out) == 0.0
    assert main(["estimate", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--kappa", "0.5"]) == 0
    assert float(capsys.readouterr().out) >= 0.0


def test_run_writes_outputs(tmp_path, capsys):
    assert main(["run", "--config", str(CONFIGS / "smoke.toml"), "--out", str(tmp_path)]) == 0
    assert "blocking" in capsys.readouterr().out
    for name in ("decisions.csv", "aggregates.csv", "summary.csv"):
        assert (tmp_path / name).stat().st_size > 0


def test_errors_exit_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
    (tmp_path / "bad.toml").write_text('[scenario]\nid = "load_sweep"\nplanners = ["oracle"]\n')
    assert main(["run", "--config", str(tmp_path / "bad.toml"), "--out", str(tmp_path)]) == 2
    assert main(["drift", str(tmp_path / "x.json"), str(tmp_path / "y.json")]) == 2
    assert main(["estimate", str(tmp_path / "x.csv"), str(tmp_path / "y.csv")]) == 2


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "driftsfc.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("run", "drift", "estimate", "graphs", "trace"):
        assert cmd in out.stdout
