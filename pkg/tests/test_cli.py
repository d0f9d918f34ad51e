import json

import pytest

from nsk1d.cli import main

FAILURE = {
    "scenario": "jump", "alpha": 0.9, "gamma": 2, "c": 0.0, "admissibility": False, "mollification": 10,
    "profile": {"rho_left": 0.02, "rho_right": 2.0, "u_amplitude": 400, "u_width": 0.3},
    "grid": {"m_min": -10, "m_max": 10, "n_cells": 256},
    "solver": {"formulation": "primitive", "t_end": 0.5, "cfl": 1.0, "max_dt_halvings": 0},
}
SMALL = {"scenario": "gaussian", "alpha": 0.4, "gamma": 2, "c": 0.04,
         "grid": {"n_cells": 64}, "solver": {"t_end": 0.05}}


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_check_laws_all_satisfied(capsys):
    assert main(["check-laws", "--alpha", "0.4", "--gamma", "2"]) == 0
    doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert all(doc[f"h{k}"] for k in range(1, 8))


def test_check_laws_flags_h7(capsys):
    assert main(["check-laws", "--alpha", "0.6", "--gamma", "2"]) == 0
    doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert [f"h{k}" for k in range(1, 8) if not doc[f"h{k}"]] == ["h7"]


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", _write(tmp_path, SMALL), "--out", str(out)]) == 0
    assert {"config.json", "series.csv", "summary.json", "manifest.json"} <= {p.name for p in out.iterdir()}
    assert main(["report", "--in", str(out)]) == 0
    assert "window checks" in capsys.readouterr().out
    assert (out / "report.csv").exists()


def test_engineered_vacuum_exits_two_with_dump(tmp_path, capsys):
    out = tmp_path / "fail"
    assert main(["run", "--config", _write(tmp_path, FAILURE), "--out", str(out)]) == 2
    err = json.loads((out / "failure" / "error.json").read_text())
    assert err["type"] == "VacuumError"
    rows = (out / "failure" / "last_state.csv").read_text().splitlines()
    assert rows[0] == "m,tau,rho,u,x,v0,v1" and len(rows) == 258
    assert "numerical failure" in capsys.readouterr().err


def test_positive_jump_needs_override(tmp_path):
    doc = {**FAILURE, "admissibility": True}
    assert main(["run", "--config", _write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 1


@pytest.mark.parametrize("doc", [
    {**SMALL, "c": 0.3},
    {**SMALL, "unknown": 1},
    {**SMALL, "solver": {"cfl": 0.0}},
])
def test_validation_errors_exit_one(tmp_path, doc, capsys):
    assert main(["run", "--config", _write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_config_exits_three(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 3


def test_unknown_subcommand_exits_one():
    assert main(["frobnicate"]) == 1


def test_sweep_and_report(tmp_path, capsys):
    out = tmp_path / "sw"
    argv = ["sweep", "--config", _write(tmp_path, SMALL), "--c-list", "0.04,0.01,0", "--out", str(out)]
    assert main(argv) == 0
    assert (out / "sweep.json").exists()
    assert main(["report", "--in", str(out)]) == 0
    assert "spread" in capsys.readouterr().out


def test_resolution_and_mollify_commands(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert main(["resolution-study", "--config", cfg, "--n-cells", "32,64,128", "--out", str(tmp_path / "r")]) == 0
    assert "orders" in json.loads((tmp_path / "r" / "resolution.json").read_text())
    assert main(["resolution-study", "--config", cfg, "--n-cells", "32,64", "--out", str(tmp_path / "r2")]) == 1
    jump = _write(tmp_path, {"scenario": "jump", "alpha": 0.4, "gamma": 2, "c": 0.0,
                             "profile": {"rho_left": 2.0, "rho_right": 1.0},
                             "grid": {"n_cells": 256}, "solver": {"t_end": 0.02, "formulation": "primitive"}},
                  "jump.json")
    assert main(["mollify-study", "--config", jump, "--n-list", "5,10", "--out", str(tmp_path / "m")]) == 0
    assert (tmp_path / "m" / "mollification.csv").exists()


def test_log_env_changes_nothing_but_verbosity(tmp_path, monkeypatch):
    cfg = _write(tmp_path, SMALL)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("NSK1D_LOG", "DEBUG")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()
