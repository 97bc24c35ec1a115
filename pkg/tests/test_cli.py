import json
import math
import os

import numpy as np
import pytest

from caplight import cli


def run_cli(argv, capsys):
    code = cli.run(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_polar_check_passes(capsys):
    code, out, err = run_cli(["polar-check", "--d", "3", "--R", "1", "--trials", "3"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["schema"] == "caplight/v1"
    assert report["results"]["max_discrepancy"] <= 1e-6
    assert report["config"]["d"] == 3  # embedded provenance


def test_turan_fuzz(capsys):
    code, out, _ = run_cli(["turan-fuzz", "--trials", "25", "--seed", "7"], capsys)
    assert code == 0
    assert json.loads(out)["results"]["failures"] == []


def test_turan_fuzz_seed_list(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seeds": [3, 9, 27]}))
    code, out, _ = run_cli(["turan-fuzz", "--config", str(cfg)], capsys)
    assert code == 0
    assert json.loads(out)["results"]["trials"] == 3


def test_local_lemma(capsys):
    code, out, _ = run_cli(["local-lemma", "--trials", "6", "--seed", "2"], capsys)
    assert code == 0
    assert json.loads(out)["results"]["failures"] == []


def test_cover_and_thickness(capsys):
    code, out, _ = run_cli(["cover", "--d", "3", "--gamma-scale", "0.2"], capsys)
    assert code == 0
    rep = json.loads(out)["results"]
    assert rep["kappa"] <= rep["bound"]

    region = json.dumps({"type": "complement", "of": {"type": "cap", "center": [0, 0, 1], "a": 0.3}})
    code, out, _ = run_cli(
        ["thickness", "--d", "3", "--region", region, "--gamma-scale", "0.4"], capsys
    )
    assert code == 0
    rep = json.loads(out)["results"]
    assert rep["covering_inequality_ok"]
    assert 0 < rep["gamma_estimate"] <= 1


def test_spectral_csv_format(tmp_path, capsys):
    out_path = tmp_path / "spec.csv"
    code, _, _ = run_cli(
        ["spectral", "--d", "2", "--degree", "3", "--region", '{"type":"arc","angle":[0,3.14159]}',
         "--format", "csv", "--out", str(out_path)],
        capsys,
    )
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0].startswith("# schema=caplight/v1")
    header = lines[1].split(",")
    assert header == ["d", "R", "N", "q", "gamma", "a", "C_star", "implied_c1", "lambda_min"]
    first = dict(zip(header, lines[2].split(",")))
    assert float(first["C_star"]) == pytest.approx(math.sqrt(2), rel=1e-6)


def test_observe_and_control(capsys):
    region = json.dumps({"type": "cap", "center": [0, 0, 1], "a": 0.45})
    code, out, _ = run_cli(
        ["observe", "--d", "3", "--cutoff", "4", "--T", "0.8", "--region", region], capsys
    )
    assert code == 0
    rep = json.loads(out)["results"]
    assert rep["rayleigh_consistent"]
    assert rep["C_obs"] > 0

    code, out, _ = run_cli(
        ["control", "--d", "3", "--cutoff", "4", "--T", "0.8", "--region", region, "--seed", "5"],
        capsys,
    )
    assert code == 0
    rep = json.loads(out)["results"]
    assert rep["hum"]["terminal_residual"] <= 1e-8
    assert rep["staged"]["terminal_residual"] <= 1e-6


def test_sweep_deterministic_bytes(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    cfg = {"gammas": [0.05], "T_grid": [0.2, 0.4], "cutoff": 2, "format": "csv"}
    cfg_path = tmp_path / "sweep.json"
    cfg_path.write_text(json.dumps(cfg))
    outputs = []
    for _ in range(2):
        code, _, _ = run_cli(["sweep", "--config", str(cfg_path), "--out", str(path)], capsys)
        assert code == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    header = outputs[0].decode().splitlines()[1].split(",")
    assert header == ["d", "R", "gamma", "a", "L", "T", "C_obs", "implied_c2",
                      "cost_sq_max", "residual"]


def test_region_file_input(tmp_path, capsys):
    region_path = tmp_path / "region.json"
    region_path.write_text(json.dumps({"type": "cap", "center": [0, 0, 1], "a": 0.5}))
    code, out, _ = run_cli(
        ["thickness", "--d", "3", "--region", str(region_path), "--gamma-scale", "1.0"], capsys
    )
    assert code == 0


def test_invalid_inputs_exit_2(tmp_path, capsys):
    code, _, err = run_cli(["thickness", "--d", "3", "--region", '{"type":"wedge"}'], capsys)
    assert code == 2
    assert "wedge" in err

    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"no_such_key": 1}))
    code, _, err = run_cli(["cover", "--config", str(cfg)], capsys)
    assert code == 2
    assert "no_such_key" in err

    code, _, _ = run_cli(["observe", "--d", "5"], capsys)
    assert code == 2


def test_failure_exit_1_with_diagnostics(capsys, monkeypatch):
    # an over-tight tolerance turns a healthy control run into a contract failure
    region = json.dumps({"type": "cap", "center": [0, 0, 1], "a": 0.3})
    code, _, err = run_cli(
        ["control", "--d", "3", "--cutoff", "6", "--T", "0.3", "--region", region,
         "--tol", "1e-15"],
        capsys,
    )
    assert code == 1
    diag = json.loads(err.strip().splitlines()[-1])
    assert diag["status"] == "fail"
    assert diag["residual"] is not None


def test_threads_env_recorded(capsys, monkeypatch):
    monkeypatch.setenv("CAPLIGHT_THREADS", "4")
    code, out, _ = run_cli(["cover", "--d", "2", "--gamma-scale", "0.25"], capsys)
    assert code == 0
    assert json.loads(out)["config"]["threads"] == 4
    monkeypatch.setenv("CAPLIGHT_THREADS", "soup")
    code, _, _ = run_cli(["cover", "--d", "2", "--gamma-scale", "0.25"], capsys)
    assert code == 2
