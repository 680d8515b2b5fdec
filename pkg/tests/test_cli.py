"""Command-line behavior: reports, exit codes, determinism."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from parapack.cli import main

from conftest import REPO_ROOT, make_run_doc

CHARGE_CONFIG = str(REPO_ROOT / "configs" / "charge.json")
CANDIDATE = str(REPO_ROOT / "configs" / "lmi_candidate.json")


def write_json(tmp_path, doc, name):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def read_report(out_dir):
    with open(os.path.join(out_dir, "report.json"), encoding="utf-8") as fh:
        return json.load(fh)


def test_verify_reference_config(tmp_path):
    out = tmp_path / "verify"
    assert main(["verify", "--config", CHARGE_CONFIG, "--out", str(out)]) == 0
    report = read_report(out)
    assert report["command"] == "verify"
    assert report["passed"] is True
    assert len(report["checks"]) == 9
    assert all(c["passed"] for c in report["checks"])
    assert report["slope_bounds"]["lower"] == pytest.approx(0.0936, abs=1e-3)
    curve = (out / "ocv_curve.csv").read_text().splitlines()
    assert curve[0] == "z,ocv,docv"
    assert len(curve) == 1002
    first = curve[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == pytest.approx(3.0896)


def test_simulate_short_run_is_deterministic(tmp_path):
    doc = make_run_doc()
    cfg = write_json(tmp_path, doc, "sim.json")
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(out_a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out_b)]) == 0
    bytes_a = (out_a / "trace.csv").read_bytes()
    assert bytes_a == (out_b / "trace.csv").read_bytes()
    report = read_report(out_a)
    assert report["passed"] is True
    assert report["steps"] == 1000
    assert len(report["final_soc"]) == 3


def test_simulate_without_out_flag_uses_config_directory(tmp_path, monkeypatch):
    doc = make_run_doc()
    doc["output"] = {"directory": "rundir"}
    cfg = write_json(tmp_path, doc, "sim.json")
    monkeypatch.chdir(tmp_path)
    assert main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "rundir" / "trace.csv").exists()
    assert (tmp_path / "rundir" / "report.json").exists()


def test_simulate_escaping_run_exits_one(tmp_path):
    doc = make_run_doc()
    doc["sim"]["t_end"] = 50.0
    doc["sim"]["dt"] = 0.05
    cfg = write_json(tmp_path, doc, "sim.json")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 1
    report = read_report(out)
    assert report["passed"] is False
    assert report["escaped"] is True


def test_estimate_short_run(tmp_path):
    doc = make_run_doc()
    doc["estimator"] = {
        "kappa": [[-0.1, -0.1]],
        "initial_soc_offset": -0.05,
        "disturbance": {"kind": "none"},
    }
    cfg = write_json(tmp_path, doc, "est.json")
    out = tmp_path / "out"
    assert main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    report = read_report(out)
    assert report["command"] == "estimate"
    assert report["passed"] is True
    assert np.asarray(report["kappa"]).shape == (3, 2)
    assert report["gain_forced"] is False
    assert all(g["stable"] for g in report["gate"])
    assert report["max_error_eigenvalue_over_slopes"] < 0.0
    assert report["error_norm_final"] < report["error_norm_initial"]
    header = (out / "trace.csv").read_text().splitlines()[0]
    assert "zhat_1" in header and header.endswith("e_norm,v_err")


def test_estimate_requires_estimator_section(tmp_path):
    out = tmp_path / "out"
    assert main(["estimate", "--config", CHARGE_CONFIG, "--out", str(out)]) == 2


def test_estimate_rejects_unstable_kappa(tmp_path, capsys):
    doc = make_run_doc()
    doc["estimator"] = {"kappa": [[0.0, 0.0]]}
    cfg = write_json(tmp_path, doc, "est.json")
    out = tmp_path / "out"
    assert main(["estimate", "--config", cfg, "--out", str(out)]) == 1
    assert "gain rejected" in capsys.readouterr().err

    assert main(["estimate", "--config", cfg, "--out", str(out),
                 "--force-gain"]) == 0
    report = read_report(out)
    assert report["gain_forced"] is True
    assert not any(g["stable"] for g in report["gate"])


def test_lmi_accepts_shipped_candidate(tmp_path):
    out = tmp_path / "out"
    assert main(["lmi", "--config", CHARGE_CONFIG, "--candidate", CANDIDATE,
                 "--out", str(out)]) == 0
    report = read_report(out)
    assert report["passed"] is True
    assert report["accepted"] is True
    assert report["oracle_agrees"] is True
    assert report["max_eigenvalue"] < -5e-5
    assert report["max_eigenvalue_jacobi"] == pytest.approx(
        report["max_eigenvalue"], rel=1e-6, abs=1e-9)
    assert report["gamma"] == pytest.approx(8359.500510, abs=1e-3)
    assert np.asarray(report["implied_gain"]).shape == (6, 3)


def test_lmi_rejects_flat_storage_matrix(tmp_path):
    doc = {
        "schema_version": 1,
        "P": np.zeros((6, 6)).tolist(),
        "Q": np.zeros((6, 3)).tolist(),
        "gamma": 1.0,
        "tau": [0.0, 0.0, 0.0],
    }
    cand = write_json(tmp_path, doc, "cand.json")
    out = tmp_path / "out"
    assert main(["lmi", "--config", CHARGE_CONFIG, "--candidate", cand,
                 "--out", str(out)]) == 1
    report = read_report(out)
    assert report["accepted"] is False
    assert report["reason"] == "storage matrix is not positive definite"
    assert report["max_eigenvalue"] is None
    assert report["oracle_agrees"] is None


def test_missing_candidate_file_exits_two(tmp_path):
    out = tmp_path / "out"
    assert main(["lmi", "--config", CHARGE_CONFIG,
                 "--candidate", str(tmp_path / "missing.json"),
                 "--out", str(out)]) == 2


def test_unknown_config_key_exits_two(tmp_path, capsys):
    doc = make_run_doc()
    doc["simulation"] = {}
    cfg = write_json(tmp_path, doc, "bad.json")
    assert main(["verify", "--config", cfg]) == 2
    assert "config error" in capsys.readouterr().err


def test_log_level_from_environment(tmp_path):
    doc = make_run_doc()
    doc["sim"]["t_end"] = 0.1
    cfg = write_json(tmp_path, doc, "sim.json")
    base = ["simulate", "--config", cfg, "--out", str(tmp_path / "out")]

    env = dict(os.environ, PARAPACK_LOG="DEBUG")
    run = subprocess.run([sys.executable, "-m", "parapack.cli"] + base,
                         capture_output=True, text=True, env=env)
    assert run.returncode == 0
    assert "simulating 3 cells" in run.stderr

    env = dict(os.environ)
    env.pop("PARAPACK_LOG", None)
    run = subprocess.run([sys.executable, "-m", "parapack.cli"] + base,
                         capture_output=True, text=True, env=env)
    assert run.returncode == 0
    assert "simulating" not in run.stderr
