"""Command-line interface: configs, outputs and exit codes."""

from __future__ import annotations

import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import varplast.solver as solver_mod
from varplast.cli import (EXIT_ASSERT, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_OK, ConfigError,
                          RunConfig, dump_json, fmt, main)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

RAMP_DOC = {
    "model": {"kind": "custom", "A": [[1.0]],
              "cstar": {"type": "norm_ball", "radius": 1.0, "dim": 1}},
    "load": {"knots": [[0.0, [0.0]], [2.0, [2.0]]]},
    "partition": {"N": 20},
    "theta": 1.0,
    "adapt": {"tol": 0.01, "initial_N": 5},
    "converge": {"refinements": [10, 20, 40]},
    "sweep": {"thetas": [0.5, 1.0], "steps": [10, 20]},
}

COMBINED_DOC = {
    "model": {"kind": "combined", "p_dim": 2, "elastic_C": [[2.0, 0.3], [0.3, 1.0]],
              "Hp": 0.5, "h_xi": 0.7, "sigma_y": 1.0},
    "load": {"knots": [[0.0, [0.0, 0.0]], [1.0, [2.0, -1.0]], [2.0, [-1.0, 1.5]]],
             "as_strain": True},
    "partition": {"N": 30},
    "theta": 0.5,
}


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, command, doc, *extra, out="out"):
    cfg = write_config(tmp_path, doc)
    return main([command, "--config", cfg, "--out", str(tmp_path / out), *extra])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestFormatting:
    def test_fmt(self):
        assert fmt(0.1) == "0.10000000000000001"
        assert fmt(float("inf")) == "inf"
        assert fmt(-float("inf")) == "-inf"
        with pytest.raises(ValueError):
            fmt(float("nan"))

    def test_dump_json(self):
        text = dump_json({"b": np.float64(np.inf), "a": np.arange(2)})
        assert text == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": "inf"\n}\n'
        with pytest.raises(ValueError):
            dump_json({"x": float("nan")})


class TestConfig:
    def test_shipped_configs_parse(self):
        for path in sorted(CONFIGS.glob("*.json")):
            RunConfig(json.loads(path.read_text()))

    @pytest.mark.parametrize("where", ["top", "model", "load", "partition", "adapt"])
    def test_unknown_key_rejected(self, tmp_path, where):
        doc = json.loads(json.dumps(RAMP_DOC))
        target = doc if where == "top" else doc[where]
        target["bogus"] = 1
        with pytest.raises(ConfigError, match="bogus"):
            RunConfig(doc)
        assert run(tmp_path, "solve", doc) == EXIT_CONFIG

    def test_material_keys_rejected_for_custom(self):
        doc = json.loads(json.dumps(RAMP_DOC))
        doc["model"]["sigma_y"] = 1.0
        with pytest.raises(ConfigError):
            RunConfig(doc)

    def test_theta_out_of_range(self, tmp_path, capsys):
        assert run(tmp_path, "solve", RAMP_DOC, "--theta", "0.3") == EXIT_CONFIG
        assert "theta must lie in [1/2,1]" in capsys.readouterr().err

    def test_unstable_initial_state(self, tmp_path):
        doc = dict(RAMP_DOC, y0=[-3.0])
        assert run(tmp_path, "solve", doc) == EXIT_CONFIG

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert main(["solve", "--config", str(path)]) == EXIT_CONFIG

    def test_partition_steps(self):
        doc = dict(RAMP_DOC, partition={"steps": [0.5, 0.5, 1.0]})
        assert RunConfig(doc).partition.N == 3
        with pytest.raises(ConfigError):
            RunConfig(dict(RAMP_DOC, partition={"steps": [0.5, 0.5]}))

    def test_strain_load(self):
        cfg = RunConfig(COMBINED_DOC)
        C = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert cfg.problem.load(1.0) == pytest.approx(np.append(C @ [2.0, -1.0], 0.0))


class TestSolve:
    def test_outputs(self, tmp_path):
        assert run(tmp_path, "solve", RAMP_DOC, "--assert") == EXIT_OK
        rows = read_csv(tmp_path / "out" / "trajectory.csv")
        assert rows[0] == ["i", "t", "y0", "abs_dy", "psi_increment", "tau_L", "dist_cstar_theta"]
        assert len(rows) == 22
        assert float(rows[-1][2]) == pytest.approx(1.0, abs=1e-12)
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["N"] == 20 and summary["Fn_theta"] <= 1e-9
        assert summary["lipschitz"]["applicable"] is True

    def test_byte_identical_reruns(self, tmp_path):
        assert run(tmp_path, "solve", COMBINED_DOC, out="a") == EXIT_OK
        assert run(tmp_path, "solve", COMBINED_DOC, out="b") == EXIT_OK
        for name in ("trajectory.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_steps_override(self, tmp_path):
        assert run(tmp_path, "solve", RAMP_DOC, "--steps", "7") == EXIT_OK
        assert len(read_csv(tmp_path / "out" / "trajectory.csv")) == 9

    def test_convergence_failure_exit_code(self, tmp_path, monkeypatch):
        monkeypatch.setattr(solver_mod, "MAX_ITER", 2)
        doc = {
            "model": {"kind": "custom", "A": [[3.0, 1.0], [1.0, 1.0]],
                      "cstar": {"type": "halfspaces",
                                "normals": [[1, 1], [-1, 0], [0, -1], [1, -1]],
                                "offsets": [1, 1, 1, 1]}},
            "load": {"knots": [[0, [0, 0]], [1, [5, 4]]]},
            "partition": {"N": 2},
        }
        assert run(tmp_path, "solve", doc) == EXIT_CONVERGENCE


class TestCertify:
    def test_solution_certifies(self, tmp_path):
        assert run(tmp_path, "solve", RAMP_DOC) == EXIT_OK
        cand = str(tmp_path / "out" / "trajectory.csv")
        assert run(tmp_path, "certify", RAMP_DOC, "--candidate", cand, "--assert",
                   "--tol", "1e-4", out="cert") == EXIT_OK
        cert = json.loads((tmp_path / "cert" / "certificate.json").read_text())
        assert cert["uniform_norm_bound"] <= 1e-4

    def test_infeasible_candidate_serializes_inf(self, tmp_path):
        cand = tmp_path / "cand.csv"
        cand.write_text("i,t,y0\n0,0,0\n1,1,0\n2,2,0\n")
        code = run(tmp_path, "certify", RAMP_DOC, "--candidate", str(cand), "--assert",
                   "--tol", "1.0")
        assert code == EXIT_ASSERT
        text = (tmp_path / "out" / "certificate.json").read_text()
        cert = json.loads(text)
        assert cert["uniform_norm_bound"] == "inf"
        assert cert["feasibility_violations"][0][0] == 2
        assert "NaN" not in text

    def test_missing_candidate(self, tmp_path):
        assert run(tmp_path, "certify", RAMP_DOC) == EXIT_CONFIG

    def test_malformed_candidate(self, tmp_path):
        cand = tmp_path / "cand.csv"
        cand.write_text("i,t,y0\n0,0,0\n1,1,abc\n2,2,0\n")
        assert run(tmp_path, "certify", RAMP_DOC, "--candidate", str(cand)) == EXIT_CONFIG


class TestAdaptConvergeSweep:
    def test_adapt(self, tmp_path):
        assert run(tmp_path, "adapt", RAMP_DOC, "--assert") == EXIT_OK
        out = json.loads((tmp_path / "out" / "adapt.json").read_text())
        assert out["success"] and out["certificate"]["uniform_norm_bound"] <= 0.01
        assert (tmp_path / "out" / "adapt.csv").exists()

    def test_converge_ramp(self, tmp_path):
        doc = dict(RAMP_DOC, load={"knots": [[0.0, [0.0]], [2.1, [2.1]]]})
        assert run(tmp_path, "converge", doc, "--assert") == EXIT_OK
        out = json.loads((tmp_path / "out" / "converge.json").read_text())
        assert out["oracle"] == "analytic_1d" and out["slope"] >= 0.4
        rows = read_csv(tmp_path / "out" / "rates.csv")
        assert rows[0] == ["N", "tau", "error"] and len(rows) == 4

    def test_converge_reference(self, tmp_path):
        doc = dict(COMBINED_DOC, converge={"refinements": [10, 20, 40], "reference_factor": 20})
        assert run(tmp_path, "converge", doc) == EXIT_OK
        out = json.loads((tmp_path / "out" / "converge.json").read_text())
        assert out["oracle"] == "reference"

    def test_converge_needs_three_levels(self, tmp_path):
        assert run(tmp_path, "converge", RAMP_DOC, "--refinements", "10,20") == EXIT_CONFIG

    def test_sweep_jobs_identical(self, tmp_path):
        assert run(tmp_path, "sweep", RAMP_DOC, "--jobs", "1", out="a") == EXIT_OK
        assert run(tmp_path, "sweep", RAMP_DOC, "--jobs", "2", out="b") == EXIT_OK
        a = (tmp_path / "a" / "sweep.csv").read_bytes()
        assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
        rows = read_csv(tmp_path / "a" / "sweep.csv")
        assert len(rows) == 5


class TestConsoleScript:
    def test_installed_entry_point(self, tmp_path):
        exe = shutil.which("varplast")
        cmd = [exe] if exe else [sys.executable, "-m", "varplast.cli"]
        cfg = write_config(tmp_path, RAMP_DOC)
        proc = subprocess.run([*cmd, "solve", "--config", cfg, "--out", str(tmp_path / "o"),
                               "--theta", "0.2"], capture_output=True, text=True)
        assert proc.returncode == EXIT_CONFIG
        assert "theta must lie in [1/2,1]" in proc.stderr
