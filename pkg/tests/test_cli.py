"""CLI subcommands, flags, and exit codes."""

import json

import numpy as np
import pytest

import red.experiment
import red.verify
from red.cli import main
from red.errors import NumericalAbort
from red.io import read_json, read_observables

BOOST = float(2.0 * np.pi * 2 / 16.0)


def write_config(tmp_path, **overrides):
    doc = {
        "system": {"n_particles": 2, "spatial_dim": 1, "box": [16.0],
                   "grid": [64, 64], "dt": 0.05},
        "initial_state": {"preset": "gaussian_packet", "sigma": 1.5,
                          "boost": [BOOST]},
        "drift_or_potential": {"preset": "harmonic_relational", "k": 0.3},
        "run": {"steps": 2, "dt_pde": 0.005, "seed": 5},
        "outputs": str(tmp_path / "run"),
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_success_prints_directory(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["run", "--config", str(path)]) == 0
    printed = capsys.readouterr().out.strip()
    assert printed == str(tmp_path / "run")
    assert (tmp_path / "run" / "observables.csv").is_file()


def test_seed_and_out_flags_override(tmp_path):
    path = write_config(tmp_path)
    assert main(["run", "--config", str(path), "--seed", "42",
                 "--out", str(tmp_path / "other")]) == 0
    manifest = read_json(tmp_path / "other" / "manifest.json")
    assert manifest["seed"] == 42
    assert manifest["config"]["run"]["seed"] == 42


def test_config_error_exits_2(tmp_path, capsys):
    path = write_config(tmp_path, system={"n_particles": 1, "spatial_dim": 1,
                                          "box": [16.0], "grid": [64],
                                          "dt": 0.05, "masses": [-2.0]})
    assert main(["run", "--config", str(path)]) == 2
    assert "/system/masses/0" in capsys.readouterr().err


def test_numerical_abort_exits_3(tmp_path, capsys, monkeypatch):
    def explode(*args, **kwargs):
        raise NumericalAbort("synthetic abort")

    monkeypatch.setattr(red.experiment, "schrodinger_evolve", explode)
    path = write_config(tmp_path)
    assert main(["run", "--config", str(path)]) == 3
    assert "NumericalAbort" in capsys.readouterr().err


def test_missing_config_path_exits_2(capsys):
    assert main(["run", "--config", "/no/such/experiment.json"]) == 2
    assert "cannot read config file" in capsys.readouterr().err


def test_verify_unknown_suite_exits_2(capsys):
    assert main(["verify", "nonexistent"]) == 2
    assert "available" in capsys.readouterr().err


def test_verify_suite_reports_and_writes(tmp_path, capsys):
    assert main(["verify", "spreading", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "suite spreading: PASS" in out
    payload = read_json(tmp_path / "verify_spreading.json")
    assert payload["pass"] is True
    assert payload["checks"][0]["name"] == "width_law_relative_deviation"


def test_verify_failure_exits_4(monkeypatch, capsys):
    from red.verify import below

    monkeypatch.setitem(red.verify.SUITES, "synthetic", lambda: [below("x", 2.0, 1.0)])
    assert main(["verify", "synthetic"]) == 4
    assert "FAIL" in capsys.readouterr().out


def test_sample_subcommand_runs(tmp_path):
    path = write_config(
        tmp_path,
        drift_or_potential={"preset": "linear", "coefficients": [3.0, 1.0]},
        run={"steps": 2, "dt_pde": 0.005, "seed": 5, "ensemble_K": 32},
    )
    assert main(["sample", "--config", str(path)]) == 0
    assert (tmp_path / "run" / "walkers_000002.csv").is_file()


def test_bestmatch_subcommand_prints_json(tmp_path, capsys):
    path = write_config(tmp_path, drift_or_potential={"preset": "free"})
    assert main(["bestmatch", "--config", str(path),
                 "--out", str(tmp_path / "bm")]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["best_match_shift"][0] == pytest.approx(BOOST, abs=1e-10)
    stored = read_json(tmp_path / "bm" / "bestmatch.json")
    assert stored == printed


def test_run_observables_columns(tmp_path):
    path = write_config(tmp_path)
    assert main(["run", "--config", str(path)]) == 0
    table = read_observables(tmp_path / "run" / "observables.csv")
    assert set(table) == {
        "t", "momentum_0", "energy", "norm", "entropy", "shift_0",
        "g_total", "g_constant", "g_entropy", "g_h0",
    }
    assert np.allclose(table["norm"], 1.0, atol=1e-10)
    assert np.allclose(
        table["g_total"],
        table["g_constant"] + table["g_entropy"] + table["g_h0"],
        atol=1e-12,
    )
