"""Tests for the qbench command line."""
import csv
import io
import json

import pytest

from qbench.benchmarks import UNDEFINED
from qbench.cli import main
from qbench.const import (
    EXIT_DATA_FORMAT,
    EXIT_IO_ERROR,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFICATION_FAILED,
    SWEEP_HEADER,
)


# main() runs its own event loop, so these tests stay synchronous.


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- benchmark ---

def test_benchmark_qubit(capsys):
    code, out, _ = _run(capsys, "benchmark", "--family", "qudit", "--d", "2", "--N", "1", "--M", "1", "--beta", "1")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["fidelity_threshold"] == pytest.approx(0.75)
    assert data["spec"]["beta"] == 1.0
    assert data["provenance"] == "closed_form"


def test_benchmark_kcopy(capsys):
    code, out, _ = _run(
        capsys, "benchmark", "--family", "qudit", "--d", "2", "--N", "1", "--M", "2", "--kweights", "0.5,0.5"
    )
    assert code == EXIT_OK
    assert json.loads(out)["formula_id"] == "kcopy"


def test_benchmark_uniform_coherent_success_undefined(capsys):
    code, out, _ = _run(capsys, "benchmark", "--family", "coherent", "--gain", "1+1j", "--N", "1", "--M", "1")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["success_probability"] == UNDEFINED
    assert data["fidelity_threshold"] == pytest.approx(1 / 3)


def test_benchmark_unknown_family(capsys):
    code, _, err = _run(capsys, "benchmark", "--family", "quidit", "--N", "1", "--M", "1")
    assert code == EXIT_USAGE
    assert "nearest valid family: 'qudit'" in err


def test_benchmark_missing_flag(capsys):
    code, _, err = _run(capsys, "benchmark", "--family", "qudit", "--d", "2", "--N", "1")
    assert code == EXIT_USAGE
    assert "usage error" in err


def test_benchmark_invalid_spec(capsys):
    code, _, err = _run(capsys, "benchmark", "--family", "qudit", "--N", "1", "--M", "1")
    assert code == EXIT_USAGE
    assert "invalid spec" in err


def test_unknown_command(capsys):
    code, _, _ = _run(capsys, "teleport")
    assert code == EXIT_USAGE


# --- verify ---

def test_verify_acceptance_grid(capsys, fixtures_path):
    code, out, _ = _run(capsys, "verify", "--spec-file", str(fixtures_path / "acceptance_specs.json"))
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["passed"] is True
    assert len(report["rows"]) == 7
    assert report["rows"][0]["name"] == "qubit uniform"


def test_verify_corrupted_formula_fails(capsys, fixtures_path):
    code, out, err = _run(capsys, "verify", "--spec-file", str(fixtures_path / "corrupted_formula.json"))
    assert code == EXIT_VERIFICATION_FAILED
    report = json.loads(out)
    assert [row["passed"] for row in report["rows"]] == [True, False]
    assert "verification failed for corrupted" in err


def test_verify_missing_file(capsys, tmp_path):
    code, _, err = _run(capsys, "verify", "--spec-file", str(tmp_path / "missing.json"))
    assert code == EXIT_IO_ERROR
    assert "I/O error" in err


def test_verify_malformed_file(capsys, tmp_path):
    path = tmp_path / "specs.json"
    path.write_text("[{", encoding="utf-8")
    code, _, _ = _run(capsys, "verify", "--spec-file", str(path))
    assert code == EXIT_DATA_FORMAT


def test_verify_monte_carlo(capsys, tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(json.dumps({"family": "qudit", "d": 2, "N": 1, "M": 1, "beta": 1.0}), encoding="utf-8")
    code, out, _ = _run(
        capsys, "verify", "--spec-file", str(path), "--scheme", "monte_carlo", "--mc-samples", "100000", "--seed", "5"
    )
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["scheme"] == "monte_carlo"
    assert report["seed"] == 5


# --- simulate ---

def test_simulate_optimal_strategy(capsys):
    code, out, _ = _run(
        capsys, "simulate", "--family", "qudit", "--d", "2", "--N", "1", "--M", "1", "--beta", "1",
        "--trials", "2000", "--seed", "3", "--workers", "2",
    )
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["strategy"] == "optimal-mp"
    assert data["trials"] == 2000
    assert data["fidelity_threshold"] == pytest.approx(0.75)
    assert "eta" not in data


def test_simulate_srm_defaults_to_optimal_eta(capsys):
    code, out, _ = _run(
        capsys, "simulate", "--family", "spin", "--j", "0.5", "--N", "1", "--M", "1", "--beta", "1",
        "--strategy", "srm", "--trials", "500",
    )
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["strategy"] == "srm"
    assert data["eta"] == pytest.approx(3 + 2 * 3**0.5)
    assert data["success_rate"] == 1.0


def test_simulate_srm_needs_qubit(capsys):
    code, _, err = _run(
        capsys, "simulate", "--family", "qudit", "--d", "3", "--N", "1", "--M", "1",
        "--strategy", "srm", "--trials", "10",
    )
    assert code == EXIT_USAGE
    assert "qubit" in err


def test_simulate_rejects_zero_trials(capsys):
    code, _, _ = _run(capsys, "simulate", "--family", "qudit", "--d", "2", "--N", "1", "--M", "1", "--trials", "0")
    assert code == EXIT_USAGE


def test_simulate_uniform_coherent_prior(capsys):
    code, _, err = _run(capsys, "simulate", "--family", "coherent", "--N", "1", "--M", "1", "--trials", "10")
    assert code == EXIT_DATA_FORMAT
    assert "improper" in err.lower()


# --- sweep ---

def test_sweep_to_stdout(capsys):
    code, out, _ = _run(
        capsys, "sweep", "--family", "qudit", "--d", "2", "--N-range", "1..2", "--M-range", "1,2",
        "--width-grid", "0,1",
    )
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == SWEEP_HEADER
    assert len(rows) == 9
    assert rows[1][:6] == ["qudit", "2", "", "1", "1", "0.0"]
    assert float(rows[1][7]) == pytest.approx(2 / 3)
    assert float(rows[2][7]) == pytest.approx(0.75)


def test_sweep_to_file(capsys, tmp_path):
    path = tmp_path / "sweep.csv"
    code, out, _ = _run(
        capsys, "sweep", "--family", "coherent", "--N-range", "1", "--M-range", "1..3",
        "--width-grid", "0", "--out", str(path),
    )
    assert code == EXIT_OK
    assert out == ""
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    assert len(rows) == 4
    # undefined success probability leaves the column empty
    assert rows[1][8] == ""
    assert rows[1][6] == "0.0"


def test_sweep_gaussian_lambda_grid(capsys):
    code, out, _ = _run(
        capsys, "sweep", "--family", "gaussian-1mode", "--N-range", "1", "--M-range", "1",
        "--width-grid", "1,2", "--lambda-grid", "0,1,2",
    )
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 7


def test_sweep_bad_range(capsys):
    code, _, _ = _run(capsys, "sweep", "--family", "qudit", "--d", "2", "--N-range", "3..1")
    assert code == EXIT_USAGE


# --- certify ---

def test_certify_quantum_record(capsys, fixtures_path):
    code, out, _ = _run(capsys, "certify", "--experiment-file", str(fixtures_path / "experiment_quantum.json"))
    assert code == EXIT_OK
    verdict = json.loads(out)
    assert verdict["certified_quantum"] is True
    assert verdict["benchmark"]["fidelity_threshold"] == pytest.approx(0.75)


def test_certify_classical_record(capsys, fixtures_path):
    code, out, _ = _run(capsys, "certify", "--experiment-file", str(fixtures_path / "experiment_classical.json"))
    assert code == EXIT_OK
    verdict = json.loads(out)
    assert verdict["certified_quantum"] is False
    assert verdict["z_score"] < 0


def test_certify_malformed_record(capsys, fixtures_path):
    code, _, err = _run(capsys, "certify", "--experiment-file", str(fixtures_path / "experiment_malformed.json"))
    assert code == EXIT_DATA_FORMAT
    assert "line 5" in err


def test_certify_stricter_z(capsys, fixtures_path):
    code, out, _ = _run(
        capsys, "certify", "--experiment-file", str(fixtures_path / "experiment_quantum.json"), "--z", "1000"
    )
    assert code == EXIT_OK
    assert json.loads(out)["certified_quantum"] is False
