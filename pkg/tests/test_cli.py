import csv
import io
import json
import subprocess
import sys

import pytest

from clusterphase.cli import main
from clusterphase.pauli_lattice import TorusLattice
from clusterphase.star_reduction import half_torus_pair


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def circuit_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n_logical": 2, "gates": [
        {"type": "rz", "q": 0, "beta": 0.3}, {"type": "rx", "q": 1, "beta": 0.2},
        {"type": "rzz", "q": 0, "beta": 0.25}]}))
    return str(path)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "clusterphase", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()


@pytest.mark.parametrize("suite", ["symmetries", "stars", "qca", "tensors"])
def test_verify_suites_pass(capsys, suite):
    code, out, _ = run(capsys, "verify", suite, "--n", "4", "--samples", "20", "--deterministic")
    data = json.loads(out)
    assert code == 0 and data["pass"] and "seconds" not in data


def test_verify_rejects_odd_ring(capsys):
    code, _, err = run(capsys, "verify", "qca", "--n", "5")
    assert code == 2 and "error" in err


def test_unknown_suite_is_a_usage_error(capsys):
    assert run(capsys, "verify", "nope")[0] == 2


def test_calibrate_csv(capsys):
    code, out, _ = run(capsys, "calibrate", "--family", "xx-filter", "--theta-max", "0.1",
                       "--theta-step", "0.05")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [float(r["theta"]) for r in rows] == [0.0, 0.05, 0.1]
    assert float(rows[0]["nu_abs"]) == pytest.approx(0.5)
    assert float(rows[2]["nu_abs"]) == pytest.approx(0.4542, abs=1e-4)
    assert all(r["status"] == "ok" for r in rows)


def test_calibrate_rejects_bad_input(capsys):
    assert run(capsys, "calibrate", "--family", "zz")[0] == 2
    assert run(capsys, "calibrate", "--theta-max", "0.5")[0] == 2
    assert run(capsys, "calibrate", "--theta-step", "0")[0] == 2


def test_run_reports_fidelity(capsys, circuit_file):
    code, out, _ = run(capsys, "run", circuit_file, "--family", "xx-filter", "--theta", "0.1",
                       "--deterministic")
    data = json.loads(out)
    assert code == 0 and data["fidelity"] > 0.99
    assert data["program"]["slices"] > 0


def test_run_is_deterministic(capsys, circuit_file, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"out{k}.json"
        assert run(capsys, "run", circuit_file, "--theta", "0.1", "--seed", "3",
                   "--deterministic", "--out", str(path))[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_run_exit_codes(capsys, circuit_file, tmp_path):
    assert run(capsys, "run", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "run", str(bad))[0] == 2
    code, _, err = run(capsys, "run", circuit_file, "--family", "xx-filter", "--theta", "0.3",
                       "--dalpha", "0.08", "--eps", "0.001")
    assert code == 3 and "infeasible" in err
    assert run(capsys, "run", circuit_file, "--dalpha", "0.5")[0] == 2


def test_qca_evolve_csv(capsys):
    code, out, _ = run(capsys, "qca-evolve", "--n", "6", "--pauli", "Z", "--site", "2")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 13
    assert rows[1]["label"] == "IIXIII" and rows[6]["label"] == rows[0]["label"]
    assert run(capsys, "qca-evolve", "--pauli", "Y")[0] == 2


def test_reduce_z_random_sample(capsys):
    code, out, _ = run(capsys, "reduce-z", "--n", "8", "--seed", "7", "--trail")
    data = json.loads(out)
    assert code == 0 and data["verified"] and data["symmetric"] and "relocation" in data


def test_reduce_z_nonlocal_pair(capsys):
    lat = TorusLattice(6)
    sites = ";".join(f"{x},{y}" for x, y in sorted(half_torus_pair(lat, 1, 0).support))
    code, out, _ = run(capsys, "reduce-z", "--n", "6", "--sites", sites)
    assert code == 1 and json.loads(out)["status"] == "NotLocal"
    assert run(capsys, "reduce-z", "--sites", "1;2")[0] == 2
