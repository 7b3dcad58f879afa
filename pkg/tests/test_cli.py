import hashlib
import json
import math

import pytest

from disslab.cli import main


def run_cli(args):
    return main(args)


def test_simulate_single_mode(tmp_path):
    out = tmp_path / "trajectory.csv"
    code = run_cli([
        "simulate", "--matrix", "2,1,1,1", "--nu", "0.01", "--steps", "4",
        "--initial", "mode:1,0", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# disslab-csv")
    assert lines[1] == "n,energy,h1,e_nu"
    energies = [float(line.split(",")[1]) for line in lines[2:]]
    expected = [math.exp(-0.02 * s) for s in (0, 5, 39, 272, 1869)]
    assert energies == pytest.approx(expected, rel=1e-12)


def test_simulate_initial_from_file(tmp_path):
    from disslab.fields import SpectralConvention, SpectralField

    field = SpectralField(SpectralConvention(2, "lattice"), {(1, 0): 1.0, (0, 1): 2.0})
    path = tmp_path / "field.json"
    path.write_text(field.to_json())
    out = tmp_path / "traj.csv"
    code = run_cli([
        "simulate", "--matrix", "2,1,1,1", "--nu", "0.1", "--steps", "2",
        "--initial", str(path), "--out", str(out),
    ])
    assert code == 0
    first_energy = float(out.read_text().splitlines()[2].split(",")[1])
    assert first_energy == pytest.approx(5.0, rel=1e-14)


def test_dissipation_time_report(tmp_path):
    out = tmp_path / "report.json"
    code = run_cli([
        "dissipation-time", "--matrix", "2,1,1,1", "--nu-grid", "1e-4:1e-2:5",
        "--method", "exact", "--out", str(out),
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert len(payload["entries"]) == 5
    assert payload["fit"]["slope"] > 0
    csv_lines = (tmp_path / "report.csv").read_text().splitlines()
    assert csv_lines[1] == "nu,tau_d,ln_inv_nu"
    assert len(csv_lines) == 7


def test_deterministic_output(tmp_path):
    digests = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        run_cli([
            "dissipation-time", "--matrix", "2,1,1,1", "--nu-grid", "1e-3:1e-2:4",
            "--method", "operator", "--seed", "7", "--out", str(out),
        ])
        csv = out.with_suffix(".csv").read_bytes()
        digests.append(hashlib.sha256(csv + out.read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_sweep_matches_serial(tmp_path):
    serial = tmp_path / "serial.json"
    parallel = tmp_path / "parallel.json"
    base = ["--matrix", "2,1,1,1", "--nu-grid", "1e-4:1e-2:4", "--method", "exact"]
    run_cli(["dissipation-time", *base, "--out", str(serial)])
    run_cli(["sweep", *base, "--jobs", "2", "--out", str(parallel)])
    assert json.loads(serial.read_text())["entries"] == json.loads(parallel.read_text())["entries"]


def test_mixing_rate_strong(tmp_path):
    out = tmp_path / "envelope.csv"
    code = run_cli([
        "mixing-rate", "--matrix", "2,1,1,1", "--alpha", "1", "--beta", "1",
        "--n-max", "6", "--mode", "strong", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "n,value,tail_cert"
    assert len(lines) == 9
    assert float(lines[2].split(",")[1]) == pytest.approx(1.0)


def test_bounds_h1(tmp_path):
    out = tmp_path / "bounds.csv"
    code = run_cli([
        "bounds", "--which", "H1", "--rate", "power:1,1", "--alpha", "1", "--beta", "1",
        "--nu-grid", "1e-6:1e-2:9", "--out", str(out),
    ])
    assert code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[2:]]
    by_nu = {float(r[0]): float(r[1]) for r in rows}
    key = min(by_nu, key=lambda nu: abs(nu - 1e-3))
    # definition-consistent sup of the H1 set (see the closed form's docstring)
    assert by_nu[key] == pytest.approx((4.0 ** -2 / 1e-3) ** (1 / 3), rel=1e-6)


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"nu": 0.01, "steps": 4, "initial": "mode:1,0"}))
    out = tmp_path / "t.csv"
    code = run_cli([
        "simulate", "--config", str(cfg), "--matrix", "2,1,1,1",
        "--nu", "0.1",  # explicit flag wins over the config value
        "--steps", "2", "--initial", "mode:1,0", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 + 3  # header, columns, n = 0..2
    e1 = float(lines[3].split(",")[1])
    assert e1 == pytest.approx(math.exp(-2 * 0.1 * 5), rel=1e-12)


def test_validation_error_exit_code(tmp_path):
    assert run_cli(["simulate", "--matrix", "2,1,1", "--nu", "0.1", "--steps", "1",
                    "--initial", "mode:1,0", "--out", str(tmp_path / "x.csv")]) == 2
    assert run_cli(["dissipation-time", "--matrix", "2,1,1,1", "--nu-grid", "bogus",
                    "--out", str(tmp_path / "y.json")]) == 2


def test_numerical_failure_exit_code(tmp_path):
    # 120 pulses of the cat map overflow the 63-bit mode range
    code = run_cli([
        "simulate", "--matrix", "2,1,1,1", "--nu", "1e-3", "--steps", "120",
        "--initial", "mode:1,0", "--out", str(tmp_path / "t.csv"),
    ])
    assert code == 3


def test_verify_identities_and_lemmas():
    assert run_cli(["verify", "identities"]) == 0
    assert run_cli(["verify", "lemmas"]) == 0


def test_verify_bounds_rejects_corrupted_report(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"entries": [{"nu": 1e-3, "tau_d": 10**9, "method": "exact"}]}))
    assert run_cli(["verify", "bounds", "--report", str(bad)]) == 1
    assert run_cli(["verify", "bounds"]) == 0
