import csv
import json
from pathlib import Path

import pytest

from tpqkd.cli import EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_VALIDATION, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_bounds_json(capsys):
    assert main(["bounds", "--d", "4", "--ef", "0.042"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "optimal"
    assert data["ef_upper"] == pytest.approx(0.2024, abs=1e-3)


def test_bounds_trivial(capsys):
    assert main(["bounds", "--d", "2", "--et", "0", "--ef", "0"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["ef_upper"] == pytest.approx(0.0, abs=1e-6)


def test_bounds_with_measured_time_error(capsys):
    assert main(["bounds", "--d", "4", "--et", "0.022", "--ef", "0.042"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["ef_upper"] == pytest.approx(0.1435, abs=2e-3)


def test_bounds_capability_exit_code(capsys):
    assert main(["bounds", "--d", "16", "--ef", "0.03"]) == EXIT_INFEASIBLE
    assert "d=16" in capsys.readouterr().err


def test_bounds_validation_exit_code(capsys):
    assert main(["bounds", "--d", "4", "--ef", "1.5"]) == EXIT_VALIDATION


def test_simulate_outputs(tmp_path, capsys):
    out = tmp_path / "sim"
    code = main(["simulate", str(CONFIGS / "table1_4db.toml"), "--frames", "50000", "--dim", "4", "--out", str(out)])
    assert code == EXIT_OK
    assert {p.name for p in out.iterdir()} == {"tallies.csv", "tallies.json", "bounds.json", "rates.csv", "rates.json"}
    bounds = json.loads((out / "bounds.json").read_text())
    assert {"yields", "security", "e_t", "r_t"} <= set(bounds)
    header = capsys.readouterr().out.splitlines()[0].split()
    assert header[:3] == ["Loss(dB)", "pT:pF", "d"] and "e_F^U" in header


def test_simulate_d16_prints_dashes(tmp_path, capsys):
    code = main(["simulate", str(CONFIGS / "table1_4db.toml"), "--frames", "20000", "--dim", "16", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert "--------" in capsys.readouterr().out


def test_simulate_bad_config(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("frames = 0\n[transmitter]\ndim = 2\n[transmitter.intensities]\nmu1 = 0.5\nmu2 = 0.1\nmu3 = 0.0\n")
    assert main(["simulate", str(bad)]) == EXIT_VALIDATION
    assert main(["simulate", str(tmp_path / "missing.toml")]) == EXIT_IO


def test_g2scan_csv(tmp_path):
    assert main(["g2scan", str(CONFIGS / "g2scan.toml"), "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "g2scan.csv", newline="")))
    by_xi = {float(r["overlap"]): float(r["g2"]) for r in rows}
    assert by_xi[1.0] == pytest.approx(0.5, abs=0.02)
    assert by_xi[0.0] == pytest.approx(1.0, abs=0.02)


def test_sweep_csv(tmp_path):
    code = main(["sweep", str(CONFIGS / "table1_4db.toml"), "--frames", "30000", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv", newline="")))
    assert [(r["dim"], r["curve"]) for r in rows] == [
        ("2", "theory"), ("2", "sdp"), ("4", "theory"), ("4", "sdp"), ("8", "theory"), ("8", "sdp"),
    ]


def test_dim_flag_overrides_sweep(tmp_path):
    code = main(["sweep", str(CONFIGS / "table1_4db.toml"), "--frames", "20000", "--dim", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv", newline="")))
    assert {r["dim"] for r in rows} == {"4"}
