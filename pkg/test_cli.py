#!/usr/bin/env python3
"""
Command line tests
fit, gtrace, nulltable, are and simulate through main(), with exit codes.
"""

import os
import sys
import json

import numpy as np
import pytest

# Add the src directory to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from cli.cograd_cli import main

WORKED_CSV = "x,y\n1,2\n2,2.5\n3,4\n4,5\n"


@pytest.fixture
def worked_csv(tmp_path):
    path = tmp_path / "worked.csv"
    path.write_text(WORKED_CSV)
    return str(path)


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_fit_worked_example(worked_csv, capsys):
    assert main(["fit", worked_csv, "--level", "0.92"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["schema_version"] == 1
    assert out["n"] == 4
    assert out["breakpoint_count"] == 4
    assert out["beta_tilde"] == 1.0
    assert out["beta_tilde_exact"] == {"num": 1, "den": 1}
    assert out["beta_hat"] == pytest.approx(1.05, abs=1e-12)
    assert out["beta_star"] == 1.0
    ci = out["ci"]
    assert (ci["lower"], ci["upper"]) == (0.5, 1.5)
    assert ci["achieved_level"] == {"num": 11, "den": 12}
    assert ci["g_star"] == {"num": 1, "den": 1}
    assert ci["null_source"] == "exact"


def test_fit_unsorted_rows_with_float_parsing(tmp_path, capsys):
    path = write_csv(tmp_path, "x,y\n3,4\n1,2\n4,5\n2,2.5\n")
    assert main(["fit", path, "--float"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["beta_tilde"] == 1.0
    assert out["exact"] is False
    assert out["beta_tilde_exact"] is None
    assert out["ci"] is None


def test_fit_level_unattainable(tmp_path, capsys):
    path = write_csv(tmp_path, "x,y\n1,2\n2,5\n")
    assert main(["fit", path, "--level", "0.9"]) == 4
    assert "unattainable" in capsys.readouterr().err


def test_fit_without_level_on_two_points(tmp_path, capsys):
    path = write_csv(tmp_path, "x,y\n1,2\n2,5\n")
    assert main(["fit", path]) == 0
    assert json.loads(capsys.readouterr().out)["beta_tilde"] == 3.0


def test_fit_duplicate_x(tmp_path):
    path = write_csv(tmp_path, "x,y\n1,2\n2,3\n1,4\n")
    assert main(["fit", path]) == 3


@pytest.mark.parametrize("text", [
    "a,b\n1,2\n2,3\n",
    "x,y\n1,2\n2,\n",
    "x,y\n1,2\n2,abc\n",
    "x,y\n1,2\n",
])
def test_fit_malformed_input(tmp_path, text):
    assert main(["fit", write_csv(tmp_path, text)]) == 2


def test_fit_missing_file_and_bad_flags(tmp_path, worked_csv):
    assert main(["fit", str(tmp_path / "missing.csv")]) == 2
    assert main(["fit", worked_csv, "--level", "1.5"]) == 2
    assert main(["fit", worked_csv, "--seed", "-1"]) == 2
    assert main(["frobnicate"]) == 2


def test_null_ceiling_from_environment(worked_csv, capsys, monkeypatch):
    monkeypatch.setenv("COGRAD_NULL_CEILING", "3")
    assert main(["fit", worked_csv, "--level", "0.92"]) == 0
    ci = json.loads(capsys.readouterr().out)["ci"]
    assert ci["null_source"] == "normal"
    assert ci["g_star"] is None
    assert ci["achieved_level"] is None
    assert ci["g_star_decimal"] > 0
    assert ci["achieved_level_decimal"] == 0.92
    assert main(["nulltable", "4"]) == 5


def test_gtrace_worked_example(worked_csv, capsys):
    assert main(["gtrace", worked_csv]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines == [
        "interval_left,interval_right,value_num,value_den",
        "-inf,0.5,1,1",
        "0.5,1,3,4",
        "1,1.25,-1,4",
        "1.25,1.5,-1,2",
        "1.5,+inf,-1,1",
    ]


def test_gtrace_collinear_json(tmp_path, capsys):
    path = write_csv(tmp_path, "x,y\n1,1\n2,2\n3,3\n")
    assert main(["gtrace", path, "--json"]) == 0
    records = json.loads(capsys.readouterr().out)
    assert records == [
        {"interval_left": "-inf", "interval_right": "1", "value_num": 1, "value_den": 1},
        {"interval_left": "1", "interval_right": "+inf", "value_num": -1, "value_den": 1},
    ]


def test_gtrace_random_sample_is_monotone(tmp_path, capsys):
    rng = np.random.default_rng(12)
    rows = "".join(f"{i},{v:.6f}\n" for i, v in zip(range(1, 6), rng.normal(size=5)))
    path = write_csv(tmp_path, "x,y\n" + rows)
    assert main(["gtrace", path, "--json"]) == 0
    records = json.loads(capsys.readouterr().out)
    values = [r["value_num"] / r["value_den"] for r in records]
    assert values[0] == 1 and values[-1] == -1
    assert values == sorted(values, reverse=True)
    assert records[0]["interval_left"] == "-inf"
    assert records[-1]["interval_right"] == "+inf"


def test_nulltable(capsys):
    assert main(["nulltable", "4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "value_num,value_den,count,n_factorial"
    assert lines[1] == "-1,1,1,24"
    assert lines[-1] == "1,1,1,24"
    assert sum(int(line.split(",")[2]) for line in lines[1:]) == 24


def test_nulltable_bad_size():
    assert main(["nulltable", "1"]) == 5
    assert main(["nulltable", "11"]) == 5


def test_are_reports(capsys):
    assert main(["are", "laplace", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["are_vs_ols"] == pytest.approx(1.5625, abs=1e-6)
    assert out["are_vs_theil"] == pytest.approx(25 / 24, abs=1e-6)
    assert out["model"] == "laplace"

    assert main(["are", "cauchy"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["are_vs_ols"] == "inf"
    assert out["sigma2"] == "inf"
    assert out["var_tilde_unitT2"] > 0


def test_are_unknown_model_and_degenerate_design():
    assert main(["are", "gumbel"]) == 5
    assert main(["are", "normal", "--design", "geometric"]) == 5


def test_simulate(tmp_path, capsys):
    path = write_csv(tmp_path, "model = normal\nn = 6\nreps = 200\nseed = 3\nlevel = 0.8\n", "sim.cfg")
    assert main(["simulate", path]) == 0
    first = json.loads(capsys.readouterr().out)
    assert first["config"]["n"] == 6
    assert 0.0 <= first["ci_coverage"] <= 1.0
    assert first["ci_null_source"] == "exact"

    assert main(["simulate", path, "--seed", "3"]) == 0
    second = json.loads(capsys.readouterr().out)
    first.pop("runtime_seconds")
    second.pop("runtime_seconds")
    assert first == second


def test_simulate_bad_config(tmp_path):
    assert main(["simulate", write_csv(tmp_path, "n = 6\nspeed = 3\n", "bad.cfg")]) == 2
    assert main(["simulate", str(tmp_path / "missing.cfg")]) == 2
    path = write_csv(tmp_path, "n = 6\nreps = 200\n", "ok.cfg")
    assert main(["simulate", path, "--reps", "5"]) == 2


def test_simulate_honours_null_ceiling_from_environment(tmp_path, capsys, monkeypatch):
    path = write_csv(tmp_path, "n = 6\nreps = 100\nseed = 2\nlevel = 0.8\n", "sim.cfg")
    assert main(["simulate", path]) == 0
    assert json.loads(capsys.readouterr().out)["ci_null_source"] == "exact"

    monkeypatch.setenv("COGRAD_NULL_CEILING", "5")
    assert main(["simulate", path]) == 5
    assert "NullTooLarge" in capsys.readouterr().err


def test_gtrace_float_collinear_with_offset(tmp_path, capsys):
    rows = "".join(f"{i},{1e6 + 0.11 * i!r}\n" for i in range(1, 9))
    path = write_csv(tmp_path, "x,y\n" + rows)
    assert main(["gtrace", path, "--float"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    assert lines[1].endswith(",1,1")
    assert lines[2].endswith(",+inf,-1,1")
    assert float(lines[2].split(",")[0]) == pytest.approx(0.11, abs=1e-8)
