import json
from pathlib import Path

import numpy as np
import pytest

from .. import __version__, commands  # noqa: F401 pylint: disable=unused-import
from ..config import run
from ..trace import read_csv
from ..units.command import run_command

GALLERY = Path(__file__).parent.parent / "scenarios"

SMALL = """
[meta]
name = "small"
seed = 9

[plant]
x0 = [0.1, 0.0]

[[plant.modes]]
A = [[0.0, 1.0], [-1.0, -2.0]]
B = [0.0, 1.0]
C = [1.0, 0.0]
k = 1.0

[uncertainty]
d_vertices = [0.05, -0.05]

[controller]
Ts = 0.005

[schedule]
horizon = 0.2

[reference]
kind = "step"
amplitude = 1.0
start = 0.05
"""

FLIGHT = """
[meta]
name = "short_flight"

[aircraft]
qbar = 500.0

[controller]
Ts = 0.01

[schedule]
horizon = 0.4
"""


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL)
    return path


def dwell(mocker, *argv):
    mocker.patch("sys.argv", ["dwell"] + [str(item) for item in argv])
    return run(targets=[run_command])


def summary(directory):
    return json.loads((directory / "summary.json").read_text())


def test_simulate(mocker, tmp_path, small):
    out = tmp_path / "out"
    assert dwell(mocker, "simulate", small, "--out", out) == 0
    manifest = (out / "trace.csv").read_text().splitlines()[0]
    assert manifest.startswith("# dwell {} config-sha256=".format(__version__))
    trace = read_csv(out / "trace.csv")
    assert len(trace) == 401
    assert trace.has("xtilde_1") and trace.has("sup_eu")
    result = summary(out)
    assert result["exit_code"] == 0
    assert result["status"] == "clean"
    assert result["seed"] == 9
    assert set(result["results"]["observables"]) == {"xtilde", "x", "u", "e", "e_u"}


def test_seed_flag_wins(mocker, tmp_path, small):
    out = tmp_path / "out"
    assert dwell(mocker, "simulate", small, "--out", out, "--seed", 42) == 0
    assert summary(out)["seed"] == 42


def test_missing_scenario_is_a_config_error(mocker, tmp_path):
    assert dwell(mocker, "simulate", tmp_path / "missing.toml", "--out", tmp_path) == 1


def test_invalid_scenario_is_a_config_error(mocker, tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(SMALL + "\n[controller.filter]\ngain = 1.0\nD_f = 1.0\n")
    assert dwell(mocker, "certify", path, "--out", tmp_path) == 1


@pytest.mark.parametrize("name", ["filter_zero", "non_hurwitz", "dwell_violated", "ts_too_large", "parametric"])
def test_negative_gallery(mocker, tmp_path, name):
    path = GALLERY / "{}.toml".format(name)
    expected = 3
    assert dwell(mocker, "certify", path, "--out", tmp_path) == expected
    certificate = json.loads((tmp_path / "certificate.json").read_text())
    assert certificate["feasible"] is False
    assert certificate["violation"]
    result = summary(tmp_path)
    assert result["status"] == "certificate infeasible"
    assert result["results"]["violation"] == certificate["violation"]


def test_certify(mocker, tmp_path, small):
    assert dwell(mocker, "certify", small, "--out", tmp_path, "--strict-norm-bounds") == 0
    certificate = json.loads((tmp_path / "certificate.json").read_text())
    assert certificate["feasible"] is True
    assert "lambda" in certificate
    assert any(flag.startswith("strict norm bounds") for flag in certificate["flags"])


def test_compare(mocker, tmp_path, small):
    assert dwell(mocker, "compare", small, "--out", tmp_path) == 0
    theorem = json.loads((tmp_path / "theorem1.json").read_text())
    assert [item["name"] for item in theorem["bounds"]] == ["xtilde", "x", "u", "x_ref - x", "u_ref - u"]
    assert theorem["passed"] is True
    assert all(item["margin"] > 0 for item in theorem["bounds"])
    assert (tmp_path / "certificate.json").exists()
    assert (tmp_path / "trace.csv").exists()


def test_compare_benchmark_holds_the_bounds(mocker, tmp_path):
    assert dwell(mocker, "compare", GALLERY / "benchmark.toml", "--out", tmp_path) == 0
    certificate = json.loads((tmp_path / "certificate.json").read_text())
    assert certificate["feasible"] is True
    theorem = json.loads((tmp_path / "theorem1.json").read_text())
    assert theorem["passed"] is True
    assert all(item["margin"] > 0 for item in theorem["bounds"])
    assert summary(tmp_path)["status"] == "clean"


def test_compare_zero_uncertainty_matches_reference(mocker, tmp_path):
    assert dwell(mocker, "compare", GALLERY / "zero_uncertainty.toml", "--out", tmp_path) == 0
    trace = read_csv(tmp_path / "trace.csv")
    assert trace.column("t")[-1] == pytest.approx(10.0)
    error = trace.block("x_ref") - trace.block("x")
    assert np.max(np.linalg.norm(error, axis=1)) < 1e-8
    assert np.max(np.abs(trace.block("eta1"))) < 1e-12
    assert np.max(np.abs(trace.block("eta2"))) < 1e-12
    assert json.loads((tmp_path / "theorem1.json").read_text())["passed"] is True


def test_compare_fails_on_unbounded_certificate(mocker, tmp_path):
    path = GALLERY / "parametric.toml"
    assert dwell(mocker, "compare", path, "--out", tmp_path) == 3
    theorem = json.loads((tmp_path / "theorem1.json").read_text())
    assert theorem["passed"] is False
    assert (tmp_path / "trace.csv").exists()
    assert summary(tmp_path)["status"] == "certificate infeasible"


def test_bounds(mocker, tmp_path, small, capsys):
    assert dwell(mocker, "bounds", small, "--out", tmp_path, "--ts-sweep", "0.001:0.005:3") == 0
    lines = (tmp_path / "bounds.csv").read_text().splitlines()
    assert lines[0] == "Ts,lhs,delta0,delta1,delta2,satisfied"
    assert len(lines) == 4
    assert "delta0" in capsys.readouterr().out


def test_bounds_infeasible(mocker, tmp_path):
    assert dwell(mocker, "bounds", GALLERY / "filter_zero.toml", "--out", tmp_path) == 3
    assert not (tmp_path / "bounds.csv").exists()


def test_bounds_bad_sweep(mocker, tmp_path, small):
    assert dwell(mocker, "bounds", small, "--out", tmp_path, "--ts-sweep", "fast") == 1


def test_sweep(mocker, tmp_path, small):
    assert dwell(mocker, "sweep", small, "--out", tmp_path, "--runs", 2) == 0
    result = json.loads((tmp_path / "sweep.json").read_text())
    assert result["n_runs"] == 2
    assert len(result["runs"]) == 2


def test_sweep_needs_linear_plant(mocker, tmp_path):
    assert dwell(mocker, "sweep", GALLERY / "l2f_nominal.toml", "--out", tmp_path) == 1


def test_simulate_flight(mocker, tmp_path):
    path = tmp_path / "flight.toml"
    path.write_text(FLIGHT)
    out = tmp_path / "out"
    assert dwell(mocker, "simulate", path, "--out", out) == 0
    trace = read_csv(out / "trace.csv")
    assert trace.has("theta") and trace.has("Cm_alpha")
    assert summary(out)["results"]["observables"]["publishes"] == 2


def test_compare_flight(mocker, tmp_path):
    path = tmp_path / "flight.toml"
    path.write_text(FLIGHT)
    assert dwell(mocker, "compare", path, "--out", tmp_path) == 0
    assert (tmp_path / "baseline.csv").exists()
    assert (tmp_path / "l1.csv").exists()
    results = summary(tmp_path)["results"]
    assert {"baseline-only", "with-L1"} <= set(results)
