# tests/test_cli.py

import json

import pytest
from typer.testing import CliRunner

from StrategicDynamics import __app_name__, __version__
from StrategicDynamics.cli import app
from StrategicDynamics.dynamics import TRAJECTORY_COLUMNS
from StrategicDynamics.metrics import METRIC_COLUMNS

runner = CliRunner()


@pytest.fixture(autouse=True)
def in_tmp_path(tmp_path, monkeypatch):
    # log files go to ./logs
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_version():
    assert __app_name__ == "StrategicDynamics"
    assert __version__


def test_simulate_writes_csv():
    result = runner.invoke(app, ["simulate", "--t-end", "1", "--record-every", "10"])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 1 + 11
    assert lines[1].startswith("0,0.5,0.5,")


def test_simulate_with_metrics_to_file(tmp_path):
    result = runner.invoke(app, ["simulate", "--t-end", "1", "--metrics", "--out", "traj.csv"])
    assert result.exit_code == 0
    assert "Saved csv report" in result.stdout
    header = (tmp_path / "traj.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header.split(",") == TRAJECTORY_COLUMNS + METRIC_COLUMNS


def test_simulate_json_format():
    result = runner.invoke(app, ["simulate", "--t-end", "0.1", "--format", "json"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["x1"][0] == 0.5


def test_invalid_config_exits_with_2(tmp_path):
    (tmp_path / "bad.cfg").write_text("c_F = 7\n", encoding="utf-8")
    result = runner.invoke(app, ["simulate", "--config", "bad.cfg"])
    assert result.exit_code == 2
    assert "c_F < c_I" in result.stdout


def test_overflowing_config_value_exits_with_2(tmp_path):
    (tmp_path / "bad.cfg").write_text("seed = inf\n", encoding="utf-8")
    result = runner.invoke(app, ["simulate", "--config", "bad.cfg"])
    assert result.exit_code == 2
    assert "bad.cfg:1:8" in result.stdout


def test_unknown_config_key_exits_with_2(tmp_path):
    (tmp_path / "bad.cfg").write_text("alpha = 1\n", encoding="utf-8")
    result = runner.invoke(app, ["stability", "--config", "bad.cfg"])
    assert result.exit_code == 2
    assert "alpha" in result.stdout


def test_bad_threads_exit_with_2():
    result = runner.invoke(app, ["basins", "--grid-n", "2", "--threads", "many"])
    assert result.exit_code == 2


def test_instability_exits_with_3():
    result = runner.invoke(app, ["simulate", "--x0", "0", "--yg0", "0.5", "--yb0", "1", "--dt", "1", "--t-end", "5"])
    assert result.exit_code == 3
    assert "StepInstabilityError" in result.stdout


def test_unwritable_output_exits_with_4(tmp_path):
    (tmp_path / "taken").write_text("", encoding="utf-8")
    result = runner.invoke(app, ["dominance", "--out", "taken/report.json"])
    assert result.exit_code == 4


def test_stability_json():
    result = runner.invoke(app, ["stability", "--scenario", "manipulation_proof", "--format", "json"])
    assert result.exit_code == 0
    reports = json.loads(result.stdout)
    assert set(reports[0]) == {"location", "kind", "eigenvalues", "classification", "label"}
    stable = [r for r in reports if r["classification"] == "stable"]
    assert [r["label"] for r in stable] == ["(M,NA,I)"]


def test_stability_table():
    result = runner.invoke(app, ["stability"])
    assert result.exit_code == 0
    assert "Fixed points (baseline)" in result.stdout


def test_dominance_checks_every_builtin_scenario():
    result = runner.invoke(app, ["dominance"])
    assert result.exit_code == 0
    reports = json.loads(result.stdout)
    assert [r["scenario"] for r in reports] == ["baseline", "manipulation_proof", "recourse"]
    assert all(r["passed"] for r in reports)

    result = runner.invoke(app, ["dominance", "--scenario", "recourse"])
    assert [r["scenario"] for r in json.loads(result.stdout)] == ["recourse"]


def test_basins_output_is_byte_identical(tmp_path):
    args = ["basins", "--grid-n", "3", "--t-end", "50", "--out"]
    assert runner.invoke(app, args + ["first.json"]).exit_code == 0
    assert runner.invoke(app, args + ["second.json", "--threads", "2"]).exit_code == 0
    first, second = (tmp_path / "first.json").read_bytes(), (tmp_path / "second.json").read_bytes()
    assert first == second
    assert json.loads(first)["grid"]["total"] == 27


def test_basins_inclusive_placement(tmp_path):
    result = runner.invoke(app, ["basins", "--grid-n", "2", "--t-end", "10", "--placement", "inclusive", "--out", "b.json"])
    assert result.exit_code == 0
    grid = json.loads((tmp_path / "b.json").read_text(encoding="utf-8"))["grid"]
    assert grid == {"n_per_axis": 2, "placement": "inclusive", "total": 8}

    assert runner.invoke(app, ["basins", "--grid-n", "2", "--placement", "edges"]).exit_code == 2


def test_sweep_csv_header(tmp_path):
    # progress bars go to stderr, so reports with a grid loop are read back from files
    result = runner.invoke(app, ["sweep", "--ratios", "0.2", "--rates", "1", "--grid-n", "2", "--out", "sweep.csv"])
    assert result.exit_code == 0
    assert "1 cells done, 0 failed" in result.stdout
    lines = (tmp_path / "sweep.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "rho_over_lambda,r,endpoint,fraction"


def test_sweep_rejects_bad_lists():
    result = runner.invoke(app, ["sweep", "--ratios", "0.2,x", "--grid-n", "2"])
    assert result.exit_code == 2


def test_cycles_json(tmp_path):
    result = runner.invoke(app, ["cycles", "--scenario", "recourse", "--n-random", "4", "--t-end", "20",
                                 "--seed", "1", "--out", "cycles.json"])
    assert result.exit_code == 0
    payload = json.loads((tmp_path / "cycles.json").read_text(encoding="utf-8"))
    assert payload["seed"] == 1
    assert payload["n_random"] == 4
