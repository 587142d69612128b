"""Test the command-line interface."""

import json

import numpy as np
import pandas as pd
from typer.testing import CliRunner

from ou_frequency import __version__
from ou_frequency.cli import USAGE_ERROR, app

runner = CliRunner()


def test_ladder_writes_exact_coefficients(tmp_path):
    """Test ladder --k 1 emits the exact triple."""
    out = tmp_path / "u1.json"
    result = runner.invoke(app, ["ladder", "--k", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert json.loads(out.read_text()) == {"k": 1, "p": ["0/1", "1/1"], "q": ["-2/1"], "s": []}


def test_freq_csv_row(tmp_path):
    """Test the U column at r = 10 for u_0 on the line."""
    out = tmp_path / "curve.csv"
    result = runner.invoke(
        app, ["freq", "--n", "1", "--levels", "0", "--r-max", "40", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    row = frame[np.isclose(frame["r"], 10.0)]
    assert abs(float(row["U"].iloc[0]) - 48.96) <= 0.02


def test_freq_output_is_deterministic(tmp_path):
    """Test two identical runs write identical bytes."""
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        result = runner.invoke(
            app, ["freq", "--n", "2", "--levels", "1,0", "--r-max", "6", "--out", str(path)]
        )
        assert result.exit_code == 0, result.output
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_freq_json_format(tmp_path):
    """Test the column-oriented JSON artifact."""
    out = tmp_path / "curve.json"
    result = runner.invoke(
        app, ["freq", "--levels", "0", "--r-max", "4", "--format", "json", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert list(data) == ["r", "logI", "logD", "U", "Uprime", "W", "margin"]
    assert len(data["r"]) == 21


def test_verify_growth_suite_with_summary(tmp_path):
    """Test a passing suite and its summary JSON."""
    summary = tmp_path / "summary.json"
    result = runner.invoke(
        app, ["verify", "--levels", "0", "--suite", "growth", "--summary", str(summary)]
    )
    assert result.exit_code == 0, result.output
    data = json.loads(summary.read_text())
    assert data["command"] == "verify"
    assert data["passed"] is True
    assert [check["name"] for check in data["checks"]] == ["growth"]


def test_verify_failing_check_exits_one(tmp_path):
    """Test a failed check gives exit code 1 and is named in the output and summary."""
    summary = tmp_path / "summary.json"
    args = ["verify", "--levels", "0", "--suite", "growth", "--delta", "1000", "--r-max", "41"]
    result = runner.invoke(app, [*args, "--summary", str(summary)])
    assert result.exit_code == 1, result.output
    assert "growth: FAILED" in result.output
    data = json.loads(summary.read_text())
    assert data["passed"] is False
    assert [(check["name"], check["status"]) for check in data["checks"]] == [("growth", "FAILED")]


def test_ladder_help_states_level_range():
    """Test the --k help names the supported range."""
    result = runner.invoke(app, ["ladder", "--help"])
    assert result.exit_code == 0
    assert "|k| <= 64" in result.output


def test_compare_barrier_suite():
    """Test the barrier suite for n = 1, eps = 0.5."""
    result = runner.invoke(app, ["compare", "--eps", "0.5", "--suite", "barrier"])
    assert result.exit_code == 0, result.output


def test_cylinder_paths_suite():
    """Test mode-summed and tensor quadrature agree through the CLI."""
    result = runner.invoke(
        app, ["cylinder", "--levels=-1", "--suite", "paths", "--r-min", "4", "--r-max", "8"]
    )
    assert result.exit_code == 0, result.output


def test_invalid_configuration_is_usage_error(tmp_path):
    """Test inconsistent values, bad levels, unknown suites and bad config files."""
    assert runner.invoke(app, ["freq", "--n", "2", "--levels", "0"]).exit_code == USAGE_ERROR
    assert runner.invoke(app, ["freq", "--levels", "a"]).exit_code == USAGE_ERROR
    assert runner.invoke(app, ["verify", "--suite", "nonsense"]).exit_code == USAGE_ERROR
    assert runner.invoke(app, ["ladder", "--k", "500"]).exit_code == USAGE_ERROR

    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"r_min": 5.0, "r_max": 3.0}))
    assert runner.invoke(app, ["freq", "--config", str(config)]).exit_code == USAGE_ERROR
    missing = tmp_path / "missing.json"
    assert runner.invoke(app, ["freq", "--config", str(missing)]).exit_code == USAGE_ERROR


def test_version():
    """Test the version command."""
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert __version__ in result.output
