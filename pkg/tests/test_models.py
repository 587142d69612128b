"""Test core data models."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from ou_frequency.models import CheckReport, CheckStatus, FrequencyCurve, Trajectory


def test_check_status_ok():
    """Test which statuses count as passing."""
    assert CheckStatus.PASSED.ok
    assert CheckStatus.EXEMPT.ok
    assert not CheckStatus.FAILED.ok
    assert not CheckStatus.INCONCLUSIVE.ok


def test_check_report_to_dict():
    """Test CheckReport serialization of enums, numpy values and infinities."""
    report = CheckReport(
        name="growth",
        status=CheckStatus.PASSED,
        margin=0.25,
        radius=6.5,
        details={"gaps": np.array([1.0, 2.0]).tolist(), "count": np.int64(3), "bound": math.inf},
    )
    data = report.to_dict()
    assert data["status"] == "PASSED"
    assert data["details"]["count"] == 3
    assert data["details"]["bound"] == "inf"
    assert report.passed


def test_check_report_is_frozen():
    """Test that reports cannot be edited after creation."""
    report = CheckReport(name="x", status=CheckStatus.FAILED)
    with pytest.raises(ValidationError):
        report.name = "y"
    assert not report.passed


def _curve(**overrides):
    columns = {name: [1.0, 2.0] for name in FrequencyCurve.model_fields}
    columns.update(overrides)
    return FrequencyCurve(**columns)


def test_frequency_curve_dataframe():
    """Test column order and array access."""
    curve = _curve(r=[3.0, 4.0])
    frame = curve.to_dataframe()
    assert list(frame.columns) == ["r", "logI", "logD", "U", "Uprime", "W", "margin"]
    assert curve.array("r").tolist() == [3.0, 4.0]


def test_frequency_curve_rejects_ragged_columns():
    """Test equal column lengths."""
    with pytest.raises(ValidationError):
        _curve(U=[1.0])


def test_trajectory_must_be_positive():
    """Test h > 0 on every sample."""
    Trajectory(r=[1.0], h=[0.5], hprime=[0.0], Pvalue=[0.0])
    with pytest.raises(ValidationError):
        Trajectory(r=[1.0, 2.0], h=[0.5, 0.0], hprime=[0.0, 0.0], Pvalue=[0.0, 0.0])
