"""Ordered log of check reports and deterministic artifact writers."""

import json
import os
import tempfile
from pathlib import Path
from typing import Any

import pandas as pd

from ou_frequency.models import CheckReport, CheckStatus


def _atomic_write(path: Path, text: str) -> None:
    """Write text through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, data: Any) -> None:
    """Write indented JSON with a trailing newline."""
    _atomic_write(path, json.dumps(data, indent=2) + "\n")


def write_csv(path: Path, frame: pd.DataFrame) -> None:
    """Write a DataFrame as CSV with 17 significant digits and Unix newlines."""
    _atomic_write(path, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))


class CheckLog:
    """Reports in the order they were declared."""

    def __init__(self, command: str, output_file: Path | None = None):
        """Initialize check log.

        Args:
            command: CLI command the reports belong to
            output_file: Path to the summary JSON (optional)
        """
        self.command = command
        self.output_file = output_file
        self.reports: list[CheckReport] = []

    def log(self, report: CheckReport) -> None:
        """Append a report."""
        self.reports.append(report)

    def extend(self, reports: list[CheckReport]) -> None:
        self.reports.extend(reports)

    @property
    def all_passed(self) -> bool:
        """True when every report is PASSED or EXEMPT (an empty log does not pass)."""
        return bool(self.reports) and all(report.passed for report in self.reports)

    def failing(self) -> list[CheckReport]:
        return [report for report in self.reports if not report.passed]

    def summary(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "passed": self.all_passed,
            "checks": [report.to_dict() for report in self.reports],
        }

    def save(self) -> None:
        """Write the summary JSON to output_file."""
        if self.output_file is None:
            raise ValueError("check log has no output file")
        write_json(self.output_file, self.summary())

    def load(self, file_path: Path) -> list[CheckReport]:
        """Load reports from a summary JSON written by save."""
        with open(file_path) as f:
            data = json.load(f)
        return [CheckReport.model_validate(_restore_floats(item)) for item in data["checks"]]

    def get_reports_by_status(self, status: CheckStatus) -> list[CheckReport]:
        """Reports with the given status.

        Args:
            status: Status to filter

        Returns:
            List of matching reports
        """
        return [report for report in self.reports if report.status == status]


def _restore_floats(item: dict[str, Any]) -> dict[str, Any]:
    out = dict(item)
    for key in ("margin", "radius"):
        if isinstance(out.get(key), str):
            out[key] = float(out[key])
    return out
