"""Margin statistics and fitted constants for sampled inequalities."""

from typing import Optional

import numpy as np
from pydantic import BaseModel, Field


class MarginSummary(BaseModel):
    """How a sampled inequality margin behaves along a radius grid."""

    min_margin: float = Field(description="Smallest margin on the whole grid")
    min_margin_radius: float = Field(description="Radius of the smallest margin")
    measured_radius: Optional[float] = Field(
        default=None,
        description="Smallest radius after which the margin stays >= -tolerance",
    )
    tail_margin: Optional[float] = Field(
        default=None, description="Smallest margin beyond the measured radius"
    )
    tail_points: int = Field(description="Grid points beyond the measured radius")

    model_config = {"frozen": True}


def measured_radius_index(ok: np.ndarray) -> Optional[int]:
    """Index i such that ok[j] holds for all j >= i, minimal; None if ok[-1] fails."""
    ok = np.asarray(ok, dtype=bool)
    if ok.size == 0 or not ok[-1]:
        return None
    failures = np.flatnonzero(~ok)
    return 0 if failures.size == 0 else int(failures[-1]) + 1


def summarize_margins(
    r: np.ndarray,
    margins: np.ndarray,
    tolerance: float = 0.0,
) -> MarginSummary:
    """Summarize margins sampled on a radius grid.

    Args:
        r: Radius grid
        margins: Margin per radius (>= 0 means the inequality holds)
        tolerance: Absolute slack allowed before a point counts as a violation

    Returns:
        Margin summary
    """
    r = np.asarray(r, dtype=float)
    margins = np.asarray(margins, dtype=float)
    worst = int(np.nanargmin(margins))
    index = measured_radius_index(margins >= -tolerance)
    if index is None:
        return MarginSummary(
            min_margin=float(margins[worst]),
            min_margin_radius=float(r[worst]),
            tail_points=0,
        )
    return MarginSummary(
        min_margin=float(margins[worst]),
        min_margin_radius=float(r[worst]),
        measured_radius=float(r[index]),
        tail_margin=float(np.min(margins[index:])),
        tail_points=int(r.size - index),
    )


def loglog_slope(xs: np.ndarray, log_ys: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(xs, dtype=float)), np.asarray(log_ys), 1)[0])


def centered_derivative(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """dy/dx by centered differences with one-sided ends.

    Uniform grids use the five-point stencil in the interior and second-order
    stencils next to the ends; other grids fall back to numpy.gradient.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.size < 5:
        return np.gradient(y, x, edge_order=1 if y.size < 3 else 2)
    steps = np.diff(x)
    h = float(np.mean(steps))
    if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        return np.gradient(y, x, edge_order=2)
    out = np.gradient(y, h, edge_order=2)
    out[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    return out
