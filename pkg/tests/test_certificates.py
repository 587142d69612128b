"""Test margin summaries and finite-difference helpers."""

import numpy as np
import pytest

from ou_frequency.certificates import (
    centered_derivative,
    loglog_slope,
    measured_radius_index,
    summarize_margins,
)


def test_measured_radius_index():
    """Test the first index after the last failure."""
    assert measured_radius_index(np.array([True, True])) == 0
    assert measured_radius_index(np.array([True, False, True, True])) == 2
    assert measured_radius_index(np.array([True, False])) is None
    assert measured_radius_index(np.array([], dtype=bool)) is None


def test_summarize_margins():
    """Test minimum, measured radius and tail statistics."""
    r = np.array([1.0, 2.0, 3.0, 4.0])
    summary = summarize_margins(r, np.array([0.5, -1.0, 0.2, 0.4]))
    assert summary.min_margin == -1.0
    assert summary.min_margin_radius == 2.0
    assert summary.measured_radius == 3.0
    assert summary.tail_margin == 0.2
    assert summary.tail_points == 2


def test_summarize_margins_without_tail():
    """Test a margin that fails at the last radius."""
    summary = summarize_margins(np.array([1.0, 2.0]), np.array([1.0, -0.1]))
    assert summary.measured_radius is None
    assert summary.tail_points == 0
    assert summarize_margins(np.array([1.0, 2.0]), np.array([1.0, -0.1]), 0.2).tail_points == 2


def test_centered_derivative_exact_on_quartics():
    """Test the five-point stencil on a uniform grid."""
    x = np.linspace(0.0, 2.0, 21)
    y = x**4 - 3 * x**2
    dy = centered_derivative(y, x)
    assert np.allclose(dy[2:-2], 4 * x[2:-2] ** 3 - 6 * x[2:-2], atol=1e-10)
    assert np.allclose(dy, 4 * x**3 - 6 * x, atol=0.5)


def test_centered_derivative_nonuniform_and_short():
    """Test fallbacks on irregular and tiny grids."""
    x = np.array([0.0, 0.5, 1.5, 2.0, 3.0, 4.5])
    assert np.allclose(centered_derivative(2 * x + 1, x), 2.0)
    assert centered_derivative(np.array([0.0, 1.0]), np.array([0.0, 1.0])).tolist() == [1.0, 1.0]


def test_loglog_slope():
    """Test the slope of a power law."""
    xs = np.array([2.0, 4.0, 8.0])
    assert loglog_slope(xs, 3.0 * np.log(xs) + 1.0) == pytest.approx(3.0)
