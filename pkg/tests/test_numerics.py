"""Test log-domain arithmetic, Gauss rules and the scaled kernel."""

import math

import numpy as np
import pytest

from ou_frequency.errors import DomainError
from ou_frequency.numerics import (
    LogReal,
    gauss_rule,
    lr_add,
    lr_relative_gap,
    lr_sum,
    signed_log,
    signed_logaddexp,
    signed_logsumexp,
    signed_logsumexp_rows,
    u0_bounds_margin,
    u0_log,
    u0_scaled,
    u0_scaled_asymptotic,
)


def test_lr_add_small_numbers():
    """Test (+, ln 2) + (+, ln 3) = (+, ln 5)."""
    total = LogReal(sign=1, logmag=math.log(2)) + LogReal(sign=1, logmag=math.log(3))
    assert total.sign == 1
    assert total.logmag == pytest.approx(math.log(5), rel=1e-15)


def test_lr_add_exact_cancellation():
    """Test that equal magnitudes with opposite signs cancel to zero."""
    a = LogReal(sign=1, logmag=7.25)
    assert (a + (-a)).is_zero


def test_lr_add_large_magnitudes():
    """Test log-sum-exp far beyond the float range."""
    total = LogReal(sign=1, logmag=1000.0) + LogReal(sign=1, logmag=990.0)
    assert total.logmag == pytest.approx(1000.0 + math.log1p(math.exp(-10.0)), abs=1e-12)


def test_lr_add_commutes_and_associates():
    """Test a + b = b + a and (a + b) + c = a + (b + c) on random signed values."""
    rng = np.random.default_rng(11)
    signs = rng.choice([-1, 1], size=(200, 3))
    logs = rng.uniform(-50.0, 50.0, size=(200, 3))
    for sign_row, log_row in zip(signs, logs):
        a, b, c = (LogReal(sign=int(s), logmag=float(m)) for s, m in zip(sign_row, log_row))
        scale = 1e-12 * sum(math.exp(m) for m in log_row)
        assert lr_add(a, b).to_float() == pytest.approx(lr_add(b, a).to_float(), abs=scale)
        left = lr_add(lr_add(a, b), c).to_float()
        right = lr_add(a, lr_add(b, c)).to_float()
        assert left == pytest.approx(right, abs=scale)


def test_lr_mul_and_zero():
    """Test sign multiplication, log addition and the absorbing zero."""
    product = LogReal(sign=1, logmag=1.0) * LogReal(sign=-1, logmag=2.0)
    assert product.sign == -1
    assert product.logmag == 3.0
    assert (LogReal(sign=1, logmag=500.0) * LogReal(sign=1, logmag=500.0)).logmag == 1000.0
    assert (product * LogReal.zero()).is_zero


def test_lr_reciprocal_of_zero():
    """Test that dividing by zero is a domain error."""
    with pytest.raises(DomainError):
        LogReal.from_float(1.0) / LogReal.zero()


def test_lr_matches_native_floats():
    """Test agreement with native arithmetic on moderate values."""
    rng = np.random.default_rng(7)
    for a, b in rng.uniform(-1e3, 1e3, size=(50, 2)):
        if abs(a + b) < 0.1 * max(abs(a), abs(b)):
            continue
        la, lb = LogReal.from_float(a), LogReal.from_float(b)
        assert (la + lb).to_float() == pytest.approx(a + b, rel=1e-13, abs=1e-300)
        assert (la * lb).to_float() == pytest.approx(a * b, rel=1e-13)


def test_lr_sum_and_relative_gap():
    """Test summing a sequence and the relative gap helper."""
    items = [LogReal.from_float(x) for x in (1.0, 2.0, -0.5)]
    assert lr_sum(items).to_float() == pytest.approx(2.5)
    assert lr_relative_gap(LogReal.from_float(2.0), LogReal.from_float(1.0)) == pytest.approx(0.5)
    assert lr_relative_gap(LogReal.zero(), LogReal.zero()) == 0.0


def test_to_float_saturates():
    """Test that huge magnitudes convert to infinity."""
    assert LogReal(sign=-1, logmag=1000.0).to_float() == -math.inf


def test_signed_array_helpers():
    """Test signed log splitting and reductions."""
    signs, logs = signed_log(np.array([2.0, 0.0, -3.0]))
    assert signs.tolist() == [1.0, 0.0, -1.0]
    assert logs[1] == -np.inf
    assert signed_logsumexp(signs, logs).to_float() == pytest.approx(-1.0)

    s, lg = signed_logaddexp(signs, logs, -signs, logs)
    assert np.all(s == 0)

    rows_s, rows_l = signed_logsumexp_rows(
        np.array([[1.0, 1.0], [1.0, -1.0]]), np.array([[0.0, 0.0], [1.0, 0.0]])
    )
    assert rows_s.tolist() == [1.0, 1.0]
    assert np.exp(rows_l[0]) == pytest.approx(2.0)
    assert np.exp(rows_l[1]) == pytest.approx(math.e - 1.0)


def test_gauss_rule_classical_values():
    """Test midpoint and two-point rules and degree-3 exactness."""
    one = gauss_rule(1, -1.0, 1.0)
    assert one.nodes == pytest.approx((0.0,))
    assert one.weights == pytest.approx((2.0,))

    two = gauss_rule(2, -1.0, 1.0)
    assert two.nodes == pytest.approx((-1 / math.sqrt(3), 1 / math.sqrt(3)))
    assert two.weights == pytest.approx((1.0, 1.0))

    assert gauss_rule(2, 0.0, 1.0).integrate(lambda x: x**3) == pytest.approx(0.25, abs=1e-15)


def test_gauss_rule_rejects_bad_input():
    """Test argument validation."""
    with pytest.raises(ValueError):
        gauss_rule(0, 0.0, 1.0)
    with pytest.raises(ValueError):
        gauss_rule(4, 1.0, 1.0)


def test_u0_scaled_values():
    """Test w(0) = 0, w(2) and odd symmetry."""
    assert u0_scaled(0.0) == 0.0
    assert u0_scaled(2.0) == pytest.approx(2.92530 / math.e, rel=1e-5)
    xs = np.linspace(-30, 30, 61)
    assert np.allclose(u0_scaled(-xs), -u0_scaled(xs), rtol=0, atol=0)


def test_u0_scaled_matches_quadrature():
    """Test w against an adaptive integral of exp((s^2 - x^2)/4)."""
    from scipy import integrate

    for x in (0.5, 3.0, 12.0, 40.0):
        exact, _ = integrate.quad(lambda s: math.exp(0.25 * (s * s - x * x)), 0.0, x, epsabs=0, epsrel=1e-13, limit=200)
        assert u0_scaled(x) == pytest.approx(exact, rel=1e-10)


def test_u0_two_sided_bound():
    """Test 1 <= x w(x) <= 6 on [2, 200]."""
    lower, upper = u0_bounds_margin(np.arange(2.0, 200.01, 0.5))
    assert lower >= 0.0
    assert upper >= 0.0
    with pytest.raises(DomainError):
        u0_bounds_margin(np.array([1.0]))


def test_u0_log_agrees_with_oracle():
    """Test u0(2) and the log-domain value far out."""
    assert u0_log(2.0).to_float() == pytest.approx(2.92530, rel=1e-5)
    big = u0_log(100.0)
    assert big.sign == 1
    assert big.logmag == pytest.approx(2500.0 + math.log(u0_scaled(100.0)))


def test_asymptotic_series_bound():
    """Test that the truncation bound covers the series error."""
    for x in (8.0, 20.0, 60.0):
        series, bound = u0_scaled_asymptotic(x, terms=3)
        assert math.isfinite(bound)
        assert abs(u0_scaled(x) - series) <= bound
    assert u0_scaled_asymptotic(3.0, terms=3)[1] == math.inf
    with pytest.raises(DomainError):
        u0_scaled_asymptotic(-1.0)


def test_u0_scaled_asymptotic_terms_at_fifty():
    """Test w(50) against the first three terms of its large-x series."""
    assert abs(u0_scaled(50.0) - 2 / 50 - 4 / 50**3 - 24 / 50**5) <= 1e-8
