"""Test the exact eigenfunction ladder and Hermite polynomials."""

import math
from fractions import Fraction

import numpy as np
import pytest

from ou_frequency.certificates import loglog_slope
from ou_frequency.errors import LadderCapacityError, PreconditionError
from ou_frequency.ladder import (
    BasisTag,
    LadderFunction,
    RationalPoly,
    check_parity,
    drift_laplacian,
    eigen_residual,
    growth_certificate,
    hermite_polynomial,
    integrate_basis,
    ladder_build,
    ladder_differentiate,
    ladder_eval,
    ladder_integrate,
    ladder_taylor,
    taylor_approx_check,
)


def _zero(triple):
    return all(part.is_zero for part in triple)


def test_rational_poly_arithmetic():
    """Test trimming, products and evaluation."""
    a = RationalPoly([1, 2, 0, 0])
    b = RationalPoly(["1/2", -1])
    assert a.degree == 1
    assert (a * b).coefficients == (Fraction(1, 2), Fraction(0), Fraction(-2))
    assert (a - a).is_zero
    assert a(Fraction(1, 2)) == 2
    assert RationalPoly.from_strings(b.to_strings()) == b


def test_ladder_base_levels():
    """Test u0, u_-1 = exp(x^2/4) and u1 = x u0 - 2 exp(x^2/4)."""
    u0 = ladder_build(0)
    assert (u0.p, u0.q, u0.s) == (RationalPoly([1]), RationalPoly(), RationalPoly())

    um1 = ladder_build(-1)
    assert (um1.p, um1.q, um1.s) == (RationalPoly(), RationalPoly([1]), RationalPoly())

    u1 = ladder_build(1)
    assert u1.p == RationalPoly([0, 1])
    assert u1.q == RationalPoly([-2])
    assert u1.s.is_zero
    assert u1.value_at_zero() == -2


def test_eigen_residual_vanishes_on_ladder():
    """Test exact eigen equations for k in [-8, 8]."""
    for k in range(-8, 9):
        assert _zero(eigen_residual(ladder_build(k))), k


def test_eigen_residual_detects_wrong_level():
    """Test that u0 tagged at level 2 is not an eigenfunction."""
    assert not _zero(eigen_residual(ladder_build(0).with_level(2)))


def test_differentiate_round_trip():
    """Test u_k' = u_(k-1) coefficient for coefficient."""
    for k in range(-6, 8):
        assert ladder_differentiate(ladder_build(k)) == ladder_build(k - 1), k


def test_differentiate_rules():
    """Test the rewrite rules for the basis derivatives."""
    gauss = ladder_differentiate(LadderFunction(q=RationalPoly([1])))
    assert gauss.q == RationalPoly([0, Fraction(1, 2)])
    assert drift_laplacian(LadderFunction(q=RationalPoly([1]))).q == RationalPoly([Fraction(1, 2)])


def test_integrate_basis_examples():
    """Test closed-form antiderivatives in the basis."""
    assert integrate_basis(0, BasisTag.GAUSSIAN) == LadderFunction(p=RationalPoly([1]))
    assert integrate_basis(1, BasisTag.GAUSSIAN) == LadderFunction(
        q=RationalPoly([2]), s=RationalPoly([-2])
    )
    assert integrate_basis(2, BasisTag.GAUSSIAN) == LadderFunction(
        p=RationalPoly([-2]), q=RationalPoly([0, 2])
    )
    with pytest.raises(ValueError):
        integrate_basis(129, BasisTag.POLY)


def test_integrate_then_differentiate():
    """Test that ladder_integrate inverts differentiation on the ladder."""
    F = ladder_build(2)
    back = ladder_differentiate(ladder_integrate(F))
    assert (back.p, back.q, back.s) == (F.p, F.q, F.s)


def test_ladder_capacity():
    """Test the level bound."""
    with pytest.raises(LadderCapacityError):
        ladder_build(65)


def test_hermite_polynomials():
    """Test h0, h1, h2 and exact residuals."""
    assert hermite_polynomial(0).poly == RationalPoly([1])
    assert hermite_polynomial(1).poly == RationalPoly([0, 1])
    assert hermite_polynomial(2).poly == RationalPoly([-2, 0, 1])
    for k in range(9):
        assert _zero(eigen_residual(hermite_polynomial(k).as_ladder()))


def test_parity():
    """Test the parity implied by the eigenlevel."""
    for k in range(-5, 6):
        assert check_parity(ladder_build(k))
    assert not check_parity(ladder_build(0).with_level(1))


def test_ladder_eval_values():
    """Test u0(2), u1(0) and derivative evaluation."""
    assert ladder_eval(ladder_build(0), 2.0).to_float() == pytest.approx(2.92530, rel=1e-5)
    assert ladder_eval(ladder_build(1), 0.0).to_float() == pytest.approx(-2.0)
    assert ladder_eval(ladder_build(0), 1.0, d=1).to_float() == pytest.approx(math.exp(0.25))
    far = ladder_eval(ladder_build(-1), 60.0)
    assert far.logmag == pytest.approx(900.0)


def test_ladder_eval_matches_adaptive_integral():
    """Test u_k(x) = u_k(0) + int_0^x u_(k-1) for k in [-3, 3]."""
    from scipy import integrate

    for k in range(-3, 4):
        F = ladder_build(k)
        below = ladder_build(k - 1)
        start = ladder_eval(F, 0.0).to_float()
        for x in (0.5, 1.0, 2.0, 4.0):
            area, _ = integrate.quad(
                lambda t: ladder_eval(below, t).to_float(), 0.0, x, epsabs=0, epsrel=1e-12, limit=200
            )
            assert ladder_eval(F, x).to_float() == pytest.approx(start + area, rel=1e-9, abs=1e-12)


def test_ladder_constants_vanish_at_even_levels():
    """Test d_(k+1) = u_(k+1)(0) is zero for odd k and follows -2 u_(k-1)(0) / (k+1) otherwise."""
    for k in (1, 3, 5, 7):
        assert ladder_build(k + 1).value_at_zero() == 0
    expected = {1: Fraction(-2), 3: Fraction(4, 3), 5: Fraction(-8, 15), 7: Fraction(16, 105)}
    for level, value in expected.items():
        assert ladder_build(level).value_at_zero() == value


def test_growth_certificate_bounds_samples():
    """Test |u3(10)| 10^4 exp(-25) <= c3."""
    F = ladder_build(3)
    certificate = growth_certificate(F)
    value = ladder_eval(F, 10.0)
    scaled = math.exp(value.logmag + 4 * math.log(10.0) - 25.0)
    assert scaled <= certificate.c_k * (1 + 1e-12)


def test_json_round_trip():
    """Test the exact coefficient JSON."""
    data = ladder_build(1).to_json_dict()
    assert data == {"k": 1, "p": ["0/1", "1/1"], "q": ["-2/1"], "s": []}
    assert LadderFunction.from_json_dict(data) == ladder_build(1)


def test_ladder_taylor_is_exact_for_polynomials():
    """Test the Taylor polynomial of h2 and of u0."""
    assert ladder_taylor(hermite_polynomial(2).as_ladder(), 2) == RationalPoly([-2, 0, 1])
    # u0 = x + x^3/12 + ...
    assert ladder_taylor(ladder_build(0), 3) == RationalPoly([0, 1, 0, Fraction(1, 12)])


def test_taylor_check_polynomial_has_zero_lhs():
    """Test that substituting h_k gives lhs = 0."""
    lhs, rhs = taylor_approx_check(2, 1.0, 6.0, F=hermite_polynomial(2).as_ladder())
    assert lhs.is_zero
    assert rhs.sign == 1


def test_taylor_check_ratio_has_no_growth_trend():
    """Test lhs/rhs_core stays bounded over R for k = 0, 1, 2."""
    radii = np.array([6.0, 8.0, 10.0, 12.0])
    ratios = {}
    for k in (0, 1, 2):
        logs = []
        for R in radii:
            lhs, rhs = taylor_approx_check(k, 1.0, R)
            logs.append(lhs.logmag - rhs.logmag)
        assert loglog_slope(radii, np.array(logs)) <= 0.1
        ratios[k] = logs
    assert abs(ratios[1][1] - ratios[0][1]) <= math.log(10.0)


def test_taylor_check_precondition():
    """Test R >= max(2 R0, 4)."""
    with pytest.raises(PreconditionError):
        taylor_approx_check(0, 3.0, 5.0)
