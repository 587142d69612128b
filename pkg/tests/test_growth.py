"""Test the growth, sharpness, U' and monotonicity suites."""

import numpy as np
import pytest

from ou_frequency.errors import PreconditionError
from ou_frequency.fields import ProductEigenfunction
from ou_frequency.frequency import BoundKind, compute_curve
from ou_frequency.growth import (
    check_uprime_bound,
    check_uprime_lower_bound,
    fit_uprime_constant,
    monotonicity_check,
    verify_growth,
    verify_sharpness,
    verify_uprime,
)
from ou_frequency.ladder import LadderFunction, RationalPoly, hermite_polynomial, ladder_build
from ou_frequency.models import CheckStatus, FrequencyCurve


@pytest.mark.parametrize("levels", [[0], [1], [2, 0], [1, 0, 0]])
def test_growth_unbounded_branch(levels):
    """Test U > r^2/2 - n - 2 lambda - 0.1 beyond a measured R <= 15."""
    v = ProductEigenfunction.from_levels(levels)
    report = verify_growth(v, eps=0.1, delta=0.5, r_max=15.0)
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["branch"] == "unbounded"
    assert report.radius <= 15.0


def test_growth_radius_for_u3():
    """Test the measured radius for u_3 on the line sits near r = 20.5."""
    v = ProductEigenfunction.from_levels([3])
    report = verify_growth(v, eps=0.1, delta=0.5, r_max=30.0)
    assert report.status == CheckStatus.PASSED, report.message
    assert 20.0 <= report.radius <= 21.5


def test_growth_nonzero_level_in_three_dimensions():
    """Test the unbounded branch for u_0(x_1) u_0(x_2) u_2(x_3)."""
    v = ProductEigenfunction.from_levels([0, 0, 2])
    report = verify_growth(v, eps=0.1, delta=0.5, r_max=30.0, r_step=0.5)
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["branch"] == "unbounded"
    assert report.details["lambda"] == 1.0


def test_growth_bounded_branch_for_hermite():
    """Test h_2 stays within 2 lambda + 0.05 and takes the bounded branch."""
    v = ProductEigenfunction.hermite([2])
    report = verify_growth(v, eps=0.1, delta=0.5, r_max=40.0, r_step=0.5)
    assert report.status == CheckStatus.PASSED
    assert report.details["branch"] == "bounded"
    assert report.details["U_last"] == pytest.approx(2.0, abs=5e-3)


def test_growth_bounded_tail_from_forty():
    """Test max |U - 2 lambda| <= 0.05 over every r >= 40 for h_2."""
    v = ProductEigenfunction.hermite([2])
    report = verify_growth(v, eps=0.1, delta=0.5, r_max=60.0, r_step=0.5)
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["tail_from"] >= 40.0
    assert report.details["deviation"] <= 0.05
    assert report.margin == pytest.approx(0.05 - report.details["deviation"])


def test_growth_bounded_tail_fails_outside_tolerance():
    """Test a settled bounded tail outside the tolerance fails."""
    v = ProductEigenfunction.hermite([2])
    report = verify_growth(v, eps=0.1, delta=0.5, r_max=60.0, r_step=0.5, bounded_tol=1e-6)
    assert report.status == CheckStatus.FAILED
    assert report.margin < 0


def test_growth_preconditions():
    """Test eps and delta must be positive."""
    v = ProductEigenfunction.from_levels([0])
    with pytest.raises(PreconditionError):
        verify_growth(v, eps=0.0, delta=0.5, r_max=10.0)


def test_growth_short_tail_is_inconclusive():
    """Test that a bound holding on too few trailing points stays open."""
    v = ProductEigenfunction.from_levels([0])
    report = verify_growth(v, eps=0.1, delta=0.5, r_max=6.0, min_tail=1000)
    assert report.status == CheckStatus.INCONCLUSIVE
    assert not report.passed


@pytest.mark.parametrize("k,n", [(0, 1), (1, 1), (2, 2), (1, 3)])
def test_sharpness(k, n):
    """Test U(r) <= r^2/2 - n - k + 0.1 at r = 8, 10, 12."""
    report = verify_sharpness(k, n, 0.1, [8.0, 10.0, 12.0])
    assert report.status == CheckStatus.PASSED, report.message
    assert report.radius == 8.0


def test_sharpness_u0_value():
    """Test the recorded U(10) for u_0 on the line."""
    report = verify_sharpness(0, 1, 0.1, [8.0, 10.0, 12.0])
    assert report.details["U"][1] == pytest.approx(48.96, abs=0.02)


def test_fit_uprime_constant_needs_positive_denominator():
    """Test the fit refuses curves with 2n + 4U - r^2 <= 0 everywhere."""
    curve = FrequencyCurve(
        r=[10.0, 11.0],
        logI=[0.0, 0.0],
        logD=[0.0, 0.0],
        U=[0.0, 0.0],
        Uprime=[0.0, 0.0],
        W=[0.0, 0.0],
        margin=[0.0, 0.0],
    )
    with pytest.raises(PreconditionError):
        fit_uprime_constant([(curve, 1, 0.0)])


def test_uprime_bound_for_u0():
    """Test U' >= r/2 beyond a measured R and the fitted full bound."""
    v = ProductEigenfunction.from_levels([0])
    report = verify_uprime(v, np.arange(4.0, 12.001, 0.1))
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["uprime_margin"] > 0


def _v1_uprime_curve():
    v = ProductEigenfunction.from_levels([1, 0])
    return compute_curve(v, np.arange(4.0, 20.001, 0.25), BoundKind.UPRIME, 0.0)


def test_uprime_bound_holds_on_held_out_radii():
    """Test C fitted on [R, r_mid] bounds U' on [r_mid, 20] for u_1(x) u_0(y)."""
    report = check_uprime_bound(_v1_uprime_curve(), 2, 0.5, 4.0)
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["fit_window"] == [4.0, 12.0]
    assert report.details["checked_from"] > 12.0


def test_uprime_bound_detects_lowered_uprime():
    """Test that U' lowered by 50 on the last 30 radii fails the held-out check."""
    curve = _v1_uprime_curve()
    Up = curve.array("Uprime")
    Up[-30:] -= 50.0
    report = check_uprime_bound(curve.model_copy(update={"Uprime": Up.tolist()}), 2, 0.5, 4.0)
    assert report.status == CheckStatus.FAILED
    assert report.details["bound_slack_radius"] >= curve.r[-30]


def test_uprime_bound_rejects_unsettled_constant():
    """Test that a constant still dropping inside the fit window fails."""
    curve = _v1_uprime_curve()
    r = curve.array("r")
    Up = curve.array("Uprime")
    Up[(r >= 10.0) & (r <= 12.0)] -= 50.0
    report = check_uprime_bound(curve.model_copy(update={"Uprime": Up.tolist()}), 2, 0.5, 4.0)
    assert report.status == CheckStatus.FAILED
    assert report.details["C_drift"] > 0


def test_uprime_bound_rejects_non_finite_constant():
    """Test a NaN inside the fit window fails rather than passing silently."""
    curve = _v1_uprime_curve()
    Up = curve.array("Uprime")
    Up[3] = np.nan
    report = check_uprime_bound(curve.model_copy(update={"Uprime": Up.tolist()}), 2, 0.5, 4.0)
    assert report.status == CheckStatus.FAILED


def test_uprime_bound_with_supplied_constant():
    """Test a family constant is checked on every radius past R."""
    curve = _v1_uprime_curve()
    fitted = fit_uprime_constant([(curve, 2, 0.5)], r_from=4.0)
    assert check_uprime_bound(curve, 2, 0.5, 4.0, C_hat=fitted).status == CheckStatus.PASSED
    too_large = check_uprime_bound(curve, 2, 0.5, 4.0, C_hat=1e6)
    assert too_large.status == CheckStatus.FAILED
    assert too_large.details["checked_from"] == 4.0


def test_uprime_bound_needs_radii_past_R():
    """Test too few radii beyond R leave the check open."""
    report = check_uprime_bound(_v1_uprime_curve(), 2, 0.5, 19.5)
    assert report.status == CheckStatus.INCONCLUSIVE


def test_uprime_bound_for_v1_in_the_plane():
    """Test U' >= r/2 and the held-out full bound for u_1(x) u_0(y)."""
    v = ProductEigenfunction.from_levels([1, 0])
    report = verify_uprime(v, np.arange(4.0, 20.001, 0.25))
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["checked_from"] > report.radius


def test_uprime_exempt_for_bounded_hermite():
    """Test the bounded alternative for h_2."""
    v = ProductEigenfunction.hermite([2])
    report = verify_uprime(v, np.arange(20.0, 30.001, 0.5))
    assert report.status == CheckStatus.EXEMPT
    assert report.passed


def test_uprime_lower_bound_suite():
    """Test finite-difference U' against the bulk lower bound."""
    v = ProductEigenfunction.from_levels([1])
    curve = compute_curve(v, np.arange(4.0, 8.001, 0.1))
    report = check_uprime_lower_bound(v, curve, samples=4)
    assert report.status == CheckStatus.PASSED, report.message


def test_monotonicity_for_drift_harmonic():
    """Test (log U)' >= 0 for u_0(x_1) u_0(x_2)."""
    v = ProductEigenfunction.from_levels([0, 0])
    report = monotonicity_check(v, np.arange(1.0, 12.001, 0.25))
    assert report.status == CheckStatus.PASSED, report.message


def test_monotonicity_rejects_non_harmonic():
    """Test that lambda != 0 is refused."""
    with pytest.raises(PreconditionError):
        monotonicity_check(ProductEigenfunction.from_levels([1]), np.arange(2.0, 4.0, 0.5))


def test_monotonicity_for_u0_times_constant():
    """Test (log U)' >= 0 for u_0(x_1) * 1 in the plane."""
    v = ProductEigenfunction([ladder_build(0), hermite_polynomial(0).as_ladder()])
    report = monotonicity_check(v, np.arange(1.0, 12.001, 0.25))
    assert report.status == CheckStatus.PASSED, report.message


def test_monotonicity_for_shifted_u0():
    """Test (log U)' >= 0 for 3 + u_0 on the line."""
    v = ProductEigenfunction([LadderFunction(k=0, p=RationalPoly([1]), s=RationalPoly([3]))])
    report = monotonicity_check(v, np.arange(1.0, 10.001, 0.25))
    assert report.status == CheckStatus.PASSED, report.message
