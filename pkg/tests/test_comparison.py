"""Test the P operator, barriers, extremals and maximum principles."""

import math

import numpy as np
import pytest

from ou_frequency.comparison import (
    FreqOpParams,
    barrier_trajectory,
    certify_subsolution,
    certify_supersolution,
    chooseg_r1,
    eval_P,
    eval_P_array,
    integrate_extremal,
    overtaking_bound,
    positive_lambda_radius,
    verify_dominance,
    verify_max_principle,
    verify_max_principle_sweep,
    verify_positive_lambda,
    verify_subsolution,
)
from ou_frequency.errors import (
    CertificationError,
    DomainError,
    HypothesisViolation,
    ParameterError,
    PreconditionError,
    TrajectoryCollapse,
)
from ou_frequency.fields import ProductEigenfunction
from ou_frequency.frequency import compute_curve
from ou_frequency.models import CheckStatus, Trajectory


def test_eval_P_value():
    """Test P 1 = -r/2 + 1/r at r = 2 in two dimensions."""
    params = FreqOpParams(n=2)
    assert eval_P(1.0, 0.0, 2.0, params) == pytest.approx(-0.5)
    assert eval_P(1.0, 0.0, 2.0, FreqOpParams(n=2, lam=1.0)) == pytest.approx(1.5)


def test_eval_P_domain():
    """Test g > 0 and r > 0."""
    params = FreqOpParams(n=1)
    with pytest.raises(DomainError):
        eval_P(0.0, 1.0, 1.0, params)
    with pytest.raises(DomainError):
        eval_P_array(np.array([1.0]), np.array([0.0]), np.array([0.0]), params)


def test_fprime_presets_and_hypothesis():
    """Test named presets and rejection of f' < r/2."""
    params = FreqOpParams.preset(1, "shifted")
    assert params.drift(2.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        FreqOpParams.preset(1, "flat")
    slow = FreqOpParams(n=1, fprime=lambda r: 0.4 * r)
    with pytest.raises(HypothesisViolation):
        slow.drift(np.array([1.0, 2.0]))


def test_chooseg_r1_oracle():
    """Test r1 = sqrt(27) for n = 1, eps = 0.5, lambda = 0."""
    choice = chooseg_r1(1, 0.5, 0.0)
    assert choice.r1 == pytest.approx(math.sqrt(27.0), abs=1e-6)
    assert choice.positivity_radius == pytest.approx(math.sqrt(3.0))
    assert choice.g(choice.r1) == pytest.approx(13.5 - 1.5)


def test_chooseg_r1_rejects_bad_eps():
    """Test eps > 0."""
    with pytest.raises(ParameterError):
        chooseg_r1(1, 0.0, 0.0)


@pytest.mark.parametrize("n,eps,lam", [(1, 0.1, 0.0), (2, 0.5, 0.0), (3, 0.2, -0.5), (1, 0.5, 0.5)])
def test_barrier_is_supersolution(n, eps, lam):
    """Test P g <= -eps/(2r) from r1 on."""
    choice = chooseg_r1(n, eps, lam)
    grid = np.linspace(choice.r1, 10 * choice.r1, 400)
    params = FreqOpParams(n=n, lam=lam)
    g = barrier_trajectory(n, eps, lam, grid, params)
    certify_supersolution(g, params, 0.5 * eps)


def test_barrier_trajectory_needs_positive_g():
    """Test that the grid must stay where g > 0."""
    with pytest.raises(DomainError):
        barrier_trajectory(1, 0.5, 0.0, [1.0, 2.0, 3.0])


def test_extremal_solves_P_equals_zero():
    """Test P h = 0 along the integrated trajectory."""
    params = FreqOpParams(n=2)
    h = integrate_extremal(params, 3.0, 2.0, 10.0, dr=0.05)
    assert h.r[0] == 3.0
    assert h.r[-1] == pytest.approx(10.0)
    assert np.max(np.abs(h.array("Pvalue"))) < 1e-8
    certify_subsolution(h, params)


def test_extremal_collapse():
    """Test that a small start with lambda > 0 hits zero."""
    params = FreqOpParams(n=1, lam=1.0)
    with pytest.raises(TrajectoryCollapse):
        integrate_extremal(params, 1.0, 1e-3, 10.0)


def test_certify_subsolution_names_the_radius():
    """Test that a decreasing h far out is rejected."""
    r = np.array([4.0, 5.0])
    h = Trajectory(r=r.tolist(), h=[1.0, 1.0], hprime=[-10.0, -10.0], Pvalue=[0.0, 0.0])
    with pytest.raises(CertificationError) as info:
        certify_subsolution(h, FreqOpParams(n=1))
    assert info.value.point == 4.0


def test_overtaking_bound_oracle():
    """Test r1 (g/h)^(1/eps) = 20 for r1 = 5, g = 4, h = 1, eps = 1."""
    assert overtaking_bound(5.0, 4.0, 1.0, 1.0) == pytest.approx(20.0)
    assert overtaking_bound(5.0, 1.0, 4.0, 1.0) == 5.0
    with pytest.raises(ParameterError):
        overtaking_bound(5.0, 4.0, 1.0, 0.0)


def test_max_principle_single_start():
    """Test that an extremal from below overtakes the barrier within the bound."""
    n, eps, lam = 1, 0.5, 0.0
    choice = chooseg_r1(n, eps, lam)
    params = FreqOpParams(n=n, lam=lam)
    grid = np.arange(choice.r1, 30.0, 0.01)
    g = barrier_trajectory(n, eps, lam, grid, params)
    h = integrate_extremal(params, choice.r1, 0.25 * float(choice.g(choice.r1)), 30.0, r_eval=grid)
    report = verify_max_principle(h, g, choice.r1, 0.5 * eps, params)
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["crossing"] <= report.details["overtaking_bound"] + report.details["grid_step"]


def test_max_principle_needs_shared_grid():
    """Test grid mismatch is a usage error."""
    params = FreqOpParams(n=1)
    g = barrier_trajectory(1, 0.5, 0.0, [6.0, 7.0], params)
    h = integrate_extremal(params, 6.0, 30.0, 8.0, r_eval=[6.0, 8.0])
    with pytest.raises(ValueError):
        verify_max_principle(h, g, 6.0, 0.25, params)


def test_max_principle_sweep():
    """Test that no random start re-crosses the barrier."""
    report = verify_max_principle_sweep(1, 0.5, starts=10, seed=3)
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["starts"] == 10


def test_max_principle_sweep_rejects_positive_lambda():
    """Test the sweep precondition."""
    with pytest.raises(PreconditionError):
        verify_max_principle_sweep(1, 0.5, lam=0.5)


def test_positive_lambda_radius():
    """Test 1/r + r/4 > 1/sqrt(2) holds at r = 2.83 and the n = 3 threshold."""
    grid = np.arange(2.83, 10.0, 0.01)
    assert positive_lambda_radius(1, 0.5, 1.0, grid) == pytest.approx(2.83)
    # root of r^2/4 - r/sqrt(2) - 1
    threshold = 2.0 * (math.sqrt(0.5) + math.sqrt(1.5))
    r2 = positive_lambda_radius(3, 0.5, 1.0, np.arange(1.0, 10.0, 0.01))
    assert threshold < r2 <= threshold + 0.01
    with pytest.raises(PreconditionError):
        positive_lambda_radius(1, 0.0, 1.0, grid)


def test_positive_lambda_escape():
    """Test lambda = 1/2, delta = 1 from h(2) = 3."""
    params = FreqOpParams(n=1, lam=0.5)
    grid = np.arange(2.0, 20.001, 0.05)
    h = integrate_extremal(params, 2.0, 3.0, 20.0, r_eval=grid)
    report = verify_positive_lambda(h, params, delta=1.0, eps=0.5)
    assert report.status == CheckStatus.PASSED, report.message
    assert report.details["r2"] == pytest.approx(2.0)


def test_measured_frequency_is_subsolution():
    """Test P U >= 0 and U above the extremal for u_1 on the line."""
    v = ProductEigenfunction.from_levels([1])
    curve = compute_curve(v, np.arange(3.0, 10.001, 0.05))
    assert verify_subsolution(curve, 1, 0.5).status == CheckStatus.PASSED
    assert verify_dominance(curve, 1, 0.5).status == CheckStatus.PASSED
