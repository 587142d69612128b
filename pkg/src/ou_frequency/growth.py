"""Growth, sharpness, U' and monotonicity verification on measured frequency curves."""

import math
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from ou_frequency.certificates import centered_derivative, measured_radius_index, summarize_margins
from ou_frequency.comparison import chooseg_r1, positive_lambda_radius
from ou_frequency.config import QuadratureConfig
from ou_frequency.errors import NodalSphereError, PreconditionError
from ou_frequency.fields import EvaluableField, ProductEigenfunction
from ou_frequency.frequency import (
    BoundKind,
    DMode,
    compute_curve,
    compute_D,
    compute_I,
    monotonicity_lower_bound,
    uprime_lower_bound,
)
from ou_frequency.models import CheckReport, CheckStatus, FrequencyCurve


def _grid(r_min: float, r_max: float, r_step: float) -> np.ndarray:
    count = int(math.floor((r_max - r_min) / r_step + 1e-9)) + 1
    return r_min + r_step * np.arange(count)


def _eigenvalue(v: EvaluableField) -> float:
    lam = v.eigenvalue
    if lam is None:
        raise PreconditionError(f"{v!r} is not a drift eigenfunction")
    return lam


def verify_growth(
    v: EvaluableField,
    eps: float,
    delta: float,
    r_max: float,
    r_min: float = 2.0,
    r_step: float = 0.1,
    quad: Optional[QuadratureConfig] = None,
    curve: Optional[FrequencyCurve] = None,
    min_tail: int = 3,
    max_workers: int = 1,
    bounded_from: float = 40.0,
    bounded_tol: float = 0.05,
) -> CheckReport:
    """Growth dichotomy: U stays bounded, or U > r^2/2 - n - 2 lambda - eps eventually.

    The crossing radius is where U >= delta + 2 max(0, lambda) holds on the
    rest of the grid. Without one the bounded branch is reported: U must stay
    within bounded_tol of 2 lambda for every r >= bounded_from. A grid ending
    before bounded_from is judged on its last min_tail points, and a miss
    there is INCONCLUSIVE rather than FAILED.

    Args:
        v: Drift eigenfunction
        eps: Slack of the bound
        delta: Crossing margin
        r_max: Last radius
        r_min: First radius
        r_step: Grid spacing
        quad: Quadrature resolution
        curve: Precomputed curve on the grid (skips quadrature)
        min_tail: Points the bound must hold on beyond the measured radius
        max_workers: Threads for the curve
        bounded_from: Start of the tail the bounded branch is judged on
        bounded_tol: Allowed |U - 2 lambda| on that tail

    Returns:
        Check report with branch, crossing radius and measured radius in details
    """
    if not eps > 0 or not delta > 0:
        raise PreconditionError(f"need eps > 0 and delta > 0, got {eps}, {delta}")
    lam = _eigenvalue(v)
    n = v.n
    if curve is None:
        curve = compute_curve(
            v, _grid(r_min, r_max, r_step), BoundKind.GROWTH, eps, quad, max_workers
        )
    r = curve.array("r")
    U = curve.array("U")
    threshold = delta + 2.0 * max(0.0, lam)
    crossing = measured_radius_index(U >= threshold)
    details: dict = {"lambda": lam, "threshold": threshold, "eps": eps, "delta": delta}

    if crossing is None:
        tail = r >= bounded_from
        settled = bool(np.any(tail))
        if not settled:
            tail = np.arange(r.size) >= r.size - min_tail
        deviation = float(np.max(np.abs(U[tail] - 2.0 * lam)))
        margin = bounded_tol - deviation
        tail_start = float(r[tail][0])
        logger.info(f"{v!r}: U stays below {threshold:g}, bounded branch")
        details.update(
            {"branch": "bounded", "U_last": float(U[-1]), "deviation": deviation, "tail_from": tail_start}
        )
        if margin >= 0:
            status = CheckStatus.PASSED
        elif settled:
            status = CheckStatus.FAILED
        else:
            logger.warning(f"{v!r}: grid ends at r={r[-1]} before the bounded tail settles")
            status = CheckStatus.INCONCLUSIVE
        return CheckReport(
            name="growth",
            status=status,
            margin=margin,
            radius=tail_start,
            message=f"bounded branch: max |U - 2 lambda| = {deviation:.3g} for r >= {tail_start:g}",
            details=details,
        )

    details.update({"branch": "unbounded", "crossing": float(r[crossing])})
    barrier = chooseg_r1(n, eps, lam)
    details["barrier_r1"] = barrier.r1
    if lam > 0:
        details["r2"] = positive_lambda_radius(n, lam, delta, r)
    margin = U - (0.5 * r * r - n - 2.0 * lam - eps)
    summary = summarize_margins(r, margin)
    tail = summary.tail_points
    if summary.measured_radius is None or tail < min_tail:
        logger.warning(f"{v!r}: growth bound not settled by r={r[-1]}")
        return CheckReport(
            name="growth",
            status=CheckStatus.INCONCLUSIVE,
            margin=float(margin[-1]),
            message=f"grid too short: bound holds on {tail} trailing points",
            details=details,
        )
    return CheckReport(
        name="growth",
        status=CheckStatus.PASSED,
        margin=summary.tail_margin,
        radius=summary.measured_radius,
        message=(
            f"U crossed {threshold:g} from r={r[crossing]:.6g}; "
            f"U > r^2/2 - {n} - {2 * lam:g} - {eps:g} from r={summary.measured_radius:.6g}"
        ),
        details=details,
    )


def verify_sharpness(
    k: int,
    n: int,
    eps: float,
    r_list: Sequence[float],
    quad: Optional[QuadratureConfig] = None,
) -> CheckReport:
    """U(r_i) <= r_i^2/2 - n - k + eps for v = u_k(x_1) u_0(x_2) ... u_0(x_n).

    The report radius is the first sample after which every sample satisfies
    the bound; the lower side r^2/2 - n - k - eps is recorded alongside.
    """
    if k < 0 or not eps > 0:
        raise PreconditionError(f"need k >= 0 and eps > 0, got k={k}, eps={eps}")
    v = ProductEigenfunction.from_levels([k] + [0] * (n - 1))
    radii = np.asarray(sorted(r_list), dtype=float)
    values = []
    for r in radii:
        I = compute_I(v, r, quad)
        if I.is_zero:
            raise NodalSphereError(float(r))
        values.append(compute_D(v, r, DMode.BOUNDARY, quad).ratio(I))
    U = np.array(values)
    upper = 0.5 * radii**2 - n - k + eps - U
    lower = U - (0.5 * radii**2 - n - k - eps)
    index = measured_radius_index(upper >= 0)
    details = {
        "k": k,
        "n": n,
        "r": radii.tolist(),
        "U": U.tolist(),
        "upper_margins": upper.tolist(),
        "lower_margins": lower.tolist(),
    }
    if index is None:
        return CheckReport(
            name="sharpness",
            status=CheckStatus.FAILED,
            margin=float(np.min(upper)),
            message=f"U exceeds r^2/2 - {n} - {k} + {eps:g} at the last sample",
            details=details,
        )
    return CheckReport(
        name="sharpness",
        status=CheckStatus.PASSED,
        margin=float(np.min(upper[index:])),
        radius=float(radii[index]),
        message=f"U <= r^2/2 - {n} - {k} + {eps:g} on samples from r={radii[index]:g}",
        details=details,
    )


def _uprime_residual(curve: FrequencyCurve, n: int, lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(U' - main term), the denominator 2n + 4U - r^2 and r."""
    r = curve.array("r")
    U = curve.array("U")
    Up = curve.array("Uprime")
    den = 2.0 * n + 4.0 * U - r * r
    with np.errstate(divide="ignore", invalid="ignore"):
        main = 0.5 * r * (1.0 + r * r / (den + 4.0) - (2.0 * n + 8.0 * lam) / den)
    return Up - main, den, r


def _scaled_residual(curve: FrequencyCurve, n: int, lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(U' - main term)(2n + 4U - r^2) r^(n-1), the denominator and r."""
    residual, den, r = _uprime_residual(curve, n, lam)
    return residual * den * r ** (n - 1), den, r


def fit_uprime_constant(
    members: Sequence[tuple[FrequencyCurve, int, float]],
    r_from: float = 0.0,
    r_to: float = math.inf,
) -> float:
    """Largest C with U' >= main term + C r^(1-n) / (2n + 4U - r^2) across a family.

    Args:
        members: (curve, n, lambda) for each family member
        r_from: First radius of the fit window
        r_to: Last radius of the fit window

    Returns:
        The fitted constant
    """
    scaled = []
    for curve, n, lam in members:
        values, den, r = _scaled_residual(curve, n, lam)
        use = (r >= r_from) & (r <= r_to) & (den > 0)
        scaled.append(values[use])
    values = np.concatenate(scaled) if scaled else np.array([])
    if values.size == 0:
        raise PreconditionError("no radius with a positive denominator to fit on")
    return float(np.min(values))


def check_uprime_bound(
    curve: FrequencyCurve,
    n: int,
    lam: float,
    R: float,
    C_hat: Optional[float] = None,
    tol: float = 1e-6,
    drift_tol: float = 1e-3,
    min_points: int = 6,
) -> CheckReport:
    """The full lower bound on U' beyond R with a constant C fitted on held-in radii.

    Without a supplied C, the radii past R are split at their midpoint. C is
    fitted on the first half and the bound is checked on the second. C must be
    finite and settled: its running minimum may drop by at most
    drift_tol * max(1, |C|) over the second half of the fit window. A
    supplied C is checked on every radius past R.

    Args:
        curve: Frequency curve of a drift eigenfunction
        n: Dimension
        lam: Eigenvalue
        R: Radius the bound is claimed from
        C_hat: Family constant, fitted from the curve when None
        tol: Allowed negative slack
        drift_tol: Allowed relative drop of C as the fit window grows
        min_points: Radii past R needed to fit and check

    Returns:
        Check report named uprime_bound
    """
    residual, den, r = _uprime_residual(curve, n, lam)
    scaled = residual * den * r ** (n - 1)
    use = (r >= R) & (den > 0)
    r_use = r[use]
    details: dict = {"R": R}
    if r_use.size < min_points:
        return CheckReport(
            name="uprime_bound",
            status=CheckStatus.INCONCLUSIVE,
            message=f"{r_use.size} radii past R={R:.6g}, need {min_points}",
            details=details,
        )

    if C_hat is None:
        r_mid = 0.5 * (r_use[0] + r_use[-1])
        fit = r_use <= r_mid
        running = np.minimum.accumulate(scaled[use][fit])
        C_hat = float(running[-1])
        drift = float(running[running.size // 2] - running[-1])
        details.update({"fit_window": [float(r_use[0]), float(r_mid)], "C_drift": drift})
        if not math.isfinite(C_hat) or drift > drift_tol * max(1.0, abs(C_hat)):
            return CheckReport(
                name="uprime_bound",
                status=CheckStatus.FAILED,
                margin=-drift,
                radius=R,
                message=f"fitted C does not settle on [{r_use[0]:.6g}, {r_mid:.6g}] (C={C_hat:.6g})",
                details={**details, "C_hat": C_hat},
            )
        check = ~fit
    else:
        check = np.ones(r_use.size, dtype=bool)

    r_check = r_use[check]
    slack = residual[use][check] - C_hat * r_check ** (1 - n) / den[use][check]
    worst = int(np.argmin(slack))
    ok = bool(slack[worst] >= -tol)
    details.update(
        {
            "C_hat": C_hat,
            "checked_from": float(r_check[0]),
            "bound_slack": float(slack[worst]),
            "bound_slack_radius": float(r_check[worst]),
        }
    )
    return CheckReport(
        name="uprime_bound",
        status=CheckStatus.PASSED if ok else CheckStatus.FAILED,
        margin=float(slack[worst]),
        radius=R,
        message=(
            f"bound slack {slack[worst]:.3g} at r={r_check[worst]:.6g} "
            f"on [{r_check[0]:.6g}, {r_check[-1]:.6g}] with C={C_hat:.6g}"
        ),
        details=details,
    )


def _finite_difference_noise(r: np.ndarray, U: np.ndarray, Up: np.ndarray) -> float:
    """Gap between U' at spacing h and at spacing 2h on shared interior points."""
    if r.size < 10:
        return 0.0
    coarse = centered_derivative(U[::2], r[::2])
    return float(np.max(np.abs(coarse[2:-2] - Up[::2][2:-2])))


def verify_uprime(
    v: EvaluableField,
    r_grid: Sequence[float],
    quad: Optional[QuadratureConfig] = None,
    C_hat: Optional[float] = None,
    exempt_tol: float = 0.5,
    tol: float = 1e-6,
    refine: bool = True,
    max_workers: int = 1,
) -> CheckReport:
    """U' >= r/2 beyond a measured R, and the full lower bound on U' with a constant C.

    If U(r_max) <= 2|lambda| + exempt_tol the bounded alternative applies and the
    report is EXEMPT. Without a family constant, C is fitted on the first half
    of the radii past R and checked on the second (see check_uprime_bound).
    """
    lam = _eigenvalue(v)
    n = v.n
    radii = np.asarray(r_grid, dtype=float)
    curve = compute_curve(v, radii, BoundKind.UPRIME, 0.0, quad, max_workers)
    U = curve.array("U")
    if U[-1] <= 2.0 * abs(lam) + exempt_tol:
        logger.warning(f"{v!r}: U(r_max) = {U[-1]:.6g}, bounded alternative")
        return CheckReport(
            name="uprime",
            status=CheckStatus.EXEMPT,
            message=f"limsup U <= 2|lambda| = {2 * abs(lam):g} (U(r_max) = {U[-1]:.6g})",
            details={"lambda": lam, "U_last": float(U[-1])},
        )

    margin = curve.array("margin")
    summary = summarize_margins(radii, margin)
    noise = _finite_difference_noise(radii, U, curve.array("Uprime"))
    if summary.measured_radius is None or (summary.tail_margin or 0.0) < noise:
        if refine:
            logger.info(f"{v!r}: U' noise {noise:.3g} exceeds slack, refining the grid")
            fine = np.linspace(radii[0], radii[-1], 2 * radii.size - 1)
            report = verify_uprime(v, fine, quad, C_hat, exempt_tol, tol, False, max_workers)
            return report
        return CheckReport(
            name="uprime",
            status=CheckStatus.INCONCLUSIVE,
            margin=summary.tail_margin,
            message=f"U' - r/2 not resolved above noise {noise:.3g}",
            details={"noise": noise},
        )

    R = summary.measured_radius
    bound = check_uprime_bound(curve, n, lam, R, C_hat, tol)
    return CheckReport(
        name="uprime",
        status=bound.status,
        margin=summary.tail_margin if bound.margin is None else float(min(summary.tail_margin, bound.margin)),
        radius=R,
        message=f"U' >= r/2 from r={R:.6g}; {bound.message}",
        details={**bound.details, "uprime_margin": summary.tail_margin, "noise": noise},
    )


def check_uprime_lower_bound(
    v: EvaluableField,
    curve: FrequencyCurve,
    samples: int = 6,
    tol: float = 1e-4,
    quad: Optional[QuadratureConfig] = None,
) -> CheckReport:
    """Finite-difference U' against the bulk lower bound at a few interior radii."""
    r = curve.array("r")
    Up = curve.array("Uprime")
    picks = np.unique(np.linspace(2, r.size - 3, samples).astype(int))
    gaps = []
    for i in picks:
        bound = uprime_lower_bound(v, float(r[i]), quad)
        gaps.append((Up[i] - bound) / max(1.0, abs(bound)))
    gaps_arr = np.array(gaps)
    worst = int(np.argmin(gaps_arr))
    return CheckReport(
        name="uprime_lower_bound",
        status=CheckStatus.PASSED if gaps_arr[worst] >= -tol else CheckStatus.FAILED,
        margin=float(gaps_arr[worst]),
        radius=float(r[picks[worst]]),
        message=f"U' minus bulk lower bound, worst {gaps_arr[worst]:.3g}",
        details={"radii": r[picks].tolist(), "gaps": gaps_arr.tolist()},
    )


def monotonicity_check(
    v: EvaluableField,
    r_grid: Sequence[float],
    tol: float = 1e-6,
    quad: Optional[QuadratureConfig] = None,
    bound_samples: int = 4,
) -> CheckReport:
    """(log U)' >= -tol for drift-harmonic fields, compared with the bulk lower bound.

    Raises:
        PreconditionError: the field is not drift harmonic or U vanishes
    """
    if not v.declares_potential or v.eigenvalue != 0:
        raise PreconditionError(f"{v!r} is not drift harmonic (V must be 0)")
    curve = compute_curve(v, r_grid, BoundKind.GROWTH, 0.0, quad)
    r = curve.array("r")
    U = curve.array("U")
    if np.any(U <= 0):
        raise PreconditionError(f"U vanishes for {v!r}; constant functions are excluded")
    dlogU = centered_derivative(np.log(U), r)
    inner = slice(2, -2) if r.size > 4 else slice(None)
    worst = int(np.argmin(dlogU[inner]))
    worst_value = float(dlogU[inner][worst])

    picks = np.unique(np.linspace(2, r.size - 3, bound_samples).astype(int)) if r.size > 4 else []
    bound_gaps = []
    for i in picks:
        bound = monotonicity_lower_bound(v, float(r[i]), quad)
        bound_gaps.append(float(dlogU[i] - bound) / max(1.0, abs(bound)))
    bound_ok = all(gap >= -1e-4 for gap in bound_gaps)

    ok = worst_value >= -tol and bound_ok
    return CheckReport(
        name="monotonicity",
        status=CheckStatus.PASSED if ok else CheckStatus.FAILED,
        margin=worst_value + tol,
        radius=float(r[inner][worst]),
        message=f"min (log U)' = {worst_value:.3g}",
        details={"bound_gaps": bound_gaps, "bound_radii": [float(r[i]) for i in picks]},
    )
