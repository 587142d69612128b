"""The first-order operator P on positive radial functions, barriers and extremals.

For g > 0,

    P g = g'/g + (n - 2)/r - f'(r) + g/r + r lambda / g

Measured frequencies are sub-solutions (P U >= 0); the barrier
g = r^2/2 - n - eps - 2 lambda is a strict super-solution far out.
"""

import math
from typing import Callable, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, optimize

from ou_frequency.certificates import measured_radius_index
from ou_frequency.errors import (
    CertificationError,
    DomainError,
    HypothesisViolation,
    ParameterError,
    PreconditionError,
    TrajectoryCollapse,
)
from ou_frequency.models import CheckReport, CheckStatus, FrequencyCurve, Trajectory

# Pointwise slack for differential inequalities on a grid
CERTIFY_TOL = 1e-9


def ou_fprime(r):
    """f' for f = r^2/4."""
    return 0.5 * r


def shifted_fprime(r):
    return 0.5 * r + 1.0


def steep_fprime(r):
    return 0.6 * r


FPRIME_PRESETS: dict[str, Callable] = {
    "ou": ou_fprime,
    "shifted": shifted_fprime,
    "steep": steep_fprime,
}


class FreqOpParams(BaseModel):
    """Dimension, radial drift f' and potential lambda of the operator P."""

    n: int = Field(ge=1, description="Euclidean dimension")
    fprime: Callable = Field(default=ou_fprime, description="Radial derivative of f")
    lam: float = Field(default=0.0, description="Constant potential lambda")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @classmethod
    def preset(cls, n: int, name: str = "ou", lam: float = 0.0) -> "FreqOpParams":
        """Parameters with a named f' preset (ou, shifted, steep)."""
        if name not in FPRIME_PRESETS:
            raise ValueError(f"unknown f' preset {name!r}; choose from {sorted(FPRIME_PRESETS)}")
        return cls(n=n, fprime=FPRIME_PRESETS[name], lam=lam)

    def drift(self, r):
        """f'(r), rejected where it falls below r/2."""
        r_arr = np.asarray(r, dtype=float)
        value = np.asarray(self.fprime(r_arr), dtype=float) * np.ones_like(r_arr)
        short = value < 0.5 * r_arr - 1e-12 * np.maximum(1.0, r_arr)
        if np.any(short):
            where = float(np.atleast_1d(r_arr)[np.argmax(np.atleast_1d(short))])
            raise HypothesisViolation(f"f'(r) < r/2 at r = {where}")
        return float(value) if value.ndim == 0 else value


def eval_P(g: float, gprime: float, r: float, params: FreqOpParams) -> float:
    """P g at a single radius."""
    if not g > 0:
        raise DomainError(f"P is defined for g > 0, got g={g}")
    if not r > 0:
        raise DomainError(f"P needs r > 0, got r={r}")
    n = params.n
    return gprime / g + (n - 2) / r - params.drift(r) + g / r + r * params.lam / g


def eval_P_array(
    g: np.ndarray, gprime: np.ndarray, r: np.ndarray, params: FreqOpParams
) -> np.ndarray:
    """P g on arrays of radii."""
    g = np.asarray(g, dtype=float)
    gprime = np.asarray(gprime, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(~(g > 0)):
        raise DomainError("P is defined for g > 0 only")
    if np.any(~(r > 0)):
        raise DomainError("P needs r > 0")
    return gprime / g + (params.n - 2) / r - params.drift(r) + g / r + r * params.lam / g


class BarrierChoice(BaseModel):
    """Start radius of the super-solution barrier and the radius where it turns positive."""

    n: int
    eps: float
    lam: float
    r1: float = Field(description="P g <= -eps/(2r) for every r >= r1")
    positivity_radius: float = Field(description="g > 0 for r beyond this radius")

    model_config = {"frozen": True}

    def g(self, r):
        return barrier_value(r, self.n, self.eps, self.lam)


def barrier_value(r, n: int, eps: float, lam: float):
    """g(r) = r^2/2 - n - eps - 2 lambda."""
    return 0.5 * np.asarray(r, dtype=float) ** 2 - n - eps - 2.0 * lam


def chooseg_r1(n: int, eps: float, lam: float) -> BarrierChoice:
    """Smallest r1 with 2(lam+1)/(1 - 2(n+eps+2 lam)/r^2) <= 2 + 2 lam + eps/2 beyond r1.

    When the inequality holds wherever g > 0, r1 sits just above the positivity
    radius (or at 1 if g is positive everywhere). The result is checked on [r1, 4 r1].

    Raises:
        ParameterError: eps <= 0 or no admissible r1
        CertificationError: the post-check of P g fails
    """
    if not eps > 0:
        raise ParameterError(f"need eps > 0, got {eps}")
    c = n + eps + 2.0 * lam
    rhs = 2.0 + 2.0 * lam + 0.5 * eps
    positivity = math.sqrt(2.0 * c) if c > 0 else 0.0

    def slack(r: float) -> float:
        return rhs - 2.0 * (lam + 1.0) / (1.0 - 2.0 * c / (r * r))

    lo = positivity * (1.0 + 1e-12) if positivity > 0 else 1.0
    if slack(lo) >= 0:
        r1 = lo
    else:
        hi = max(2.0 * lo, 1.0)
        while slack(hi) < 0:
            hi *= 2.0
            if hi > 1e8:
                raise ParameterError(f"no admissible r1 for n={n}, eps={eps}, lambda={lam}")
        r1 = optimize.brentq(slack, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)

    choice = BarrierChoice(n=n, eps=eps, lam=lam, r1=r1, positivity_radius=positivity)
    grid = np.linspace(r1, 4.0 * r1, 301)
    params = FreqOpParams(n=n, lam=lam)
    values = eval_P_array(choice.g(grid), grid, grid, params)
    excess = values + eps / (2.0 * grid)
    worst = int(np.argmax(excess))
    if excess[worst] > CERTIFY_TOL:
        raise CertificationError("P g <= -eps/(2r)", float(grid[worst]), float(excess[worst]))
    logger.debug(f"barrier r1={r1:.12g} for n={n}, eps={eps}, lambda={lam}")
    return choice


def barrier_trajectory(
    n: int, eps: float, lam: float, r_grid: Sequence[float], params: Optional[FreqOpParams] = None
) -> Trajectory:
    """The barrier g with g' = r and its P values on a grid where g > 0."""
    r = np.asarray(r_grid, dtype=float)
    g = barrier_value(r, n, eps, lam)
    if np.any(g <= 0):
        raise DomainError(f"barrier is not positive on the whole grid (first r={r[0]})")
    params = params or FreqOpParams(n=n, lam=lam)
    return Trajectory(
        r=r.tolist(),
        h=g.tolist(),
        hprime=r.tolist(),
        Pvalue=eval_P_array(g, r, r, params).tolist(),
    )


def _uniform_grid(r0: float, r_max: float, dr: float) -> np.ndarray:
    count = int(math.floor((r_max - r0) / dr + 1e-9)) + 1
    grid = r0 + dr * np.arange(count)
    if grid[-1] < r_max - 1e-12:
        grid = np.append(grid, r_max)
    return grid


def integrate_extremal(
    params: FreqOpParams,
    r0: float,
    h0: float,
    r_max: float,
    dr: float = 1e-2,
    rtol: float = 1e-11,
    r_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Solve P h = 0, i.e. h' = h f' - (n-2) h / r - h^2 / r - r lambda.

    Args:
        params: Operator data
        r0: Start radius
        h0: Start value (> 0)
        r_max: End radius
        dr: Output spacing when r_eval is not given
        rtol: Relative tolerance of the adaptive integrator
        r_eval: Output radii (must lie in [r0, r_max])

    Returns:
        The trajectory sampled on the output radii

    Raises:
        TrajectoryCollapse: h reaches 0 before r_max
    """
    if not h0 > 0:
        raise DomainError(f"extremal needs h0 > 0, got {h0}")
    if not r_max > r0 > 0:
        raise ValueError(f"need 0 < r0 < r_max, got r0={r0}, r_max={r_max}")
    n = params.n
    lam = params.lam

    def rhs(r: float, y: np.ndarray) -> np.ndarray:
        h = y[0]
        return np.array([h * params.drift(r) - (n - 2) * h / r - h * h / r - r * lam])

    def hits_zero(r: float, y: np.ndarray) -> float:
        return y[0]

    hits_zero.terminal = True  # type: ignore[attr-defined]
    hits_zero.direction = -1  # type: ignore[attr-defined]

    grid = np.asarray(r_eval, dtype=float) if r_eval is not None else _uniform_grid(r0, r_max, dr)
    solution = integrate.solve_ivp(
        rhs,
        (r0, float(grid[-1])),
        [h0],
        method="DOP853",
        t_eval=grid,
        events=hits_zero,
        rtol=rtol,
        atol=1e-14,
        max_step=0.25,
    )
    if solution.t_events[0].size:
        raise TrajectoryCollapse(float(solution.t_events[0][0]))
    if not solution.success:
        raise RuntimeError(f"extremal integration failed: {solution.message}")
    r = solution.t
    h = solution.y[0]
    if np.any(h <= 0):
        raise TrajectoryCollapse(float(r[np.argmax(h <= 0)]))
    hprime = h * params.drift(r) - (n - 2) * h / r - h * h / r - r * lam
    return Trajectory(
        r=r.tolist(),
        h=h.tolist(),
        hprime=hprime.tolist(),
        Pvalue=eval_P_array(h, hprime, r, params).tolist(),
    )


def overtaking_bound(r1: float, g1: float, h1: float, eps: float) -> float:
    """r1 (g(r1)/h(r1))^(1/eps): h overtakes g no later than this radius."""
    if not eps > 0:
        raise ParameterError(f"need eps > 0, got {eps}")
    if h1 >= g1:
        return r1
    return r1 * math.exp(math.log(g1 / h1) / eps)


def certify_subsolution(h: Trajectory, params: FreqOpParams, tol: float = CERTIFY_TOL) -> np.ndarray:
    """P h >= -tol at every grid radius; returns the P values."""
    values = eval_P_array(h.array("h"), h.array("hprime"), h.array("r"), params)
    bad = values < -tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise CertificationError("P h >= 0", float(h.r[i]), float(values[i]))
    return values


def certify_supersolution(
    g: Trajectory, params: FreqOpParams, eps: float, tol: float = CERTIFY_TOL
) -> np.ndarray:
    """P g <= -eps/r + tol at every grid radius; returns the P values."""
    r = g.array("r")
    values = eval_P_array(g.array("h"), g.array("hprime"), r, params)
    bad = values > -eps / r + tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise CertificationError("P g <= -eps/r", float(r[i]), float(values[i]))
    return values


def verify_max_principle(
    h: Trajectory, g: Trajectory, R: float, eps: float, params: FreqOpParams
) -> CheckReport:
    """Ordering is preserved after R, and h overtakes g by the predicted radius.

    Both differential inequalities are certified first. The overtaking part
    needs lambda <= 0 and starts at the first grid radius.
    """
    r = h.array("r")
    if r.size != len(g.r) or not np.allclose(r, g.array("r"), rtol=0.0, atol=1e-12):
        raise ValueError("h and g must share one radius grid")
    certify_subsolution(h, params)
    certify_supersolution(g, params, eps)

    hv = h.array("h")
    gv = g.array("h")
    above = hv > gv
    start = int(np.searchsorted(r, R - 1e-12))
    if start >= r.size:
        raise ValueError(f"R={R} lies beyond the grid")
    details: dict = {"R": R, "eps": eps, "lambda": params.lam}

    if above[start] and not np.all(above[start:]):
        i = start + int(np.argmax(~above[start:]))
        return CheckReport(
            name="max_principle",
            status=CheckStatus.FAILED,
            margin=float(np.min(hv[start:] - gv[start:])),
            radius=float(r[i]),
            message=f"h fell back below g at r={r[i]}",
            details=details,
        )

    if params.lam > 0:
        status = CheckStatus.PASSED if above[start] else CheckStatus.INCONCLUSIVE
        return CheckReport(
            name="max_principle",
            status=status,
            margin=float(np.min(hv[start:] - gv[start:])),
            radius=R,
            message="ordering checked; overtaking bound needs lambda <= 0",
            details=details,
        )

    bound = overtaking_bound(float(r[0]), float(gv[0]), float(hv[0]), eps)
    step = float(np.max(np.diff(r))) if r.size > 1 else 0.0
    cross = measured_radius_index(above)
    details.update({"overtaking_bound": bound, "grid_step": step})
    if cross is None:
        status = CheckStatus.INCONCLUSIVE if bound > r[-1] else CheckStatus.FAILED
        return CheckReport(
            name="max_principle",
            status=status,
            margin=float(np.max(hv - gv)),
            message=f"no overtaking observed by r={r[-1]} (bound {bound:.6g})",
            details=details,
        )
    crossing = float(r[cross])
    details["crossing"] = crossing
    ok = crossing <= bound + step
    return CheckReport(
        name="max_principle",
        status=CheckStatus.PASSED if ok else CheckStatus.FAILED,
        margin=float(np.min(hv[cross:] - gv[cross:])),
        radius=crossing,
        message=f"h above g from r={crossing:.6g}; bound {bound:.6g}",
        details=details,
    )


def verify_max_principle_sweep(
    n: int,
    eps: float,
    lam: float = 0.0,
    starts: int = 50,
    seed: int = 0,
    r_max: float = 30.0,
    dr: float = 1e-2,
) -> CheckReport:
    """Extremals from random starts at r1 never re-cross the barrier.

    The barrier with slack eps is a super-solution with slack eps/2, which is
    the epsilon handed to verify_max_principle.
    """
    if lam > 0:
        raise PreconditionError("the randomized sweep needs lambda <= 0")
    choice = chooseg_r1(n, eps, lam)
    params = FreqOpParams(n=n, lam=lam)
    grid = _uniform_grid(choice.r1, r_max, dr)
    g = barrier_trajectory(n, eps, lam, grid, params)
    g1 = float(choice.g(choice.r1))
    rng = np.random.default_rng(seed)
    factors = np.exp(rng.uniform(math.log(0.05), math.log(4.0), size=starts))
    reports = []
    for factor in factors:
        h = integrate_extremal(params, choice.r1, factor * g1, r_max, r_eval=grid)
        reports.append(verify_max_principle(h, g, choice.r1, 0.5 * eps, params))
    failed = [rep for rep in reports if rep.status == CheckStatus.FAILED]
    open_ = [rep for rep in reports if rep.status == CheckStatus.INCONCLUSIVE]
    status = (
        CheckStatus.FAILED
        if failed
        else (CheckStatus.INCONCLUSIVE if open_ else CheckStatus.PASSED)
    )
    return CheckReport(
        name="max_principle_sweep",
        status=status,
        margin=min(rep.margin for rep in reports if rep.margin is not None),
        radius=max((rep.radius or choice.r1) for rep in reports),
        message=f"{starts} starts: {len(failed)} failed, {len(open_)} inconclusive",
        details={"r1": choice.r1, "seed": seed, "starts": starts},
    )


def positive_lambda_radius(n: int, lam: float, delta: float, r_grid: Sequence[float]) -> Optional[float]:
    """Smallest grid r2 after which (2-n)/r + r/2 - r lam/(delta + 2 lam) > sqrt(lam)."""
    if not lam > 0 or not delta > 0:
        raise PreconditionError(f"need lambda > 0 and delta > 0, got {lam}, {delta}")
    r = np.asarray(r_grid, dtype=float)
    holds = (2 - n) / r + 0.5 * r - r * lam / (delta + 2.0 * lam) > math.sqrt(lam)
    index = measured_radius_index(holds)
    return None if index is None else float(r[index])


def verify_positive_lambda(
    h: Trajectory, params: FreqOpParams, delta: float, eps: float, min_tail: int = 3
) -> CheckReport:
    """Track a sub-solution through the two barrier regimes when lambda > 0.

    Below sqrt(lambda) r it must increase; between sqrt(lambda) r and the
    barrier, (h - sqrt(lambda) r)' >= (eps/2) sqrt(lambda) once the barrier is a
    super-solution. Finally h >= r^2/2 - n - 2 lambda - eps beyond a measured R.
    """
    lam = params.lam
    if not lam > 0 or not delta > 0:
        raise PreconditionError(f"need lambda > 0 and delta > 0, got {lam}, {delta}")
    certify_subsolution(h, params)
    n = params.n
    r = h.array("r")
    hv = h.array("h")
    hp = h.array("hprime")
    root = math.sqrt(lam)
    r2 = positive_lambda_radius(n, lam, delta, r)
    details: dict = {"r2": r2, "lambda": lam, "delta": delta, "eps": eps}
    if r2 is None:
        return CheckReport(
            name="positive_lambda",
            status=CheckStatus.INCONCLUSIVE,
            message="no r2 on the grid",
            details=details,
        )
    start = int(np.searchsorted(r, r2 - 1e-12))
    high = np.flatnonzero(hv[start:] > 2.0 * lam + delta)
    if high.size == 0:
        return CheckReport(
            name="positive_lambda",
            status=CheckStatus.INCONCLUSIVE,
            message=f"h never exceeds 2 lambda + delta beyond r2={r2}",
            details=details,
        )
    s = start + int(high[0])
    details["escape_start"] = float(r[s])
    choice = chooseg_r1(n, eps, lam)
    g = barrier_value(r, n, eps, lam)

    low_regime = (hv < root * r) & (np.arange(r.size) >= s)
    mid_regime = (hv >= root * r) & (hv < g) & (r >= choice.r1) & (np.arange(r.size) >= s)
    low_bad = low_regime & (hp <= -CERTIFY_TOL)
    mid_bad = mid_regime & (hp - root < 0.5 * eps * root - CERTIFY_TOL)
    details.update(
        {"low_points": int(low_regime.sum()), "mid_points": int(mid_regime.sum()), "r1": choice.r1}
    )
    if np.any(low_bad | mid_bad):
        i = int(np.argmax(low_bad | mid_bad))
        regime = "increasing below sqrt(lambda) r" if low_bad[i] else "escape rate above sqrt(lambda) r"
        return CheckReport(
            name="positive_lambda",
            status=CheckStatus.FAILED,
            radius=float(r[i]),
            message=f"{regime} fails at r={r[i]}",
            details=details,
        )

    margin = hv - (0.5 * r * r - n - 2.0 * lam - eps)
    index = measured_radius_index(margin >= 0)
    if index is None or r.size - index < min_tail:
        return CheckReport(
            name="positive_lambda",
            status=CheckStatus.INCONCLUSIVE,
            margin=float(margin[-1]),
            message="grid exhausted before the growth bound settled",
            details=details,
        )
    return CheckReport(
        name="positive_lambda",
        status=CheckStatus.PASSED,
        margin=float(np.min(margin[index:])),
        radius=float(r[index]),
        message=f"h >= r^2/2 - n - 2 lambda - eps from r={r[index]:.6g}",
        details=details,
    )


def verify_subsolution(
    curve: FrequencyCurve, n: int, lam: float, tol: float = 1e-5
) -> CheckReport:
    """Measured U satisfies P U >= -tol with f = r^2/4 and potential max(lam, 0)."""
    r = curve.array("r")
    U = curve.array("U")
    Up = curve.array("Uprime")
    inner = np.zeros(r.size, dtype=bool)
    inner[2:-2] = True
    live = inner & (U > 0)
    if not np.any(live):
        return CheckReport(
            name="subsolution",
            status=CheckStatus.INCONCLUSIVE,
            message="U is not positive on the interior grid",
        )
    params = FreqOpParams(n=n, lam=max(lam, 0.0))
    values = eval_P_array(U[live], Up[live], r[live], params)
    worst = int(np.argmin(values))
    return CheckReport(
        name="subsolution",
        status=CheckStatus.PASSED if values[worst] >= -tol else CheckStatus.FAILED,
        margin=float(values[worst] + tol),
        radius=float(r[live][worst]),
        message=f"min P U = {values[worst]:.3g}",
        details={"points": int(live.sum())},
    )


def verify_dominance(curve: FrequencyCurve, n: int, lam: float, tol: float = 1e-3) -> CheckReport:
    """U stays above the extremal started from (r[0], U(r[0]))."""
    r = curve.array("r")
    U = curve.array("U")
    params = FreqOpParams(n=n, lam=max(lam, 0.0))
    extremal = integrate_extremal(params, float(r[0]), float(U[0]), float(r[-1]), r_eval=r)
    gap = U - extremal.array("h")
    worst = int(np.argmin(gap))
    return CheckReport(
        name="dominance",
        status=CheckStatus.PASSED if gap[worst] >= -tol else CheckStatus.FAILED,
        margin=float(gap[worst] + tol),
        radius=float(r[worst]),
        message=f"min U - extremal = {gap[worst]:.3g}",
    )
