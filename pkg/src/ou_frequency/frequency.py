"""Log-domain quadrature of I(r), D(r) and the frequency U = D/I on R^n.

The Gaussian weight is fixed to f = |x|^2/4. Sphere integrals use a two-point
sum (n = 1), the periodic trapezoid (n = 2) or Gauss-Legendre in cos(polar)
times the trapezoid in azimuth (n = 3). Ball integrals nest a composite
Gauss rule in the radius around the sphere rules.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np
from loguru import logger

from ou_frequency.certificates import centered_derivative
from ou_frequency.config import QuadratureConfig, default_quadrature
from ou_frequency.errors import (
    ContractViolation,
    DomainError,
    NodalSphereError,
    PreconditionError,
)
from ou_frequency.fields import EvaluableField, FieldSample
from ou_frequency.models import CheckReport, CheckStatus, FrequencyCurve
from ou_frequency.numerics import (
    LogReal,
    legendre_reference,
    lr_relative_gap,
    signed_log,
    signed_logsumexp,
    signed_logsumexp_rows,
)

SUPPORTED_DIMENSIONS = (1, 2, 3)

ScalarField = Callable[[np.ndarray], Union[np.ndarray, tuple[np.ndarray, np.ndarray]]]


class DMode(str, Enum):
    """How D(r) is evaluated."""

    BOUNDARY = "boundary"
    BULK = "bulk"


class BoundKind(str, Enum):
    """Which bound the margin column of a curve measures."""

    GROWTH = "growth"
    SHARPNESS = "sharpness"
    UPRIME = "uprime"


def _check_dimension(n: int) -> None:
    if n not in SUPPORTED_DIMENSIONS:
        raise DomainError(f"dimension n={n} is unsupported (only 1, 2, 3)")


@lru_cache(maxsize=256)
def sphere_rule(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on the unit sphere S^(n-1) and weights summing to its area.

    Args:
        n: Dimension of the ambient space
        m: Trapezoid count (n = 2) or polar Gauss count (n = 3); ignored for n = 1

    Returns:
        (points of shape (N, n), weights of shape (N,))
    """
    _check_dimension(n)
    if n == 1:
        points = np.array([[1.0], [-1.0]])
        weights = np.ones(2)
    elif n == 2:
        theta = 2.0 * math.pi * np.arange(m) / m
        points = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(m, 2.0 * math.pi / m)
    else:
        t, wt = legendre_reference(m)
        azimuth = 2.0 * math.pi * np.arange(2 * m) / (2 * m)
        sin_polar = np.sqrt(1.0 - t * t)
        points = np.column_stack(
            [
                np.outer(sin_polar, np.cos(azimuth)).ravel(),
                np.outer(sin_polar, np.sin(azimuth)).ravel(),
                np.repeat(t, 2 * m),
            ]
        )
        weights = np.repeat(wt * (math.pi / m), 2 * m)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def sphere_integral(
    g: ScalarField,
    r: float,
    n: int,
    m: Optional[int] = None,
    quad: Optional[QuadratureConfig] = None,
) -> LogReal:
    """Integral of g over the sphere of radius r in R^n.

    g takes points of shape (N, n) and returns either real values or a
    (signs, logs) pair for integrands beyond floating-point range.
    """
    _check_dimension(n)
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    if m is None:
        m = (quad or default_quadrature()).sphere_nodes(n, r)
    if n >= 2 and m < 8:
        raise ValueError(f"need at least 8 angular nodes, got m={m}")
    unit, weights = sphere_rule(n, m)
    values = g(r * unit)
    if isinstance(values, tuple):
        signs, logs = values
    else:
        signs, logs = signed_log(values)
    log_w = np.log(weights) + (n - 1) * math.log(r)
    return signed_logsumexp(signs, np.asarray(logs) + log_w)


@dataclass(frozen=True)
class _Shell:
    r: float
    points: np.ndarray
    log_weights: np.ndarray
    sample: FieldSample


def _shell(v: EvaluableField, r: float, quad: QuadratureConfig) -> _Shell:
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    _check_dimension(v.n)
    unit, weights = sphere_rule(v.n, quad.sphere_nodes(v.n, r))
    points = r * unit
    return _Shell(
        r=r,
        points=points,
        log_weights=np.log(weights) + (v.n - 1) * math.log(r),
        sample=v.sample(points),
    )


def _value_sq(sample: FieldSample) -> tuple[np.ndarray, np.ndarray]:
    return sample.value_signs**2, 2.0 * sample.value_logs


def _grad_sq(sample: FieldSample) -> tuple[np.ndarray, np.ndarray]:
    return signed_logsumexp_rows(sample.grad_signs**2, 2.0 * sample.grad_logs)


def _radial_derivative(sample: FieldSample, points: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    x_signs, x_logs = signed_log(points)
    signs, logs = signed_logsumexp_rows(sample.grad_signs * x_signs, sample.grad_logs + x_logs)
    return signs, logs - math.log(r)


def _shell_sum(shell: _Shell, signs: np.ndarray, logs: np.ndarray) -> LogReal:
    return signed_logsumexp(signs, logs + shell.log_weights)


def _potential_values(v: EvaluableField, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    potential = v.potential(points)
    if potential is None or not v.declares_potential:
        raise ContractViolation(f"{v!r} declares no potential V")
    return signed_log(potential)


def compute_I(v: EvaluableField, r: float, quad: Optional[QuadratureConfig] = None) -> LogReal:
    """I(r) = r^(1-n) times the integral of u^2 over the sphere of radius r."""
    shell = _shell(v, r, quad or default_quadrature())
    return _shell_sum(shell, *_value_sq(shell.sample)).scale_log((1 - v.n) * math.log(r))


def compute_D(
    v: EvaluableField,
    r: float,
    mode: DMode = DMode.BOUNDARY,
    quad: Optional[QuadratureConfig] = None,
) -> LogReal:
    """D(r) from the boundary flux of u u_r or from the weighted bulk energy.

    Args:
        v: Field to integrate
        r: Radius
        mode: BOUNDARY or BULK; BULK needs a declared potential
        quad: Quadrature resolution

    Returns:
        D(r) as a LogReal
    """
    quad = quad or default_quadrature()
    n = v.n
    if mode == DMode.BULK:
        if not v.declares_potential:
            raise ContractViolation(f"bulk D needs a declared potential, {v!r} has none")
        moments = _ball_moments(v, r, quad)
        return (moments["grad2"] - moments["vu2"]).scale_log(
            (2 - n) * math.log(r) + 0.25 * r * r
        )
    shell = _shell(v, r, quad)
    r_signs, r_logs = _radial_derivative(shell.sample, shell.points, r)
    flux = _shell_sum(
        shell, shell.sample.value_signs * r_signs, shell.sample.value_logs + r_logs
    )
    return flux.scale_log((2 - n) * math.log(r))


_MOMENTS = ("grad2", "grad2_f", "u2", "u2_f", "vu2", "vu2_f", "u2_gradv")


def _ball_moments(v: EvaluableField, r: float, quad: QuadratureConfig) -> dict[str, LogReal]:
    """Gaussian-weighted integrals over B_r, without the exp(r^2/4) factor.

    grad2 = int |grad u|^2 e^-f, u2 = int u^2 e^-f, vu2 = int V u^2 e^-f and
    u2_gradv = int u^2 <grad V, grad f> e^-f; the _f variants carry an extra f.
    V moments are zero when the field declares no potential.
    """
    n = v.n
    radii, radial_weights = quad.radial_rule(0.0, r)
    parts: dict[str, tuple[list[np.ndarray], list[np.ndarray]]] = {
        name: ([], []) for name in _MOMENTS
    }

    def push(name: str, signs: np.ndarray, logs: np.ndarray) -> None:
        parts[name][0].append(signs)
        parts[name][1].append(logs)

    for rho, omega in zip(radii, radial_weights):
        unit, weights = sphere_rule(n, quad.sphere_nodes(n, rho))
        points = rho * unit
        sample = v.sample(points)
        base = np.log(weights) + math.log(omega) + (n - 1) * math.log(rho) - 0.25 * rho * rho
        log_f = math.log(0.25 * rho * rho)

        u_signs, u_logs = _value_sq(sample)
        g_signs, g_logs = _grad_sq(sample)
        push("u2", u_signs, u_logs + base)
        push("u2_f", u_signs, u_logs + base + log_f)
        push("grad2", g_signs, g_logs + base)
        push("grad2_f", g_signs, g_logs + base + log_f)

        potential = v.potential(points) if v.declares_potential else None
        if potential is not None:
            p_signs, p_logs = signed_log(potential)
            push("vu2", p_signs * u_signs, p_logs + u_logs + base)
            push("vu2_f", p_signs * u_signs, p_logs + u_logs + base + log_f)
            drift = 0.5 * np.sum(v.potential_gradient(points) * points, axis=1)
            d_signs, d_logs = signed_log(drift)
            push("u2_gradv", d_signs * u_signs, d_logs + u_logs + base)

    moments = {}
    for name, (signs, logs) in parts.items():
        if signs:
            moments[name] = signed_logsumexp(np.concatenate(signs), np.concatenate(logs))
        else:
            moments[name] = LogReal.zero()
    logger.debug(f"ball moments at r={r}: {radii.size} radial nodes")
    return moments


def bound_margin(
    bound: BoundKind,
    r: np.ndarray,
    U: np.ndarray,
    Uprime: np.ndarray,
    n: int,
    lam: float,
    eps: float,
) -> np.ndarray:
    """Slack of the selected bound at each radius (>= 0 means satisfied)."""
    r = np.asarray(r, dtype=float)
    if bound == BoundKind.GROWTH:
        return U - (0.5 * r * r - n - 2.0 * lam - eps)
    if bound == BoundKind.SHARPNESS:
        return (0.5 * r * r - n - 2.0 * lam + eps) - U
    return Uprime - 0.5 * r


def compute_curve(
    v: EvaluableField,
    r_grid: Sequence[float],
    bound: BoundKind = BoundKind.GROWTH,
    eps: float = 0.1,
    quad: Optional[QuadratureConfig] = None,
    max_workers: int = 1,
) -> FrequencyCurve:
    """Sample I, D, U, U' and W on a radius grid.

    Args:
        v: Field on R^n
        r_grid: Increasing radii (at least two)
        bound: Bound measured by the margin column
        eps: Slack epsilon of the bound
        quad: Quadrature resolution
        max_workers: Threads used across radii

    Returns:
        The sampled curve; U' comes from finite differences of U
    """
    quad = quad or default_quadrature()
    radii = np.asarray(r_grid, dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) <= 0):
        raise ValueError("radius grid must be increasing with at least two points")

    def at_radius(r: float) -> tuple[LogReal, LogReal]:
        I = compute_I(v, r, quad)
        if I.is_zero:
            raise NodalSphereError(r)
        return I, compute_D(v, r, DMode.BOUNDARY, quad)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(at_radius, radii.tolist()))
    else:
        results = [at_radius(r) for r in radii.tolist()]

    logI = np.array([I.logmag for I, _ in results])
    logD = np.array([D.logmag if not D.is_zero else -np.inf for _, D in results])
    U = np.array([D.ratio(I) for I, D in results])
    Uprime = centered_derivative(U, radii)
    n = v.n
    lam = v.eigenvalue or 0.0
    W = U - 0.25 * radii**2 + 0.5 * n
    margin = bound_margin(bound, radii, U, Uprime, n, lam, eps)
    logger.debug(f"curve of {v!r}: {radii.size} radii in [{radii[0]}, {radii[-1]}]")
    return FrequencyCurve(
        r=radii.tolist(),
        logI=logI.tolist(),
        logD=logD.tolist(),
        U=U.tolist(),
        Uprime=Uprime.tolist(),
        W=W.tolist(),
        margin=margin.tolist(),
    )


def _boundary_terms(v: EvaluableField, r: float, quad: QuadratureConfig) -> dict[str, LogReal]:
    shell = _shell(v, r, quad)
    sample = shell.sample
    r_signs, r_logs = _radial_derivative(sample, shell.points, r)
    u_signs, u_logs = _value_sq(sample)
    terms = {
        "ur2": _shell_sum(shell, r_signs**2, 2.0 * r_logs),
        "grad2": _shell_sum(shell, *_grad_sq(sample)),
        "u2": _shell_sum(shell, u_signs, u_logs),
        "uur": _shell_sum(shell, sample.value_signs * r_signs, sample.value_logs + r_logs),
    }
    if v.declares_potential:
        p_signs, p_logs = _potential_values(v, shell.points)
        terms["vu2"] = _shell_sum(shell, p_signs * u_signs, p_logs + u_logs)
    else:
        terms["vu2"] = LogReal.zero()
    return terms


def _const(value: float) -> LogReal:
    return LogReal.from_float(value)


def rellich_check(
    v: EvaluableField, r: float, quad: Optional[QuadratureConfig] = None
) -> tuple[LogReal, LogReal]:
    """Both sides of the drift Rellich identity on B_r; V is taken from the field.

    lhs = 2r int_S u_r^2 - r int_S (|grad u|^2 - V u^2)
    rhs = e^(r^2/4) [(2-n) G + 2 G_f + 2 (n/2 VU - VU_f) + 2 int u^2 <grad V, grad f> e^-f]
    with G = int_B |grad u|^2 e^-f and VU = int_B V u^2 e^-f.
    """
    quad = quad or default_quadrature()
    if not v.declares_potential:
        raise ContractViolation(f"{v!r} declares no potential V")
    n = v.n
    shell = _boundary_terms(v, r, quad)
    lhs = shell["ur2"].scale_log(math.log(2.0 * r)) - (shell["grad2"] - shell["vu2"]).scale_log(
        math.log(r)
    )
    ball = _ball_moments(v, r, quad)
    bracket = (
        _const(2.0 - n) * ball["grad2"]
        + ball["grad2_f"].scale_log(math.log(2.0))
        + (_const(float(n)) * ball["vu2"] - ball["vu2_f"].scale_log(math.log(2.0)))
        + ball["u2_gradv"].scale_log(math.log(2.0))
    )
    rhs = bracket.scale_log(0.25 * r * r)
    logger.debug(f"rellich r={r}: lhs={lhs.to_float():.6g} rhs={rhs.to_float():.6g}")
    return lhs, rhs


def rellich_combine_check(
    v: EvaluableField, r: float, quad: Optional[QuadratureConfig] = None
) -> tuple[LogReal, LogReal]:
    """Both sides of the f-weighted energy identity.

    lhs = e^(r^2/4) r^(1-n) int_B (|grad u|^2 - V u^2) f e^-f
    rhs = (r/4)(D - I) + (1/2) e^(r^2/4) r^(1-n) int_B u^2 (n/2 - f) e^-f
    """
    quad = quad or default_quadrature()
    if not v.declares_potential:
        raise ContractViolation(f"{v!r} declares no potential V")
    n = v.n
    scale = 0.25 * r * r + (1 - n) * math.log(r)
    ball = _ball_moments(v, r, quad)
    lhs = (ball["grad2_f"] - ball["vu2_f"]).scale_log(scale)
    D = compute_D(v, r, DMode.BOUNDARY, quad)
    I = compute_I(v, r, quad)
    rest = (_const(0.5 * n) * ball["u2"] - ball["u2_f"]).scale_log(scale + math.log(0.5))
    rhs = (D - I).scale_log(math.log(0.25 * r)) + rest
    return lhs, rhs


def cauchy_schwarz_margin(
    v: EvaluableField, r: float, quad: Optional[QuadratureConfig] = None
) -> float:
    """(r^(2-n) int_S u_r^2 - U D / r) / |U D / r|; +inf when D = 0."""
    quad = quad or default_quadrature()
    n = v.n
    terms = _boundary_terms(v, r, quad)
    energy = terms["ur2"].scale_log((2 - n) * math.log(r))
    D = terms["uur"].scale_log((2 - n) * math.log(r))
    I = terms["u2"].scale_log((1 - n) * math.log(r))
    if D.is_zero:
        return math.inf
    ud_over_r = (D * D / I).scale_log(-math.log(r))
    return (energy - ud_over_r).ratio(ud_over_r)


def uprime_lower_bound(
    v: EvaluableField, r: float, quad: Optional[QuadratureConfig] = None
) -> float:
    """r/2 + I^-1 e^(r^2/4) r^(1-n) int_B u^2 (f - n/2 - 2 lambda) e^-f for eigenfunctions."""
    quad = quad or default_quadrature()
    lam = v.eigenvalue
    if lam is None:
        raise PreconditionError(f"{v!r} is not a drift eigenfunction")
    n = v.n
    ball = _ball_moments(v, r, quad)
    I = compute_I(v, r, quad)
    if I.is_zero:
        raise NodalSphereError(r)
    excess = (ball["u2_f"] - _const(0.5 * n + 2.0 * lam) * ball["u2"]).scale_log(
        0.25 * r * r + (1 - n) * math.log(r)
    )
    return 0.5 * r + excess.ratio(I)


def monotonicity_lower_bound(
    v: EvaluableField, r: float, quad: Optional[QuadratureConfig] = None
) -> float:
    """2 int_B |grad u|^2 (r^2/4 - f) e^-f / (r int_B |grad u|^2 e^-f)."""
    ball = _ball_moments(v, r, quad or default_quadrature())
    if ball["grad2"].is_zero:
        raise PreconditionError(f"grad u vanishes on B_{r}, U = 0")
    numerator = ball["grad2"].scale_log(math.log(0.25 * r * r)) - ball["grad2_f"]
    return 2.0 * numerator.ratio(ball["grad2"]) / r


def _gap_report(
    name: str, radii: Sequence[float], gaps: Sequence[float], tol: float, what: str
) -> CheckReport:
    gaps_arr = np.asarray(gaps, dtype=float)
    worst = int(np.argmax(gaps_arr))
    ok = bool(np.all(gaps_arr <= tol))
    return CheckReport(
        name=name,
        status=CheckStatus.PASSED if ok else CheckStatus.FAILED,
        margin=float(tol - gaps_arr[worst]),
        radius=float(radii[worst]),
        message=f"{what}: worst relative gap {gaps_arr[worst]:.3g} at r={radii[worst]}",
        details={"radii": list(radii), "gaps": gaps_arr.tolist(), "tolerance": tol},
    )


def check_divergence(
    v: EvaluableField,
    radii: Sequence[float],
    tol: float = 1e-6,
    quad: Optional[QuadratureConfig] = None,
) -> CheckReport:
    """Boundary and bulk D agree on each sphere."""
    gaps = [
        lr_relative_gap(compute_D(v, r, DMode.BOUNDARY, quad), compute_D(v, r, DMode.BULK, quad))
        for r in radii
    ]
    return _gap_report("divergence", radii, gaps, tol, f"boundary vs bulk D for {v!r}")


def check_rellich(
    v: EvaluableField,
    radii: Sequence[float],
    tol: float = 1e-6,
    quad: Optional[QuadratureConfig] = None,
) -> list[CheckReport]:
    """The Rellich identity and the f-weighted energy identity at each radius."""
    rellich = [lr_relative_gap(*rellich_check(v, r, quad)) for r in radii]
    combine = [lr_relative_gap(*rellich_combine_check(v, r, quad)) for r in radii]
    return [
        _gap_report("rellich", radii, rellich, tol, f"Rellich identity for {v!r}"),
        _gap_report("rellich_combine", radii, combine, tol, f"weighted energy identity for {v!r}"),
    ]


def check_cauchy_schwarz(
    v: EvaluableField,
    radii: Sequence[float],
    tol: float = 1e-8,
    quad: Optional[QuadratureConfig] = None,
) -> CheckReport:
    """r^(2-n) int_S u_r^2 >= U D / r up to a relative tolerance."""
    margins = np.array([cauchy_schwarz_margin(v, r, quad) for r in radii])
    worst = int(np.argmin(margins))
    ok = bool(np.all(margins >= -tol))
    return CheckReport(
        name="cauchy_schwarz",
        status=CheckStatus.PASSED if ok else CheckStatus.FAILED,
        margin=float(margins[worst]),
        radius=float(radii[worst]),
        message=f"radial energy vs UD/r for {v!r}",
        details={"radii": list(radii), "margins": margins.tolist()},
    )


def _flux_gaps(r: np.ndarray, logI: np.ndarray, logD: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Relative gap between I' and 2D/r on points with two neighbours each side.

    I' is a five-point difference of I / I(r_i), so the check reads I and D
    and never U. The gap between the h and 2h stencils is subtracted as the
    truncation allowance.
    """
    gaps = np.zeros(r.size)
    for i in range(2, r.size - 2):
        window = r[i - 2 : i + 3]
        with np.errstate(over="ignore", invalid="ignore"):
            f = np.exp(logI[i - 2 : i + 3] - logI[i])
            d_h = (f[3] - f[1]) / (window[3] - window[1])
            d_2h = (f[4] - f[0]) / (window[4] - window[0])
            derivative = d_h + (d_h - d_2h) / 3.0
            expected = 2.0 * np.sign(U[i]) * np.exp(logD[i] - logI[i]) / r[i]
            excess = max(0.0, abs(derivative - expected) - abs(d_2h - d_h))
            gap = excess / abs(expected) if expected != 0 else excess
        gaps[i] = gap if np.isfinite(gap) else 0.0
    return gaps


def check_derivative_identities(curve: FrequencyCurve, tol: float = 1e-5) -> CheckReport:
    """(log I)' = 2U/r and I' = 2D/r by finite differences on interior points."""
    r = curve.array("r")
    U = curve.array("U")
    logI = curve.array("logI")
    dlogI = centered_derivative(logI, r)
    inner = slice(2, -2) if r.size > 4 else slice(1, -1)
    expected = 2.0 * U[inner] / r[inner]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_gap = np.abs(dlogI[inner] - expected) / np.abs(expected)
    log_gap = np.where(np.isfinite(log_gap), log_gap, np.abs(dlogI[inner]))
    flux_gap = _flux_gaps(r, logI, curve.array("logD"), U)[inner]
    gaps = np.maximum(log_gap, flux_gap)
    return _gap_report(
        "log_i_derivative", r[inner].tolist(), gaps.tolist(), tol, "(log I)' = 2U/r and I' = 2D/r"
    )


def check_quadrature_convergence(
    v: EvaluableField,
    radii: Sequence[float],
    tol: float = 1e-8,
    quad: Optional[QuadratureConfig] = None,
) -> CheckReport:
    """Doubling every node count moves I and D by at most tol (relative)."""
    quad = quad or default_quadrature()
    fine = quad.scaled(2.0)
    gaps = []
    for r in radii:
        gaps.append(
            max(
                lr_relative_gap(compute_I(v, r, quad), compute_I(v, r, fine)),
                lr_relative_gap(compute_D(v, r, DMode.BOUNDARY, quad), compute_D(v, r, DMode.BOUNDARY, fine)),
            )
        )
    return _gap_report("quadrature_convergence", radii, gaps, tol, f"node doubling for {v!r}")
