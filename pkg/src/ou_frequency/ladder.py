"""Exact ladder of one-dimensional drift eigenfunctions and Hermite polynomials.

Every function here lives in the closed basis

    u(x) = p(x) u0(x) + q(x) exp(x^2/4) + s(x)

with rational polynomials p, q, s and u0(x) = int_0^x exp(s^2/4) ds. The basis
is closed under differentiation (u0' = exp(x^2/4), exp(x^2/4)' = (x/2) exp(x^2/4))
and under antidifferentiation, so the ladder u_k' = u_(k-1) is exact algebra.
"""

import math
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Optional, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ou_frequency.errors import (
    DomainError,
    LadderCapacityError,
    LadderError,
    PreconditionError,
    QuadratureError,
)
from ou_frequency.numerics import (
    LogReal,
    gauss_rule,
    signed_log,
    signed_logaddexp,
    signed_logsumexp,
    u0_scaled,
)

Rational = Union[Fraction, int, str]

MAX_LEVEL = 64
MAX_BASIS_POWER = 128
ZERO_DEGREE = -1


class RationalPoly:
    """Polynomial with exact rational coefficients, lowest power first."""

    __slots__ = ("_coeffs", "_floats")

    def __init__(self, coefficients: Iterable[Rational] = ()):
        coeffs = [Fraction(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self._coeffs: tuple[Fraction, ...] = tuple(coeffs)
        self._floats: Optional[np.ndarray] = None

    @classmethod
    def monomial(cls, power: int, coefficient: Rational = 1) -> "RationalPoly":
        """coefficient * x**power."""
        return cls([0] * power + [coefficient])

    @property
    def coefficients(self) -> tuple[Fraction, ...]:
        return self._coeffs

    @property
    def degree(self) -> int:
        """Degree; the zero polynomial has ZERO_DEGREE."""
        return len(self._coeffs) - 1 if self._coeffs else ZERO_DEGREE

    @property
    def is_zero(self) -> bool:
        return not self._coeffs

    def coefficient(self, power: int) -> Fraction:
        if 0 <= power < len(self._coeffs):
            return self._coeffs[power]
        return Fraction(0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalPoly):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(self._coeffs)

    def __repr__(self) -> str:
        return f"RationalPoly({[str(c) for c in self._coeffs]})"

    def __add__(self, other: "RationalPoly") -> "RationalPoly":
        size = max(len(self._coeffs), len(other._coeffs))
        return RationalPoly(self.coefficient(i) + other.coefficient(i) for i in range(size))

    def __neg__(self) -> "RationalPoly":
        return RationalPoly(-c for c in self._coeffs)

    def __sub__(self, other: "RationalPoly") -> "RationalPoly":
        return self + (-other)

    def __mul__(self, other: Union["RationalPoly", Rational]) -> "RationalPoly":
        if not isinstance(other, RationalPoly):
            factor = Fraction(other)
            return RationalPoly(factor * c for c in self._coeffs)
        if self.is_zero or other.is_zero:
            return RationalPoly()
        out = [Fraction(0)] * (len(self._coeffs) + len(other._coeffs) - 1)
        for i, a in enumerate(self._coeffs):
            if a:
                for j, b in enumerate(other._coeffs):
                    out[i + j] += a * b
        return RationalPoly(out)

    __rmul__ = __mul__

    def shift(self, power: int) -> "RationalPoly":
        """Multiply by x**power."""
        if self.is_zero:
            return self
        return RationalPoly([0] * power + list(self._coeffs))

    def half_x(self) -> "RationalPoly":
        """(x/2) times this polynomial."""
        return self.shift(1) * Fraction(1, 2)

    def derivative(self) -> "RationalPoly":
        return RationalPoly(i * c for i, c in enumerate(self._coeffs) if i > 0)

    def __call__(self, x: Rational) -> Fraction:
        """Exact evaluation."""
        x = Fraction(x)
        total = Fraction(0)
        for c in reversed(self._coeffs):
            total = total * x + c
        return total

    def evaluate(self, xs: Union[float, np.ndarray]) -> np.ndarray:
        """Floating-point evaluation on an array."""
        if self._floats is None:
            self._floats = np.array([float(c) for c in self._coeffs] or [0.0])
        return np.polynomial.polynomial.polyval(np.asarray(xs, dtype=float), self._floats)

    def has_parity(self, parity: int) -> bool:
        """True if only powers with (-1)**power == parity occur (zero has both)."""
        return all(c == 0 or (-1) ** i == parity for i, c in enumerate(self._coeffs))

    def to_strings(self) -> list[str]:
        return [f"{c.numerator}/{c.denominator}" for c in self._coeffs]

    @classmethod
    def from_strings(cls, items: Iterable[str]) -> "RationalPoly":
        return cls(Fraction(item) for item in items)


ZERO = RationalPoly()
ONE = RationalPoly([1])


class BasisTag(str, Enum):
    """Which basis family a monomial multiplies."""

    U0 = "u0"
    GAUSSIAN = "gaussian"
    POLY = "poly"


class LadderFunction(BaseModel):
    """u = p u0 + q exp(x^2/4) + s, optionally tagged with its eigenlevel k.

    A level-k function solves L u = -(k/2) u for L u = u'' - (x/2) u'.
    """

    k: Optional[int] = None
    p: RationalPoly = Field(default_factory=RationalPoly)
    q: RationalPoly = Field(default_factory=RationalPoly)
    s: RationalPoly = Field(default_factory=RationalPoly)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def triple(self) -> tuple[RationalPoly, RationalPoly, RationalPoly]:
        return self.p, self.q, self.s

    @property
    def is_zero(self) -> bool:
        return self.p.is_zero and self.q.is_zero and self.s.is_zero

    def __add__(self, other: "LadderFunction") -> "LadderFunction":
        level = self.k if self.k == other.k else None
        return LadderFunction(k=level, p=self.p + other.p, q=self.q + other.q, s=self.s + other.s)

    def __sub__(self, other: "LadderFunction") -> "LadderFunction":
        return self + other.scaled(-1)

    def scaled(self, factor: Rational) -> "LadderFunction":
        """Constant multiple; the eigenlevel is unchanged."""
        factor = Fraction(factor)
        return LadderFunction(k=self.k, p=self.p * factor, q=self.q * factor, s=self.s * factor)

    def with_level(self, k: Optional[int]) -> "LadderFunction":
        return self.model_copy(update={"k": k})

    def value_at_zero(self) -> Fraction:
        """Exact u(0); u0(0) = 0 and exp(0) = 1."""
        return self.q(0) + self.s(0)

    def to_json_dict(self) -> dict[str, Any]:
        """Exact coefficients as {"k", "p", "q", "s"} with "num/den" strings."""
        return {
            "k": self.k,
            "p": self.p.to_strings(),
            "q": self.q.to_strings(),
            "s": self.s.to_strings(),
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "LadderFunction":
        return cls(
            k=data.get("k"),
            p=RationalPoly.from_strings(data.get("p", [])),
            q=RationalPoly.from_strings(data.get("q", [])),
            s=RationalPoly.from_strings(data.get("s", [])),
        )


class HermitePoly(BaseModel):
    """Monic polynomial eigenfunction h_k with L h_k = -(k/2) h_k."""

    k: int = Field(ge=0)
    poly: RationalPoly

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def as_ladder(self) -> LadderFunction:
        return LadderFunction(k=self.k, s=self.poly)


class GrowthCertificate(BaseModel):
    """Fitted constant c_k with |u_k(x)| <= c_k |x|^(-k-1) exp(x^2/4) on the samples."""

    k: int
    c_k: float = Field(gt=0)
    x_min: float
    x_max: float
    samples: int

    model_config = {"frozen": True}


def ladder_differentiate(F: LadderFunction) -> LadderFunction:
    """Derivative in the closed basis; the level drops by one."""
    return LadderFunction(
        k=None if F.k is None else F.k - 1,
        p=F.p.derivative(),
        q=F.p + F.q.derivative() + F.q.half_x(),
        s=F.s.derivative(),
    )


def drift_laplacian(F: LadderFunction) -> LadderFunction:
    """L F = F'' - (x/2) F' as an untagged triple."""
    first = ladder_differentiate(F)
    second = ladder_differentiate(first)
    return LadderFunction(
        p=second.p - first.p.half_x(),
        q=second.q - first.q.half_x(),
        s=second.s - first.s.half_x(),
    )


def eigen_residual(F: LadderFunction) -> tuple[RationalPoly, RationalPoly, RationalPoly]:
    """Coefficients of L F + (k/2) F; all zero iff F is a level-k eigenfunction."""
    if F.k is None:
        raise ValueError("eigen residual needs an eigenlevel")
    half_k = Fraction(F.k, 2)
    lf = drift_laplacian(F)
    return lf.p + F.p * half_k, lf.q + F.q * half_k, lf.s + F.s * half_k


@lru_cache(maxsize=None)
def _gaussian_moment(m: int) -> LadderFunction:
    # int_0^x t^m exp(t^2/4) dt
    if m == 0:
        return LadderFunction(p=ONE)
    if m == 1:
        return LadderFunction(q=RationalPoly([2]), s=RationalPoly([-2]))
    head = LadderFunction(q=RationalPoly.monomial(m - 1, 2))
    return head - _gaussian_moment(m - 2).scaled(2 * (m - 1))


def integrate_basis(m: int, which: BasisTag) -> LadderFunction:
    """Antiderivative vanishing at 0 of x^m u0, x^m exp(x^2/4) or x^m.

    Args:
        m: Power of x (0 <= m <= 128)
        which: Basis family of the integrand

    Returns:
        Untagged triple
    """
    if not 0 <= m <= MAX_BASIS_POWER:
        raise ValueError(f"basis power {m} outside [0, {MAX_BASIS_POWER}]")
    which = BasisTag(which)
    if which is BasisTag.POLY:
        return LadderFunction(s=RationalPoly.monomial(m + 1, Fraction(1, m + 1)))
    if which is BasisTag.GAUSSIAN:
        return _gaussian_moment(m)
    # by parts: x^(m+1)/(m+1) u0 - 1/(m+1) int x^(m+1) exp(x^2/4)
    head = LadderFunction(p=RationalPoly.monomial(m + 1, Fraction(1, m + 1)))
    return head - _gaussian_moment(m + 1).scaled(Fraction(1, m + 1))


def ladder_integrate(F: LadderFunction) -> LadderFunction:
    """Antiderivative of F vanishing at 0, as an untagged triple."""
    total = LadderFunction()
    for tag, poly in ((BasisTag.U0, F.p), (BasisTag.GAUSSIAN, F.q), (BasisTag.POLY, F.s)):
        for power, coeff in enumerate(poly.coefficients):
            if coeff:
                total = total + integrate_basis(power, tag).scaled(coeff)
    return total


@lru_cache(maxsize=None)
def ladder_build(k: int) -> LadderFunction:
    """The ladder function u_k, with u_0 = u0 and u_k' = u_(k-1).

    Negative levels come from differentiating u0; positive levels from
    integrating u_(k-1) plus the constant d_k = -2 u_(k-2)(0) / k that makes
    the eigen residual vanish at 0.
    """
    if abs(k) > MAX_LEVEL:
        raise LadderCapacityError(f"ladder level {k} exceeds |k| <= {MAX_LEVEL}")
    if k == 0:
        return LadderFunction(k=0, p=ONE)
    if k < 0:
        built = ladder_differentiate(ladder_build(k + 1))
    else:
        shift = -2 * ladder_build(k - 2).value_at_zero() / k
        built = (ladder_integrate(ladder_build(k - 1)) + LadderFunction(s=RationalPoly([shift])))
        built = built.with_level(k)
        logger.debug(f"built u_{k} with d_{k} = {shift}")
    residual = eigen_residual(built)
    if any(not part.is_zero for part in residual):
        raise LadderError(f"u_{k} fails its eigen equation: {residual}")
    return built


def hermite_polynomial(k: int) -> HermitePoly:
    """Monic h_k from h_(j+1) = x h_j - 2 j h_(j-1)."""
    if k < 0:
        raise ValueError(f"Hermite level must be nonnegative, got {k}")
    if k > MAX_LEVEL:
        raise LadderCapacityError(f"Hermite level {k} exceeds {MAX_LEVEL}")
    previous, current = ZERO, ONE
    for j in range(k):
        previous, current = current, current.shift(1) - previous * (2 * j)
    hermite = HermitePoly(k=k, poly=current)
    if any(not part.is_zero for part in eigen_residual(hermite.as_ladder())):
        raise LadderError(f"h_{k} fails its eigen equation")
    return hermite


def ladder_taylor(F: LadderFunction, degree: int) -> RationalPoly:
    """Exact Taylor polynomial of F at 0 up to the given degree."""
    coeffs = []
    current = F
    for j in range(degree + 1):
        coeffs.append(current.value_at_zero() / math.factorial(j))
        current = ladder_differentiate(current)
    return RationalPoly(coeffs)


def ladder_log_values(F: LadderFunction, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed log values of F on an array of points.

    Uses u(x) = exp(x^2/4) (p w + q) + s with the bounded kernel w.
    """
    xs = np.asarray(xs, dtype=float)
    signs = np.zeros(xs.shape)
    logs = np.full(xs.shape, -np.inf)
    if not (F.p.is_zero and F.q.is_zero):
        bracket = F.p.evaluate(xs) * u0_scaled(xs) + F.q.evaluate(xs)
        signs, logs = signed_log(bracket)
        logs = logs + 0.25 * xs * xs
    if not F.s.is_zero:
        s_signs, s_logs = signed_log(F.s.evaluate(xs))
        signs, logs = signed_logaddexp(signs, logs, s_signs, s_logs)
    return signs, logs


def ladder_eval(F: LadderFunction, x: float, d: int = 0) -> LogReal:
    """The d-th derivative (d <= 2) of F at x as a LogReal."""
    if d not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {d}")
    for _ in range(d):
        F = ladder_differentiate(F)
    signs, logs = ladder_log_values(F, np.array([x], dtype=float))
    if signs[0] == 0:
        return LogReal.zero()
    return LogReal(sign=int(signs[0]), logmag=float(logs[0]))


def growth_certificate(
    F: LadderFunction, x_min: float = 1.0, x_max: float = 100.0, samples: int = 397
) -> GrowthCertificate:
    """Smallest c_k bounding |u_k| |x|^(k+1) exp(-x^2/4) on a symmetric sample grid."""
    if F.k is None:
        raise ValueError("growth certificate needs an eigenlevel")
    half = np.linspace(x_min, x_max, samples)
    xs = np.concatenate([-half[::-1], half])
    signs, logs = ladder_log_values(F, xs)
    live = signs != 0
    scaled = logs[live] + (F.k + 1) * np.log(np.abs(xs[live])) - 0.25 * xs[live] ** 2
    return GrowthCertificate(
        k=F.k, c_k=float(np.exp(np.max(scaled))), x_min=x_min, x_max=x_max, samples=xs.size
    )


def _annulus_log_mass(F: LadderFunction, R: float, nodes: int = 32) -> LogReal:
    rule = gauss_rule(nodes, R - 1.0 / R, R + 1.0 / R)
    xs = np.asarray(rule.nodes)
    log_w = np.log(np.asarray(rule.weights))
    parts = []
    for side in (xs, -xs):
        signs, logs = ladder_log_values(F, side)
        parts.append((signs * signs, 2.0 * logs + log_w))
    return signed_logsumexp(
        np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    )


def taylor_approx_check(
    k: int, R0: float, R: float, F: Optional[LadderFunction] = None
) -> tuple[LogReal, LogReal]:
    """Both sides, without the constant, of the Taylor approximation estimate.

    With u = u_k (or F when given) and v its degree-k Taylor polynomial at 0:
    lhs = max over a grid of step R0/256 on [-R0, R0] of (u - v)^2, and
    rhs_core = R^(3 + max(0, 2k + 2)) exp(-R^2/2) int_{R-1/R < |x| < R+1/R} u^2.
    Only n = 1.
    """
    if R < max(2.0 * R0, 4.0):
        raise PreconditionError(f"need R >= max(2 R0, 4), got R={R}, R0={R0}")
    u = F if F is not None else ladder_build(k)
    taylor = ladder_taylor(u, k) if k >= 0 else ZERO
    grid = np.arange(-256, 257) * (R0 / 256.0)
    u_signs, u_logs = ladder_log_values(u, grid)
    v_signs, v_logs = signed_log(taylor.evaluate(grid))
    d_signs, d_logs = signed_logaddexp(u_signs, u_logs, -v_signs, v_logs)
    live = d_signs != 0
    lhs = (
        LogReal(sign=1, logmag=2.0 * float(np.max(d_logs[live])))
        if np.any(live)
        else LogReal.zero()
    )
    mass = _annulus_log_mass(u, R)
    if mass.is_zero:
        raise QuadratureError(f"annulus integral of u^2 underflowed at R={R}")
    n = 1
    power = 4 * n - 1 + max(0, 2 * k + 2)
    rhs_core = mass.scale_log(power * math.log(R) - 0.5 * R * R)
    logger.debug(f"taylor check k={k} R={R}: log lhs={lhs.logmag:.6g}, log rhs={rhs_core.logmag:.6g}")
    return lhs, rhs_core


def ladder_parity(k: int) -> int:
    """Parity of u_k: u_k(-x) = (-1)^(k+1) u_k(x)."""
    return (-1) ** ((k + 1) % 2)


def check_parity(F: LadderFunction) -> bool:
    """Coefficient-wise parity test implied by the eigenlevel."""
    if F.k is None:
        raise DomainError("parity is defined for tagged ladder functions")
    sigma = ladder_parity(F.k)
    # p multiplies the odd u0, so it carries the opposite parity
    return F.p.has_parity(-sigma) and F.q.has_parity(sigma) and F.s.has_parity(sigma)
