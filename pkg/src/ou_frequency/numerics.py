"""Log-domain scalars, Gauss-Legendre rules and the scaled kernel w(x)."""

import math
from functools import lru_cache
from typing import Any, Callable, Iterable, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy import special

from ou_frequency.errors import DomainError, QuadratureError

ArrayLike = Union[float, np.ndarray]

# exp() overflows a double beyond this log-magnitude
_LOG_MAX = 709.782712893384


class LogReal(BaseModel):
    """A real number stored as a sign and the natural log of its magnitude.

    The zero state is ``sign == 0``; its ``logmag`` is normalised to 0.0.
    """

    sign: int = Field(default=0, ge=-1, le=1)
    logmag: float = 0.0

    model_config = {"frozen": True}

    @model_validator(mode="before")
    @classmethod
    def _canonical_zero(cls, data: Any) -> Any:
        if isinstance(data, dict):
            if data.get("sign", 0) == 0 or data.get("logmag", 0.0) == -math.inf:
                return {"sign": 0, "logmag": 0.0}
        return data

    @field_validator("logmag")
    @classmethod
    def _finite_logmag(cls, value: float) -> float:
        if math.isnan(value) or value == math.inf:
            raise ValueError(f"log-magnitude must be finite, got {value}")
        return value

    @classmethod
    def zero(cls) -> "LogReal":
        """The exact zero."""
        return cls(sign=0, logmag=0.0)

    @classmethod
    def from_float(cls, value: float) -> "LogReal":
        """Convert a native float."""
        if value == 0.0:
            return cls.zero()
        return cls(sign=1 if value > 0 else -1, logmag=math.log(abs(value)))

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def to_float(self) -> float:
        """Convert back to a float, saturating at +-inf."""
        if self.sign == 0:
            return 0.0
        if self.logmag > _LOG_MAX:
            return self.sign * math.inf
        return self.sign * math.exp(self.logmag)

    def reciprocal(self) -> "LogReal":
        """1/x; the zero state has no reciprocal."""
        if self.sign == 0:
            raise DomainError("reciprocal of zero")
        return LogReal(sign=self.sign, logmag=-self.logmag)

    def __neg__(self) -> "LogReal":
        return LogReal(sign=-self.sign, logmag=self.logmag)

    def __add__(self, other: "LogReal") -> "LogReal":
        return lr_add(self, other)

    def __sub__(self, other: "LogReal") -> "LogReal":
        return lr_add(self, -other)

    def __mul__(self, other: "LogReal") -> "LogReal":
        return lr_mul(self, other)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        return lr_mul(self, other.reciprocal())

    def scale_log(self, log_factor: float) -> "LogReal":
        """Multiply by exp(log_factor)."""
        if self.sign == 0:
            return self
        return LogReal(sign=self.sign, logmag=self.logmag + log_factor)

    def ratio(self, other: "LogReal") -> float:
        """self/other as a float."""
        return (self / other).to_float()


def lr_add(a: LogReal, b: LogReal) -> LogReal:
    """Sum of two log-domain reals by factoring out the larger magnitude."""
    if a.sign == 0:
        return b
    if b.sign == 0:
        return a
    big, small = (a, b) if a.logmag >= b.logmag else (b, a)
    gap = small.logmag - big.logmag
    if big.sign == small.sign:
        return LogReal(sign=big.sign, logmag=big.logmag + math.log1p(math.exp(gap)))
    if gap == 0.0:
        return LogReal.zero()
    return LogReal(sign=big.sign, logmag=big.logmag + math.log1p(-math.exp(gap)))


def lr_mul(a: LogReal, b: LogReal) -> LogReal:
    """Product of two log-domain reals."""
    if a.sign == 0 or b.sign == 0:
        return LogReal.zero()
    return LogReal(sign=a.sign * b.sign, logmag=a.logmag + b.logmag)


def lr_sum(items: Iterable[LogReal]) -> LogReal:
    """Sum in a fixed left-to-right order."""
    signs, logs = [], []
    for item in items:
        signs.append(item.sign)
        logs.append(item.logmag)
    return signed_logsumexp(np.array(signs, dtype=float), np.array(logs, dtype=float))


# Array helpers. Arrays carry (signs, logs) pairs; sign 0 marks an exact zero.


def signed_log(values: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Split real values into signs and log-magnitudes."""
    values = np.asarray(values, dtype=float)
    signs = np.sign(values)
    logs = np.full(values.shape, -np.inf)
    np.log(np.abs(values), out=logs, where=signs != 0)
    return signs, logs


def signed_logaddexp(
    s1: np.ndarray, l1: np.ndarray, s2: np.ndarray, l2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise sum of two signed log arrays."""
    s1, l1, s2, l2 = np.broadcast_arrays(
        np.asarray(s1, float), np.asarray(l1, float), np.asarray(s2, float), np.asarray(l2, float)
    )
    l1 = np.where(s1 != 0, l1, -np.inf)
    l2 = np.where(s2 != 0, l2, -np.inf)
    peak = np.maximum(l1, l2)
    live = np.isfinite(peak)
    safe_peak = np.where(live, peak, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        total = s1 * np.exp(l1 - safe_peak) + s2 * np.exp(l2 - safe_peak)
    total = np.where(live, total, 0.0)
    signs, logs = signed_log(total)
    return signs, np.where(signs != 0, logs + safe_peak, -np.inf)


def signed_logsumexp(signs: np.ndarray, logs: np.ndarray) -> LogReal:
    """Sum of all entries of a signed log array as a LogReal.

    The reduction order is the array order, so repeated calls are bit-identical.
    """
    signs = np.asarray(signs, dtype=float).ravel()
    logs = np.asarray(logs, dtype=float).ravel()
    live = (signs != 0) & np.isfinite(logs)
    if not np.any(live):
        return LogReal.zero()
    s = signs[live]
    lg = logs[live]
    peak = float(np.max(lg))
    total = math.fsum((s * np.exp(lg - peak)).tolist())
    if total == 0.0:
        return LogReal.zero()
    return LogReal(sign=1 if total > 0 else -1, logmag=peak + math.log(abs(total)))


class QuadratureRule(BaseModel):
    """Nodes and positive weights on an interval."""

    nodes: tuple[float, ...]
    weights: tuple[float, ...]
    interval: tuple[float, float]

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_shape(self) -> "QuadratureRule":
        if len(self.nodes) != len(self.weights) or not self.nodes:
            raise ValueError("nodes and weights must be non-empty and equal in length")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        return self

    def integrate(self, func: Callable[[np.ndarray], np.ndarray]) -> float:
        """Apply the rule to a vectorised real function."""
        values = np.asarray(func(np.asarray(self.nodes)), dtype=float)
        return math.fsum((np.asarray(self.weights) * values).tolist())


@lru_cache(maxsize=None)
def legendre_reference(m: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = special.roots_legendre(m)
    if not (
        np.all(np.isfinite(nodes))
        and np.all(np.diff(nodes) > 0)
        and np.all(np.abs(nodes) < 1.0)
        and abs(float(np.sum(weights)) - 2.0) <= 1e-12
    ):
        raise QuadratureError(f"Gauss-Legendre node computation failed for m={m}")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_rule(m: int, a: float, b: float) -> QuadratureRule:
    """Gauss-Legendre rule with m nodes mapped to [a, b].

    Args:
        m: Number of nodes (m >= 1)
        a: Left end
        b: Right end (b > a)

    Returns:
        The mapped rule
    """
    if m < 1:
        raise ValueError(f"need at least one node, got m={m}")
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    nodes, weights = legendre_reference(m)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return QuadratureRule(
        nodes=tuple((mid + half * nodes).tolist()),
        weights=tuple((half * weights).tolist()),
        interval=(a, b),
    )


def composite_gauss(
    a: float, b: float, m: int, max_width: float
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights with panels no wider than max_width."""
    panels = max(1, math.ceil((b - a) / max_width - 1e-12))
    edges = np.linspace(a, b, panels + 1)
    ref_nodes, ref_weights = legendre_reference(m)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


def u0_scaled(x: ArrayLike) -> ArrayLike:
    """w(x) = exp(-x^2/4) * int_0^x exp(s^2/4) ds, via w(x) = 2 F(x/2).

    F is Dawson's integral; w solves w' = 1 - (x/2) w and is odd.
    """
    value = 2.0 * special.dawsn(0.5 * np.asarray(x, dtype=float))
    if np.ndim(value) == 0:
        return float(value)
    return value


def u0_log(x: float) -> LogReal:
    """u0(x) = int_0^x exp(s^2/4) ds in log domain."""
    w = u0_scaled(x)
    if w == 0.0:
        return LogReal.zero()
    return LogReal(sign=1 if w > 0 else -1, logmag=0.25 * x * x + math.log(abs(w)))


def _asymptotic_coefficient(j: int) -> float:
    # 2^(j+1) (2j-1)!!
    return float(2 ** (j + 1) * math.prod(range(1, 2 * j, 2)))


def u0_scaled_asymptotic(x: float, terms: int = 4) -> tuple[float, float]:
    """Truncated large-x series of w and a bound on the truncation error.

    The series is sum_j 2^(j+1) (2j-1)!! x^-(2j+1). The bound comes from
    comparing the error e = w - S against the damped equation it satisfies,
    e' + (x/2) e = c_terms x^-(2 terms) / 2, integrated from x / sqrt(2).

    Returns:
        (series value, error bound); the bound is inf where it is not valid
    """
    if x <= 0:
        raise DomainError(f"asymptotic series needs x > 0, got {x}")
    if terms < 1:
        raise ValueError("need at least one term")
    series = math.fsum(
        _asymptotic_coefficient(j) * x ** (-2 * j - 1) for j in range(terms)
    )
    power = 2 * terms + 1
    if x * x <= 4 * power or x < 2 * math.sqrt(2.0):
        return series, math.inf
    x0 = x / math.sqrt(2.0)
    seed = max(
        6.0 / x0,
        math.fsum(_asymptotic_coefficient(j) * x0 ** (-2 * j - 1) for j in range(terms)),
    )
    tail = _asymptotic_coefficient(terms) * x ** (-power) / (1.0 - 4.0 * power / (x * x))
    return series, tail + seed * math.exp(-x * x / 8.0)


def u0_bounds_margin(xs: ArrayLike) -> tuple[float, float]:
    """Minimum margins of 1 <= x w(x) and x w(x) <= 6 over the sample points."""
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 2.0):
        raise DomainError("the two-sided bound is only claimed for x >= 2")
    scaled = xs * u0_scaled(xs)
    return float(np.min(scaled - 1.0)), float(np.min(6.0 - scaled))


def signed_logsumexp_rows(signs: np.ndarray, logs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum a signed log array along its last axis."""
    signs = np.asarray(signs, dtype=float)
    logs = np.where(signs != 0, np.asarray(logs, dtype=float), -np.inf)
    peak = np.max(logs, axis=-1)
    safe_peak = np.where(np.isfinite(peak), peak, 0.0)
    total = np.sum(signs * np.exp(logs - safe_peak[..., None]), axis=-1)
    out_signs, out_logs = signed_log(total)
    return out_signs, np.where(out_signs != 0, out_logs + safe_peak, -np.inf)


def lr_relative_gap(a: LogReal, b: LogReal) -> float:
    """|a - b| / max(|a|, |b|); 0 when both are zero."""
    if a.is_zero and b.is_zero:
        return 0.0
    scale = max(a.logmag if not a.is_zero else -math.inf, b.logmag if not b.is_zero else -math.inf)
    diff = a - b
    if diff.is_zero:
        return 0.0
    return math.exp(diff.logmag - scale)
