"""Fields on R^n that the frequency quadrature can sample."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ou_frequency.errors import LadderError
from ou_frequency.ladder import (
    LadderFunction,
    eigen_residual,
    hermite_polynomial,
    ladder_build,
    ladder_differentiate,
    ladder_log_values,
)
from ou_frequency.numerics import LogReal, signed_log


@dataclass(frozen=True)
class FieldSample:
    """Signed log values and gradients of a field at N points.

    Value arrays have shape (N,), gradient arrays (N, n). Sign 0 marks an exact zero.
    """

    value_signs: np.ndarray
    value_logs: np.ndarray
    grad_signs: np.ndarray
    grad_logs: np.ndarray


class EvaluableField(ABC):
    """A function on R^n with log-domain value and gradient."""

    n: int

    @abstractmethod
    def sample(self, points: np.ndarray) -> FieldSample:
        """Evaluate value and gradient at points of shape (N, n)."""

    def potential(self, points: np.ndarray) -> Optional[np.ndarray]:
        """V at the points, or None when the field declares no potential."""
        return None

    def potential_gradient(self, points: np.ndarray) -> np.ndarray:
        """Gradient of V; zero unless overridden."""
        return np.zeros_like(np.asarray(points, dtype=float))

    @property
    def declares_potential(self) -> bool:
        return False

    @property
    def eigenvalue(self) -> Optional[float]:
        """lambda with L u = -lambda u, if the field is an eigenfunction."""
        return None

    def value(self, point: Sequence[float]) -> LogReal:
        """u at a single point."""
        sample = self.sample(np.asarray(point, dtype=float).reshape(1, self.n))
        return _to_logreal(sample.value_signs[0], sample.value_logs[0])

    def gradient(self, point: Sequence[float]) -> list[LogReal]:
        """grad u at a single point."""
        sample = self.sample(np.asarray(point, dtype=float).reshape(1, self.n))
        return [
            _to_logreal(sample.grad_signs[0, i], sample.grad_logs[0, i]) for i in range(self.n)
        ]


def _to_logreal(sign: float, logmag: float) -> LogReal:
    if sign == 0:
        return LogReal.zero()
    return LogReal(sign=int(sign), logmag=float(logmag))


class ProductEigenfunction(EvaluableField):
    """coefficient * F_1(x_1) ... F_n(x_n) for one-dimensional eigenfunctions F_i.

    With F_i at level k_i the product solves L v = -lambda v, lambda = sum(k_i)/2,
    so its potential is the constant lambda.
    """

    def __init__(self, factors: Sequence[LadderFunction], coefficient: float = 1.0):
        if not factors:
            raise ValueError("a product needs at least one factor")
        for factor in factors:
            if factor.k is None:
                raise ValueError("every factor must carry an eigenlevel")
            if any(not part.is_zero for part in eigen_residual(factor)):
                raise LadderError(f"factor at level {factor.k} is not an eigenfunction")
        if coefficient == 0.0:
            raise ValueError("coefficient must be nonzero")
        self.factors = tuple(factors)
        self.derivatives = tuple(ladder_differentiate(f) for f in factors)
        self.coefficient = float(coefficient)
        self.n = len(factors)
        self.levels = tuple(int(f.k) for f in factors)  # type: ignore[arg-type]

    @classmethod
    def from_levels(cls, levels: Sequence[int], coefficient: float = 1.0) -> "ProductEigenfunction":
        """u_(k_1)(x_1) ... u_(k_n)(x_n) from the ladder."""
        return cls([ladder_build(k) for k in levels], coefficient)

    @classmethod
    def hermite(cls, levels: Sequence[int], coefficient: float = 1.0) -> "ProductEigenfunction":
        """h_(k_1)(x_1) ... h_(k_n)(x_n)."""
        return cls([hermite_polynomial(k).as_ladder() for k in levels], coefficient)

    def __repr__(self) -> str:
        return f"ProductEigenfunction(levels={list(self.levels)}, coefficient={self.coefficient})"

    @property
    def declares_potential(self) -> bool:
        return True

    @property
    def eigenvalue(self) -> float:
        return 0.5 * sum(self.levels)

    def potential(self, points: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(points).shape[0], self.eigenvalue)

    def sample(self, points: np.ndarray) -> FieldSample:
        points = np.asarray(points, dtype=float)
        count = points.shape[0]
        c_sign, c_log = signed_log(self.coefficient)
        val_s = np.empty((count, self.n))
        val_l = np.empty((count, self.n))
        der_s = np.empty((count, self.n))
        der_l = np.empty((count, self.n))
        for i, (factor, deriv) in enumerate(zip(self.factors, self.derivatives)):
            val_s[:, i], val_l[:, i] = ladder_log_values(factor, points[:, i])
            der_s[:, i], der_l[:, i] = ladder_log_values(deriv, points[:, i])

        value_signs = c_sign * np.prod(val_s, axis=1)
        with np.errstate(invalid="ignore"):
            value_logs = c_log + np.sum(val_l, axis=1)
            grad_signs = np.empty((count, self.n))
            grad_logs = np.empty((count, self.n))
            for i in range(self.n):
                others = [j for j in range(self.n) if j != i]
                grad_signs[:, i] = c_sign * der_s[:, i] * np.prod(val_s[:, others], axis=1)
                grad_logs[:, i] = c_log + der_l[:, i] + np.sum(val_l[:, others], axis=1)
        value_logs = np.where(value_signs != 0, value_logs, -np.inf)
        grad_logs = np.where(grad_signs != 0, grad_logs, -np.inf)
        return FieldSample(value_signs, value_logs, grad_signs, grad_logs)


class RadialPowerField(EvaluableField):
    """u(x) = |x|^d; no potential is declared."""

    def __init__(self, n: int, d: float):
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")
        self.n = n
        self.d = float(d)

    def sample(self, points: np.ndarray) -> FieldSample:
        points = np.asarray(points, dtype=float)
        radius = np.linalg.norm(points, axis=1)
        log_r = np.log(radius)
        value_signs = np.ones(points.shape[0])
        value_logs = self.d * log_r
        # d |x|^(d-2) x_i
        c_sign, c_log = signed_log(self.d)
        x_signs, x_logs = signed_log(points)
        grad_signs = c_sign * x_signs
        grad_logs = np.where(
            grad_signs != 0, c_log + (self.d - 2.0) * log_r[:, None] + x_logs, -np.inf
        )
        return FieldSample(value_signs, value_logs, grad_signs, grad_logs)
