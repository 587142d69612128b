"""Exceptions raised by the verification toolkit."""

from typing import Optional


class OUFrequencyError(Exception):
    """Base class for all toolkit errors."""


class DomainError(OUFrequencyError, ValueError):
    """An argument lies outside the domain of an operation."""


class QuadratureError(OUFrequencyError):
    """A quadrature rule or a quadrature result is unusable."""


class LadderError(OUFrequencyError):
    """Exact ladder construction produced an inconsistent function."""


class LadderCapacityError(LadderError):
    """Requested ladder level is beyond the supported range."""


class ContractViolation(OUFrequencyError):
    """A field lacks a declaration the operation depends on."""


class PreconditionError(OUFrequencyError, ValueError):
    """A documented precondition of a check does not hold."""


class ParameterError(OUFrequencyError, ValueError):
    """Parameters admit no admissible barrier."""


class HypothesisViolation(OUFrequencyError):
    """The drift derivative fell below r/2 at a queried radius."""


class NodalSphereError(OUFrequencyError):
    """I(r) vanished, so the frequency is undefined at this radius."""

    def __init__(self, radius: float):
        self.radius = radius
        super().__init__(f"I(r) = 0 on the sphere of radius {radius:.17g}")


class TrajectoryCollapse(OUFrequencyError):
    """An integrated trajectory reached h = 0."""

    def __init__(self, radius: float):
        self.radius = radius
        super().__init__(f"trajectory reached h = 0 at r = {radius:.17g}")


class CertificationError(OUFrequencyError):
    """A pointwise inequality failed on the sample grid."""

    def __init__(self, what: str, point: object, value: Optional[float] = None):
        self.what = what
        self.point = point
        self.value = value
        detail = "" if value is None else f" (value {value:.6g})"
        super().__init__(f"{what} fails at {point}{detail}")
