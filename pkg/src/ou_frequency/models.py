"""Result models shared by the verification suites."""

import math
from enum import Enum
from typing import Any, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator


class CheckStatus(str, Enum):
    """Outcome of a verification check."""

    PASSED = "PASSED"
    FAILED = "FAILED"
    INCONCLUSIVE = "INCONCLUSIVE"
    EXEMPT = "EXEMPT"

    @property
    def ok(self) -> bool:
        return self in (CheckStatus.PASSED, CheckStatus.EXEMPT)


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(item) for item in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    return obj


class CheckReport(BaseModel):
    """A single verification result."""

    name: str
    status: CheckStatus
    margin: Optional[float] = Field(
        default=None, description="Smallest slack observed (negative means violated)"
    )
    radius: Optional[float] = Field(
        default=None, description="Measured radius after which the claim holds"
    )
    message: str = ""
    details: dict[str, Any] = Field(default_factory=dict)

    model_config = {"frozen": True}

    @property
    def passed(self) -> bool:
        return self.status.ok

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-safe dictionary (non-finite floats become strings)."""
        return _json_safe(self.model_dump())


class _Columns(BaseModel):
    """Equal-length float columns with a CSV export."""

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _equal_lengths(self) -> "_Columns":
        lengths = {len(v) for v in self.model_dump().values() if isinstance(v, list)}
        if len(lengths) > 1:
            raise ValueError(f"columns differ in length: {sorted(lengths)}")
        return self

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({name: getattr(self, name) for name in type(self).model_fields})

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)


class FrequencyCurve(_Columns):
    """Sampled r -> (log I, log|D|, U, U', W, margin)."""

    r: list[float]
    logI: list[float]
    logD: list[float]
    U: list[float]
    Uprime: list[float]
    W: list[float]
    margin: list[float]


class Trajectory(_Columns):
    """A positive function of r with its derivative and P-operator value."""

    r: list[float]
    h: list[float]
    hprime: list[float]
    Pvalue: list[float]

    @model_validator(mode="after")
    def _positive(self) -> "Trajectory":
        if any(not value > 0 for value in self.h):
            raise ValueError("trajectory values must be positive")
        return self


class CylinderCurve(_Columns):
    """Frequency curve of a function on the cylinder, with E and U_E."""

    r: list[float]
    logI: list[float]
    logD: list[float]
    U: list[float]
    Uprime: list[float]
    W: list[float]
    margin: list[float]
    E_log: list[float]
    UE: list[float]
