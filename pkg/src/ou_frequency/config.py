"""Configuration management using Pydantic."""

import json
import math
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import AliasChoices, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ou_frequency.ladder import MAX_LEVEL
from ou_frequency.numerics import composite_gauss


class QuadratureConfig(BaseSettings):
    """Node counts for spherical, radial and circle quadrature."""

    # Sphere
    angular_density: float = Field(
        default=8.0,
        gt=0,
        description="Angular nodes per unit radius",
    )
    min_angular_nodes: int = Field(
        default=32,
        ge=8,
        description="Lower bound on angular nodes on small spheres",
    )

    # Radial shells
    radial_nodes: int = Field(
        default=16,
        ge=2,
        description="Gauss-Legendre nodes per radial panel",
    )
    max_panel_width: float = Field(
        default=1.0,
        gt=0,
        description="Upper bound on the width of a radial panel",
    )
    panel_scale: float = Field(
        default=8.0,
        gt=0,
        description="Panel width is at most panel_scale / r",
    )

    # Cylinder cross-section
    theta_nodes: int = Field(
        default=64,
        ge=8,
        description="Trapezoid nodes on the unit circle",
    )

    model_config = SettingsConfigDict(
        env_prefix="OUFREQ_QUAD_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    def scaled(self, factor: float) -> "QuadratureConfig":
        """Copy with every node count multiplied by factor."""
        return self.model_copy(
            update={
                "angular_density": self.angular_density * factor,
                "min_angular_nodes": math.ceil(self.min_angular_nodes * factor),
                "radial_nodes": math.ceil(self.radial_nodes * factor),
                "theta_nodes": math.ceil(self.theta_nodes * factor),
            }
        )

    def sphere_nodes(self, n: int, r: float) -> int:
        """Angular node parameter m for a sphere of radius r in R^n.

        For n = 2 this is the trapezoid count; for n = 3 the polar Gauss count
        (the azimuth then uses 2m nodes).
        """
        if n == 1:
            return 2
        m = max(self.min_angular_nodes, math.ceil(self.angular_density * r))
        if n == 3:
            m = max(self.min_angular_nodes // 2, math.ceil(0.75 * self.angular_density * r))
        return m

    def radial_rule(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Composite Gauss nodes and weights on [a, b]."""
        width = min(self.max_panel_width, self.panel_scale / max(abs(a), abs(b), 1e-12))
        return composite_gauss(a, b, self.radial_nodes, width)


@lru_cache(maxsize=1)
def default_quadrature() -> QuadratureConfig:
    """Process-wide default resolution (read once from the environment)."""
    return QuadratureConfig()


class Command(str, Enum):
    """CLI command a run configuration drives."""

    LADDER = "ladder"
    FREQ = "freq"
    VERIFY = "verify"
    COMPARE = "compare"
    CYLINDER = "cylinder"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class RunConfig(BaseSettings):
    """Configuration of one CLI run."""

    command: Command = Field(default=Command.FREQ, description="Command to run")

    # Field
    n: int = Field(default=1, ge=1, le=3, description="Euclidean dimension")
    levels: list[int] = Field(
        default_factory=lambda: [0],
        description="Ladder level of each product factor",
    )
    k: int = Field(
        default=0, ge=-MAX_LEVEL, le=MAX_LEVEL, description="Ladder level for the ladder command"
    )
    hermite: bool = Field(default=False, description="Use Hermite factors instead of the ladder")

    # Bounds
    eps: float = Field(default=0.1, gt=0, description="Slack epsilon in the growth bounds")
    delta: float = Field(default=0.5, gt=0, description="Crossing margin delta")
    lam: float = Field(
        default=0.0,
        validation_alias=AliasChoices("lam", "lambda"),
        description="Potential lambda for comparison suites",
    )
    big_lambda: float = Field(
        default=0.1,
        gt=0,
        lt=0.5,
        description="Budget parameter Lambda of the cylinder bound",
    )
    perturbation: float = Field(
        default=0.0,
        description="Coefficient of the x cos(theta) term added on the cylinder",
    )

    # Radius grid
    r_min: float = Field(default=2.0, gt=0, description="First grid radius")
    r_max: float = Field(default=20.0, gt=0, description="Last grid radius")
    r_step: float = Field(default=0.1, gt=0, description="Grid spacing")

    # Execution
    nodes: Optional[float] = Field(
        default=None,
        gt=0,
        description="Override for the angular node density",
    )
    suite: str = Field(default="all", description="Suite to run (or 'all')")
    seed: int = Field(default=0, description="Seed for randomized checks")
    threads: int = Field(default=1, ge=1, description="Worker threads for independent checks")

    # Output
    out: Optional[Path] = Field(default=None, description="Artifact path")
    summary: Optional[Path] = Field(default=None, description="Summary JSON path")
    format: OutputFormat = Field(default=OutputFormat.CSV, description="Artifact format")

    model_config = SettingsConfigDict(
        env_prefix="OUFREQ_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        populate_by_name=True,
    )

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if self.r_max <= self.r_min:
            raise ValueError(f"r_max ({self.r_max}) must exceed r_min ({self.r_min})")
        needs_levels = self.command in (Command.FREQ, Command.VERIFY, Command.COMPARE)
        if needs_levels and len(self.levels) != self.n:
            raise ValueError(f"levels {self.levels} must have length n = {self.n}")
        return self

    @classmethod
    def from_sources(
        cls, config_file: Optional[Path] = None, overrides: Optional[dict[str, Any]] = None
    ) -> "RunConfig":
        """Merge a JSON config file with flag values; flags win, None means unset."""
        data: dict[str, Any] = {}
        if config_file is not None:
            with open(config_file) as f:
                data.update(json.load(f))
        for key, value in (overrides or {}).items():
            if value is not None:
                data[key] = value
        return cls(**data)

    def radius_grid(self) -> np.ndarray:
        """r_min, r_min + r_step, ... up to r_max inclusive."""
        count = int(math.floor((self.r_max - self.r_min) / self.r_step + 1e-9)) + 1
        return self.r_min + self.r_step * np.arange(count)

    def quadrature(self) -> QuadratureConfig:
        base = default_quadrature()
        if self.nodes is None:
            return base
        return base.model_copy(update={"angular_density": self.nodes})
