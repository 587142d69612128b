"""Verification campaigns: the suites behind each CLI command."""

import math
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd
from loguru import logger
from rich.console import Console
from rich.table import Table

from ou_frequency.check_log import CheckLog, write_csv, write_json
from ou_frequency.comparison import (
    FreqOpParams,
    barrier_trajectory,
    certify_supersolution,
    chooseg_r1,
    integrate_extremal,
    verify_dominance,
    verify_max_principle_sweep,
    verify_positive_lambda,
    verify_subsolution,
)
from ou_frequency.config import Command, OutputFormat, RunConfig
from ou_frequency.cylinder import (
    CylinderFunction,
    check_diffineq,
    compute_E_UE,
    compute_E_UE_tensor,
    covering_budget,
    cylinder_curve,
    fit_goal_constant,
    verify_goal,
)
from ou_frequency.errors import OUFrequencyError
from ou_frequency.fields import ProductEigenfunction
from ou_frequency.frequency import (
    BoundKind,
    check_cauchy_schwarz,
    check_derivative_identities,
    check_divergence,
    check_quadrature_convergence,
    check_rellich,
    compute_curve,
)
from ou_frequency.growth import (
    check_uprime_lower_bound,
    monotonicity_check,
    verify_growth,
    verify_sharpness,
    verify_uprime,
)
from ou_frequency.ladder import (
    check_parity,
    eigen_residual,
    growth_certificate,
    ladder_build,
)
from ou_frequency.models import CheckReport, CheckStatus
from ou_frequency.numerics import lr_relative_gap

Suite = Callable[[], list[CheckReport]]


class CampaignResult:
    """Reports of one campaign and its data artifact."""

    def __init__(self, command: Command, log: CheckLog, artifact: Optional[Any]):
        self.command = command
        self.log = log
        self.artifact = artifact

    @property
    def passed(self) -> bool:
        return self.log.all_passed

    def summary(self) -> dict[str, Any]:
        return self.log.summary()

    def write_artifact(self, path: Path, fmt: OutputFormat) -> None:
        """Write the data artifact (ladder JSON or a curve as CSV/JSON)."""
        if isinstance(self.artifact, pd.DataFrame):
            if fmt == OutputFormat.JSON:
                write_json(path, self.artifact.to_dict(orient="list"))
            else:
                write_csv(path, self.artifact)
        elif self.artifact is not None:
            write_json(path, self.artifact)

    def print_summary(self, console: Optional[Console] = None) -> None:
        """Print a table of the checks."""
        console = console or Console()
        table = Table(title=f"{self.command.value} checks")
        table.add_column("Check")
        table.add_column("Status")
        table.add_column("Margin", justify="right")
        table.add_column("Radius", justify="right")
        table.add_column("Message")
        colors = {
            CheckStatus.PASSED: "green",
            CheckStatus.EXEMPT: "cyan",
            CheckStatus.INCONCLUSIVE: "yellow",
            CheckStatus.FAILED: "red",
        }
        for report in self.log.reports:
            color = colors[report.status]
            table.add_row(
                report.name,
                f"[{color}]{report.status.value}[/{color}]",
                "" if report.margin is None else f"{report.margin:.4g}",
                "" if report.radius is None else f"{report.radius:.4g}",
                report.message,
            )
        console.print(table)
        verdict = "[green]PASS[/green]" if self.passed else "[red]FAIL[/red]"
        console.print(f"{verdict} ({len(self.log.failing())} failing)\n")


class Campaign:
    """Builds the objects a run configuration names and runs its suites."""

    def __init__(self, config: RunConfig):
        """Initialize campaign.

        Args:
            config: Run configuration
        """
        self.config = config
        self.quad = config.quadrature()
        self.radii = config.radius_grid()

    # Shared objects

    @cached_property
    def field(self) -> ProductEigenfunction:
        if self.config.hermite:
            return ProductEigenfunction.hermite(self.config.levels)
        return ProductEigenfunction.from_levels(self.config.levels)

    @cached_property
    def curve(self):
        return compute_curve(
            self.field, self.radii, BoundKind.GROWTH, self.config.eps, self.quad, self.config.threads
        )

    @cached_property
    def cylinder_field(self) -> CylinderFunction:
        v = CylinderFunction.single(self.config.levels[0], hermite=self.config.hermite)
        if self.config.perturbation:
            v = v.plus(1, m=1, coefficient=self.config.perturbation, hermite=True)
        return v

    def _sample_radii(self, count: int) -> list[float]:
        r = self.radii
        return np.linspace(r[0], r[-1], count).tolist()

    # Suites

    def suites(self) -> dict[str, Suite]:
        """Suites of the configured command, in declaration order."""
        table: dict[Command, dict[str, Suite]] = {
            Command.LADDER: {"ladder": self._ladder_suite},
            Command.FREQ: {"curve": self._curve_suite},
            Command.VERIFY: {
                "growth": self._growth_suite,
                "sharpness": self._sharpness_suite,
                "uprime": self._uprime_suite,
                "monotonicity": self._monotonicity_suite,
                "identities": self._identities_suite,
            },
            Command.COMPARE: {
                "barrier": self._barrier_suite,
                "max_principle": self._max_principle_suite,
                "subsolution": self._subsolution_suite,
            },
            Command.CYLINDER: {
                "paths": self._cylinder_paths_suite,
                "diffineq": self._diffineq_suite,
                "goal": self._goal_suite,
            },
        }
        suites = table[self.config.command]
        if self.config.suite == "all":
            return suites
        if self.config.suite not in suites:
            raise ValueError(
                f"unknown suite {self.config.suite!r} for {self.config.command.value}; "
                f"choose from {sorted(suites)}"
            )
        return {self.config.suite: suites[self.config.suite]}

    def _ladder_suite(self) -> list[CheckReport]:
        F = ladder_build(self.config.k)
        residual_zero = all(part.is_zero for part in eigen_residual(F))
        certificate = growth_certificate(F)
        return [
            CheckReport(
                name="eigen_residual",
                status=CheckStatus.PASSED if residual_zero else CheckStatus.FAILED,
                message=f"L u + (k/2) u = 0 exactly for k={F.k}",
            ),
            CheckReport(
                name="parity",
                status=CheckStatus.PASSED if check_parity(F) else CheckStatus.FAILED,
                message=f"coefficient parity for k={F.k}",
            ),
            CheckReport(
                name="growth_certificate",
                status=CheckStatus.PASSED,
                message=f"c_k = {certificate.c_k:.6g}",
                details=certificate.model_dump(),
            ),
        ]

    def _curve_suite(self) -> list[CheckReport]:
        return [check_derivative_identities(self.curve)]

    def _growth_suite(self) -> list[CheckReport]:
        return [
            verify_growth(
                self.field,
                self.config.eps,
                self.config.delta,
                float(self.radii[-1]),
                float(self.radii[0]),
                self.config.r_step,
                self.quad,
                curve=self.curve,
            )
        ]

    def _sharpness_suite(self) -> list[CheckReport]:
        r_max = float(self.radii[-1])
        radii = np.linspace(max(float(self.radii[0]), 0.5 * r_max), r_max, 6)
        return [verify_sharpness(self.config.levels[0], self.config.n, self.config.eps, radii, self.quad)]

    def _uprime_suite(self) -> list[CheckReport]:
        report = verify_uprime(self.field, self.radii, self.quad, max_workers=self.config.threads)
        return [report, check_uprime_lower_bound(self.field, self.curve, quad=self.quad)]

    def _monotonicity_suite(self) -> list[CheckReport]:
        if self.field.eigenvalue != 0:
            return [
                CheckReport(
                    name="monotonicity",
                    status=CheckStatus.EXEMPT,
                    message=f"not drift harmonic (lambda = {self.field.eigenvalue:g})",
                )
            ]
        return [monotonicity_check(self.field, self.radii, quad=self.quad)]

    def _identities_suite(self) -> list[CheckReport]:
        radii = self._sample_radii(4)
        return [
            check_divergence(self.field, radii, quad=self.quad),
            *check_rellich(self.field, radii, quad=self.quad),
            check_cauchy_schwarz(self.field, radii, quad=self.quad),
            check_quadrature_convergence(self.field, radii, quad=self.quad),
        ]

    def _barrier_suite(self) -> list[CheckReport]:
        cfg = self.config
        choice = chooseg_r1(cfg.n, cfg.eps, cfg.lam)
        params = FreqOpParams(n=cfg.n, lam=cfg.lam)
        r_end = max(float(self.radii[-1]), 2.0 * choice.r1)
        count = int(math.floor((r_end - choice.r1) / cfg.r_step)) + 1
        grid = choice.r1 + cfg.r_step * np.arange(count)
        g = barrier_trajectory(cfg.n, cfg.eps, cfg.lam, grid, params)
        values = certify_supersolution(g, params, 0.5 * cfg.eps)
        slack = float(np.min(-0.5 * cfg.eps / grid - values))
        return [
            CheckReport(
                name="barrier",
                status=CheckStatus.PASSED,
                margin=slack,
                radius=choice.r1,
                message=f"P g <= -eps/(2r) from r1={choice.r1:.12g}",
                details=choice.model_dump(),
            )
        ]

    def _max_principle_suite(self) -> list[CheckReport]:
        cfg = self.config
        if cfg.lam <= 0:
            return [
                verify_max_principle_sweep(
                    cfg.n, cfg.eps, cfg.lam, seed=cfg.seed, r_max=max(30.0, float(self.radii[-1]))
                )
            ]
        params = FreqOpParams(n=cfg.n, lam=cfg.lam)
        h = integrate_extremal(
            params,
            float(self.radii[0]),
            2.0 * cfg.lam + cfg.delta + 1.0,
            float(self.radii[-1]),
            r_eval=self.radii,
        )
        return [verify_positive_lambda(h, params, cfg.delta, cfg.eps)]

    def _subsolution_suite(self) -> list[CheckReport]:
        lam = self.field.eigenvalue
        return [
            verify_subsolution(self.curve, self.config.n, lam),
            verify_dominance(self.curve, self.config.n, lam),
        ]

    def _cylinder_paths_suite(self) -> list[CheckReport]:
        radii = self._sample_radii(3)
        gaps = []
        for r in radii:
            mode = compute_E_UE(self.cylinder_field, r, self.quad)
            tensor = compute_E_UE_tensor(self.cylinder_field, r, self.quad)
            gaps.append(max(lr_relative_gap(mode.E, tensor.E), lr_relative_gap(mode.I, tensor.I)))
        worst = int(np.argmax(gaps))
        tol = 1e-9
        return [
            CheckReport(
                name="cylinder_paths",
                status=CheckStatus.PASSED if gaps[worst] <= tol else CheckStatus.FAILED,
                margin=tol - gaps[worst],
                radius=radii[worst],
                message=f"mode-summed vs tensor quadrature, worst gap {gaps[worst]:.3g}",
            )
        ]

    def _diffineq_suite(self) -> list[CheckReport]:
        return [check_diffineq(self.cylinder_field, self.radii, quad=self.quad)]

    def _goal_suite(self) -> list[CheckReport]:
        cfg = self.config
        R = float(self.radii[-1])
        base = CylinderFunction.single(cfg.levels[0], hermite=cfg.hermite)
        C_hat = fit_goal_constant([base], cfg.eps, cfg.big_lambda, [0.8 * R, R, 1.2 * R], self.quad)
        budget = covering_budget(self.cylinder_field, cfg.eps, R, self.quad)
        return [
            verify_goal(
                self.cylinder_field,
                budget.norm_sq.to_float(),
                cfg.eps,
                cfg.big_lambda,
                R,
                C_hat,
                self.quad,
            )
        ]

    # Artifacts

    def artifact(self) -> Optional[Any]:
        command = self.config.command
        if command == Command.LADDER:
            return ladder_build(self.config.k).to_json_dict()
        if command in (Command.FREQ, Command.VERIFY):
            return self.curve.to_dataframe()
        if command == Command.COMPARE:
            cfg = self.config
            choice = chooseg_r1(cfg.n, cfg.eps, cfg.lam)
            grid = self.radii[self.radii >= choice.r1]
            if grid.size < 2:
                return None
            return barrier_trajectory(cfg.n, cfg.eps, cfg.lam, grid).to_dataframe()
        return cylinder_curve(self.cylinder_field, self.radii, self.quad).to_dataframe()

    def _run_suite(self, name: str, suite: Suite) -> list[CheckReport]:
        logger.info(f"suite {name}: start")
        try:
            reports = suite()
        except OUFrequencyError as e:
            logger.error(f"suite {name}: {e}")
            reports = [
                CheckReport(
                    name=name,
                    status=CheckStatus.FAILED,
                    message=f"{type(e).__name__}: {e}",
                )
            ]
        for report in reports:
            logger.debug(f"{report.name}: {report.status.value} {report.message}")
        return reports

    def _warm_shared(self) -> None:
        """Build the cached field and curve before suites share them across threads."""
        try:
            if self.config.command == Command.CYLINDER:
                self.cylinder_field
            elif self.config.command in (Command.FREQ, Command.VERIFY, Command.COMPARE):
                self.curve
        except OUFrequencyError as e:
            logger.debug(f"shared objects not built up front: {e}")

    def run(self) -> CampaignResult:
        """Run the selected suites and gather reports in declaration order.

        Returns:
            Campaign result
        """
        suites = self.suites()
        log = CheckLog(self.config.command.value, self.config.summary)
        logger.info(f"running {len(suites)} suite(s) for {self.config.command.value}")
        if self.config.threads > 1 and len(suites) > 1:
            self._warm_shared()
            with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                results = list(pool.map(lambda item: self._run_suite(*item), suites.items()))
        else:
            results = [self._run_suite(name, suite) for name, suite in suites.items()]
        for reports in results:
            log.extend(reports)
        return CampaignResult(self.config.command, log, self.artifact())
