"""Command-line interface for building eigenfunctions and running verification campaigns."""

from pathlib import Path
from typing import Any, Optional

import typer
from loguru import logger
from pydantic import ValidationError
from rich.console import Console

from ou_frequency import __version__
from ou_frequency.campaign import Campaign
from ou_frequency.config import Command, OutputFormat, RunConfig

app = typer.Typer(
    name="ou-frequency",
    help="Frequency functions of drift eigenfunctions: exact construction and numerical checks",
)
console = Console()

USAGE_ERROR = 2


def _setup_logging(verbose: bool) -> None:
    logger.remove()
    logger.add(
        lambda msg: console.print(msg, end=""),
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}",
        level="DEBUG" if verbose else "WARNING",
    )


def _parse_levels(levels: Optional[str]) -> Optional[list[int]]:
    if levels is None:
        return None
    try:
        return [int(item) for item in levels.split(",") if item.strip()]
    except ValueError:
        console.print(f"[red]--levels must be comma-separated integers, got {levels!r}[/red]")
        raise typer.Exit(USAGE_ERROR)


def _run(command: Command, config_file: Optional[Path], verbose: bool, overrides: dict[str, Any]) -> None:
    """Build the config, run the campaign, write artifacts and exit with its verdict."""
    _setup_logging(verbose)
    overrides["command"] = command
    try:
        config = RunConfig.from_sources(config_file, overrides)
        campaign = Campaign(config)
        suites = campaign.suites()
    except (ValidationError, ValueError, OSError) as e:
        console.print(f"[red]Invalid configuration: {e}[/red]")
        raise typer.Exit(USAGE_ERROR)

    logger.info(f"{command.value}: suites {', '.join(suites)}")
    try:
        with console.status(f"[bold green]Running {command.value}..."):
            result = campaign.run()
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        raise typer.Exit(1)
    except Exception as e:
        console.print(f"\n[red]Error during {command.value}: {e}[/red]")
        if verbose:
            raise
        raise typer.Exit(1)

    result.print_summary(console)
    if config.out is not None:
        result.write_artifact(config.out, config.format)
        console.print(f"[green]✓[/green] Artifact saved to {config.out}")
    elif command == Command.LADDER:
        console.print_json(data=result.artifact)
    if config.summary is not None:
        result.log.save()
        console.print(f"[green]✓[/green] Summary saved to {config.summary}")

    if not result.passed:
        for report in result.log.failing():
            console.print(f"[red]✗ {report.name}: {report.status.value} {report.message}[/red]")
        raise typer.Exit(1)


# Options shared by every command
ConfigOpt = typer.Option(None, "--config", help="JSON config file (flags override it)")
VerboseOpt = typer.Option(False, "--verbose", "-v", help="Enable verbose logging")
ThreadsOpt = typer.Option(None, "--threads", help="Worker threads for independent suites")
OutOpt = typer.Option(None, "--out", "-o", help="Artifact path")
SummaryOpt = typer.Option(None, "--summary", help="Summary JSON path")
FormatOpt = typer.Option(None, "--format", help="Curve artifact format (csv or json)")
SuiteOpt = typer.Option(None, "--suite", help="Suite to run (default: all)")


@app.command()
def ladder(
    k: Optional[int] = typer.Option(None, "--k", help="Ladder level (|k| <= 64)"),
    out: Optional[Path] = OutOpt,
    summary: Optional[Path] = SummaryOpt,
    config_file: Optional[Path] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """Build u_k exactly and emit its coefficients as JSON."""
    _run(Command.LADDER, config_file, verbose, {"k": k, "out": out, "summary": summary})


@app.command()
def freq(
    n: Optional[int] = typer.Option(None, "--n", help="Euclidean dimension (1-3)"),
    levels: Optional[str] = typer.Option(None, "--levels", help="Comma-separated ladder levels"),
    hermite: Optional[bool] = typer.Option(None, "--hermite", help="Hermite factors"),
    r_min: Optional[float] = typer.Option(None, "--r-min", help="First radius"),
    r_max: Optional[float] = typer.Option(None, "--r-max", help="Last radius"),
    r_step: Optional[float] = typer.Option(None, "--r-step", help="Grid spacing"),
    nodes: Optional[float] = typer.Option(None, "--nodes", help="Angular nodes per unit radius"),
    out: Optional[Path] = OutOpt,
    fmt: Optional[OutputFormat] = FormatOpt,
    summary: Optional[Path] = SummaryOpt,
    config_file: Optional[Path] = ConfigOpt,
    threads: Optional[int] = ThreadsOpt,
    verbose: bool = VerboseOpt,
):
    """Sample the frequency curve of a product eigenfunction."""
    _run(
        Command.FREQ,
        config_file,
        verbose,
        {
            "n": n,
            "levels": _parse_levels(levels),
            "hermite": hermite,
            "r_min": r_min,
            "r_max": r_max,
            "r_step": r_step,
            "nodes": nodes,
            "out": out,
            "format": fmt,
            "summary": summary,
            "threads": threads,
        },
    )


@app.command()
def verify(
    n: Optional[int] = typer.Option(None, "--n", help="Euclidean dimension (1-3)"),
    levels: Optional[str] = typer.Option(None, "--levels", help="Comma-separated ladder levels"),
    hermite: Optional[bool] = typer.Option(None, "--hermite", help="Hermite factors"),
    eps: Optional[float] = typer.Option(None, "--eps", help="Slack of the growth bound"),
    delta: Optional[float] = typer.Option(None, "--delta", help="Crossing margin"),
    r_min: Optional[float] = typer.Option(None, "--r-min", help="First radius"),
    r_max: Optional[float] = typer.Option(None, "--r-max", help="Last radius"),
    r_step: Optional[float] = typer.Option(None, "--r-step", help="Grid spacing"),
    nodes: Optional[float] = typer.Option(None, "--nodes", help="Angular nodes per unit radius"),
    suite: Optional[str] = SuiteOpt,
    out: Optional[Path] = OutOpt,
    fmt: Optional[OutputFormat] = FormatOpt,
    summary: Optional[Path] = SummaryOpt,
    config_file: Optional[Path] = ConfigOpt,
    threads: Optional[int] = ThreadsOpt,
    verbose: bool = VerboseOpt,
):
    """Run the growth, sharpness, U' and monotonicity suites."""
    _run(
        Command.VERIFY,
        config_file,
        verbose,
        {
            "n": n,
            "levels": _parse_levels(levels),
            "hermite": hermite,
            "eps": eps,
            "delta": delta,
            "r_min": r_min,
            "r_max": r_max,
            "r_step": r_step,
            "nodes": nodes,
            "suite": suite,
            "out": out,
            "format": fmt,
            "summary": summary,
            "threads": threads,
        },
    )


@app.command()
def compare(
    n: Optional[int] = typer.Option(None, "--n", help="Euclidean dimension (1-3)"),
    levels: Optional[str] = typer.Option(None, "--levels", help="Comma-separated ladder levels"),
    eps: Optional[float] = typer.Option(None, "--eps", help="Barrier slack"),
    delta: Optional[float] = typer.Option(None, "--delta", help="Escape margin for lambda > 0"),
    lam: Optional[float] = typer.Option(None, "--lambda", help="Potential lambda"),
    r_min: Optional[float] = typer.Option(None, "--r-min", help="First radius"),
    r_max: Optional[float] = typer.Option(None, "--r-max", help="Last radius"),
    r_step: Optional[float] = typer.Option(None, "--r-step", help="Grid spacing"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed of the randomized sweep"),
    suite: Optional[str] = SuiteOpt,
    out: Optional[Path] = OutOpt,
    fmt: Optional[OutputFormat] = FormatOpt,
    summary: Optional[Path] = SummaryOpt,
    config_file: Optional[Path] = ConfigOpt,
    threads: Optional[int] = ThreadsOpt,
    verbose: bool = VerboseOpt,
):
    """Run the P-operator barrier and maximum principle suites."""
    _run(
        Command.COMPARE,
        config_file,
        verbose,
        {
            "n": n,
            "levels": _parse_levels(levels),
            "eps": eps,
            "delta": delta,
            "lam": lam,
            "r_min": r_min,
            "r_max": r_max,
            "r_step": r_step,
            "seed": seed,
            "suite": suite,
            "out": out,
            "format": fmt,
            "summary": summary,
            "threads": threads,
        },
    )


@app.command()
def cylinder(
    levels: Optional[str] = typer.Option(None, "--levels", help="Ladder level of the m = 0 profile"),
    hermite: Optional[bool] = typer.Option(None, "--hermite", help="Hermite profile"),
    perturbation: Optional[float] = typer.Option(
        None, "--perturbation", help="Coefficient of x cos(theta)"
    ),
    eps: Optional[float] = typer.Option(None, "--eps", help="Slack of condition (1), below 1/2"),
    big_lambda: Optional[float] = typer.Option(None, "--big-lambda", help="Budget Lambda in (0, 1/2)"),
    r_min: Optional[float] = typer.Option(None, "--r-min", help="First radius"),
    r_max: Optional[float] = typer.Option(None, "--r-max", help="Last radius (goal radius R)"),
    r_step: Optional[float] = typer.Option(None, "--r-step", help="Grid spacing"),
    suite: Optional[str] = SuiteOpt,
    out: Optional[Path] = OutOpt,
    fmt: Optional[OutputFormat] = FormatOpt,
    summary: Optional[Path] = SummaryOpt,
    config_file: Optional[Path] = ConfigOpt,
    threads: Optional[int] = ThreadsOpt,
    verbose: bool = VerboseOpt,
):
    """Run the modified frequency suites on S^1 x R."""
    _run(
        Command.CYLINDER,
        config_file,
        verbose,
        {
            "levels": _parse_levels(levels),
            "hermite": hermite,
            "perturbation": perturbation,
            "eps": eps,
            "big_lambda": big_lambda,
            "r_min": r_min,
            "r_max": r_max,
            "r_step": r_step,
            "suite": suite,
            "out": out,
            "format": fmt,
            "summary": summary,
            "threads": threads,
        },
    )


@app.command()
def version():
    """Show version information."""
    console.print(f"ou-frequency version {__version__}")


if __name__ == "__main__":
    app()
