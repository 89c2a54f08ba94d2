"""
Command-line interface for the PNP finite-volume solver.
"""

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal, NoReturn, ParamSpec, TypeVar

import click

from .config import ExperimentConfig, load_config
from .errors import ConfigurationError, PnpError
from .experiments import build_problem, run_convergence_study, run_longtime_study
from .output import (
    steady_summary,
    write_convergence,
    write_json,
    write_mesh,
    write_relative_energy,
    write_snapshot,
    write_snapshots,
    write_trace,
)
from .solver import run_transient
from .steady import solve_steady

IO_ERROR_EXIT = 5

Mode = Literal["run", "steady", "convergence", "longtime"]

# Common options for all subcommands
P = ParamSpec("P")
R = TypeVar("R")


@dataclass(frozen=True)
class RunManifest:
    """What one CLI invocation runs and where it writes."""

    config: Path
    mesh: str | None
    out: Path
    mode: Mode
    stride: int = 1
    verbose: bool = False


def common_options(func: Callable[P, R]) -> Callable[P, R]:
    """Decorator to add common options to all subcommands."""
    func = click.option("--verbose", "-v", is_flag=True, help="Enable verbose output.")(
        func
    )
    func = click.option(
        "--stride",
        "-s",
        type=int,
        default=1,
        help="Keep every k-th state; 0 keeps only the first and last. Defaults to 1.",
    )(func)
    func = click.option(
        "--out",
        "-o",
        type=click.Path(file_okay=False, path_type=Path),
        default=Path("out"),
        help="Output directory. Defaults to ./out.",
    )(func)
    func = click.option(
        "--mesh",
        "-m",
        help="Mesh source: builtin:1d:N, builtin:2d:N or an MSH 2.2 file. "
        "Defaults to the configuration's 'mesh' key.",
    )(func)
    func = click.option(
        "--config",
        "-c",
        "config_path",
        required=True,
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="JSON experiment configuration.",
    )(func)
    return func


def _fail(exc: BaseException, code: int) -> NoReturn:
    click.echo(f"Error: {exc}", err=True)
    sys.exit(code)


def _execute(manifest: RunManifest, body: Callable[[ExperimentConfig], None]) -> None:
    """Load the configuration, run ``body`` and map failures to exit codes."""
    if manifest.stride < 0:
        message = f"--stride must be nonnegative, got {manifest.stride}"
        _fail(ConfigurationError(message), 2)
    try:
        config = load_config(manifest.config, verbose=manifest.verbose)
        manifest.out.mkdir(parents=True, exist_ok=True)
        body(config)
    except PnpError as e:
        _fail(e, e.exit_code)
    except OSError as e:
        _fail(e, IO_ERROR_EXIT)
    except (ValueError, RuntimeError, KeyError) as e:
        _fail(e, 1)
    if manifest.verbose:
        click.echo(f"{manifest.mode} complete, results in {manifest.out}", err=True)


@click.group()
def main() -> None:
    """PNP finite-volume solver - transient runs, steady states and studies."""


@main.command()
@common_options
def run(
    config_path: Path, mesh: str | None, out: Path, stride: int, verbose: bool
) -> None:
    """
    March the configured time grid; writes trace.csv and snapshot_<n>.csv.
    """
    manifest = RunManifest(config_path, mesh, out, "run", stride, verbose)

    def body(config: ExperimentConfig) -> None:
        problem = build_problem(config, manifest.mesh)
        write_mesh(out / "mesh.json", problem.mesh)
        result = run_transient(problem, config.newton, stride=stride)
        write_trace(out / "trace.csv", result)
        write_snapshots(out, result)

    _execute(manifest, body)


@main.command()
@common_options
def steady(
    config_path: Path, mesh: str | None, out: Path, stride: int, verbose: bool
) -> None:
    """
    Compute the discrete steady state.

    Writes steady_snapshot.csv and steady_summary.json.
    """
    manifest = RunManifest(config_path, mesh, out, "steady", stride, verbose)

    def body(config: ExperimentConfig) -> None:
        problem = build_problem(config, manifest.mesh)
        solution = solve_steady(problem, config.steady)
        write_snapshot(out / "steady_snapshot.csv", problem, solution.state)
        write_json(out / "steady_summary.json", steady_summary(solution))

    _execute(manifest, body)


@main.command()
@common_options
def convergence(
    config_path: Path, mesh: str | None, out: Path, stride: int, verbose: bool
) -> None:
    """
    Run the refinement ladder against its reference; writes convergence.csv.

    Ladder meshes are uniform 1D meshes, so --mesh is not used.
    """
    manifest = RunManifest(config_path, mesh, out, "convergence", stride, verbose)

    def body(config: ExperimentConfig) -> None:
        if config.convergence is None:
            raise ConfigurationError(f"{config.source}: missing key 'convergence'")
        if manifest.mesh is not None:
            click.echo("Warning: --mesh is ignored by convergence", err=True)
        study = run_convergence_study(
            config.problem,
            config.convergence,
            config.newton,
            domain_length=config.domain_length,
        )
        write_convergence(out / "convergence.csv", study.rows)

    _execute(manifest, body)


@main.command()
@common_options
def longtime(
    config_path: Path, mesh: str | None, out: Path, stride: int, verbose: bool
) -> None:
    """
    Steady state, then the transient run; writes relative_energy.csv.
    """
    manifest = RunManifest(config_path, mesh, out, "longtime", stride, verbose)

    def body(config: ExperimentConfig) -> None:
        problem = build_problem(config, manifest.mesh)
        study = run_longtime_study(problem, config.newton, config.steady, stride=stride)
        write_relative_energy(out / "relative_energy.csv", study.gap)
        write_snapshot(out / "steady_snapshot.csv", problem, study.steady.state)
        write_json(out / "steady_summary.json", steady_summary(study.steady))
        write_trace(out / "trace.csv", study.run)

    _execute(manifest, body)


if __name__ == "__main__":
    main()
