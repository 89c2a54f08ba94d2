"""
Experiment orchestration: transient runs, steady states, convergence studies
and long-time studies built from a configuration.
"""

import logging
import math
from dataclasses import dataclass
from typing import Final

import numpy as np
from numpy.typing import NDArray

from .assembly import State
from .config import ConvergenceSettings, ExperimentConfig
from .diagnostics import project_to_coarse, spacetime_l1
from .errors import ConfigurationError, IncompatibilityError
from .mesh import AdmissibleMesh, build_interval_mesh, load_mesh
from .problem import DiscreteProblem, ProblemSpec, discretize
from .solver import NewtonOptions, TimeLoopResult, run_transient
from .steady import (
    LongTimeGap,
    SteadyOptions,
    SteadySolution,
    long_time_gap,
    solve_steady,
)

LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


def build_problem(
    config: ExperimentConfig, mesh_source: str | None = None
) -> DiscreteProblem:
    """Discretize the configured problem on ``mesh_source`` (or the config's mesh)."""
    source = mesh_source or config.mesh
    if source is None:
        raise ConfigurationError(
            f"{config.source}: no mesh given (use --mesh or key 'mesh')"
        )
    mesh = load_mesh(source, domain_length=config.domain_length)
    return discretize(config.problem, mesh)


@dataclass(frozen=True)
class ConvergenceRow:
    n_cells: int
    error: float
    observed_order: float | None


@dataclass(frozen=True, eq=False)
class ConvergenceStudy:
    """Errors of every ladder run against the reference run."""

    rows: tuple[ConvergenceRow, ...]
    reference_cells: int
    runs: dict[int, TimeLoopResult]


def validate_ladder(settings: ConvergenceSettings) -> None:
    ladder = settings.ladder
    if any(n < 2 for n in ladder):
        raise IncompatibilityError("ladder meshes need at least 2 cells")
    if list(ladder) != sorted(set(ladder)):
        raise IncompatibilityError(
            f"ladder must be strictly increasing, got {list(ladder)}"
        )
    if settings.reference <= ladder[-1]:
        raise IncompatibilityError(
            f"reference ({settings.reference} cells) must be finer than the finest "
            f"ladder entry ({ladder[-1]} cells)"
        )
    coarse = [n for n in ladder if settings.reference % n]
    if coarse:
        raise IncompatibilityError(
            f"ladder entries {coarse} do not divide the reference {settings.reference}"
        )


class _ProjectedReference:
    """Observer storing the reference run projected onto each ladder mesh."""

    def __init__(self, fine: AdmissibleMesh, ladder: dict[int, AdmissibleMesh]) -> None:
        self.fine = fine
        self.ladder = ladder
        self.series: dict[int, list[FloatArray]] = {n: [] for n in ladder}
        self.fine_series: list[FloatArray] = []

    def __call__(self, step: int, time: float, state: State) -> None:
        del time
        if step == 0:
            return
        self.fine_series.append(np.abs(state.fractions) @ self.fine.cell_measures)
        for n, mesh in self.ladder.items():
            self.series[n].append(project_to_coarse(state.fractions, self.fine, mesh))


def run_convergence_study(
    spec: ProblemSpec,
    settings: ConvergenceSettings,
    newton: NewtonOptions,
    *,
    domain_length: float = 1.0,
) -> ConvergenceStudy:
    """Relative space-time L1 errors of a ladder of uniform 1D meshes.

    The reference run is projected onto every ladder mesh as it advances, so
    only the ladder runs keep their full history.
    """
    validate_ladder(settings)
    meshes = {n: build_interval_mesh(domain_length, n) for n in settings.ladder}
    reference = discretize(spec, build_interval_mesh(domain_length, settings.reference))
    observer = _ProjectedReference(reference.mesh, meshes)
    LOGGER.info("Reference run on %d cells", settings.reference)
    run_transient(reference, newton, stride=0, observer=observer)
    taus = reference.time_grid.taus
    norm = float(np.dot(taus, [row.sum() for row in observer.fine_series]))

    runs: dict[int, TimeLoopResult] = {}
    rows: list[ConvergenceRow] = []
    for n in settings.ladder:
        LOGGER.info("Ladder run on %d cells", n)
        run = run_transient(discretize(spec, meshes[n]), newton, stride=1)
        runs[n] = run
        differences = [
            state.fractions - projected
            for state, projected in zip(run.step_states(), observer.series[n])
        ]
        error = spacetime_l1(differences, taus, run.problem.mesh.cell_measures) / norm
        order = None
        if rows:
            previous = rows[-1]
            order = math.log(previous.error / error) / math.log(n / previous.n_cells)
        rows.append(ConvergenceRow(n_cells=n, error=error, observed_order=order))
        LOGGER.info("n=%d: error %.6e, order %s", n, error, order)
    return ConvergenceStudy(
        rows=tuple(rows), reference_cells=settings.reference, runs=runs
    )


@dataclass(frozen=True, eq=False)
class LongTimeStudy:
    steady: SteadySolution
    run: TimeLoopResult
    gap: LongTimeGap


def run_longtime_study(
    problem: DiscreteProblem,
    newton: NewtonOptions,
    steady_options: SteadyOptions,
    *,
    stride: int = 1,
    initial_state: State | None = None,
) -> LongTimeStudy:
    """Steady state first, then the transient run and its distance to it."""
    steady = solve_steady(problem, steady_options)
    run = run_transient(problem, newton, stride=stride, initial_state=initial_state)
    gap = long_time_gap(run, steady)
    if any(b > a + 1e-10 for a, b in zip(gap.relative_energy, gap.relative_energy[1:])):
        LOGGER.warning("Relative energy increased along the run")
    return LongTimeStudy(steady=steady, run=run, gap=gap)
