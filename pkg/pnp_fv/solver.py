"""
Newton-Raphson solve of one implicit time step, the sparse linear solve and
the time loop.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Final

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import NDArray

from .assembly import (
    SparseOperator,
    State,
    assemble_poisson,
    transient_jacobian,
    transient_residual,
)
from .diagnostics import EnergyReport, free_energy
from .errors import (
    IncompatibilityError,
    InvalidArgumentError,
    KernelOverflowError,
    NonConvergenceError,
    PositivityError,
    SingularSystemError,
    StallError,
)
from .problem import DiscreteProblem

LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Observer = Callable[[int, float, State], None]

LINEAR_RTOL: Final[float] = 1e-12
REFINEMENT_STEPS: Final[int] = 2
ENERGY_SLACK: Final[float] = 1e-10
MASS_RTOL: Final[float] = 1e-12
POLISH_ITERS: Final[int] = 8
MACHINE_EPS: Final[float] = float(np.finfo(np.float64).eps)
# nonpositive species fractions at or above -ROUNDOFF_FLOOR are roundoff
# around a vanishing value
ROUNDOFF_FLOOR: Final[float] = 64.0 * MACHINE_EPS
TINY: Final[float] = float(np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class NewtonOptions:
    """Stopping and damping parameters of the per-step Newton solve."""

    tol_inf: float = 1e-10
    max_iters: int = 50
    damping: bool = True
    backtrack_factor: float = 0.5
    min_step: float = 2.0**-30
    verbose: bool = False

    def __post_init__(self) -> None:
        if not self.tol_inf > 0.0:
            raise InvalidArgumentError(f"tol_inf must be positive, got {self.tol_inf}")
        if self.max_iters < 1:
            raise InvalidArgumentError(
                f"max_iters must be at least 1, got {self.max_iters}"
            )
        if not 0.0 < self.backtrack_factor < 1.0:
            raise InvalidArgumentError("backtrack_factor must lie in (0, 1)")
        if not 0.0 < self.min_step <= 1.0:
            raise InvalidArgumentError("min_step must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class StepSolution:
    """Converged state of one time step.

    ``iterations`` counts the residual norms in ``residual_history``, the
    initial guess included, so a guess that already meets the tolerance
    counts one.
    """

    state: State
    iterations: int
    residual_history: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Snapshot:
    step: int
    time: float
    state: State


@dataclass(frozen=True, eq=False)
class TimeLoopResult:
    """Accepted states (strided), Newton counts and energies of a run."""

    problem: DiscreteProblem
    snapshots: tuple[Snapshot, ...]
    times: FloatArray
    taus: tuple[float, ...]
    newton_iterations: tuple[int, ...]
    energies: tuple[EnergyReport, ...]

    @property
    def final_state(self) -> State:
        return self.snapshots[-1].state

    def step_states(self) -> list[State]:
        """States of steps ``1..N``; requires a run that kept every step."""
        kept = {snap.step: snap.state for snap in self.snapshots}
        missing = [n for n in range(1, len(self.taus) + 1) if n not in kept]
        if missing:
            raise IncompatibilityError(
                f"run did not keep every step (first missing: {missing[0]})"
            )
        return [kept[n] for n in range(1, len(self.taus) + 1)]


def linear_solve(op: SparseOperator, rhs: FloatArray) -> FloatArray:
    """Sparse LU solve with up to two steps of iterative refinement."""
    try:
        lu = spla.splu(sp.csc_matrix(op))
    except RuntimeError as exc:
        raise SingularSystemError(f"sparse factorization failed: {exc}") from exc
    x = lu.solve(rhs)
    target = LINEAR_RTOL * (1.0 + float(np.max(np.abs(rhs), initial=0.0)))
    residual = float("inf")
    for _ in range(REFINEMENT_STEPS + 1):
        r = rhs - op @ x
        residual = float(np.max(np.abs(r), initial=0.0))
        if not np.isfinite(residual):
            raise SingularSystemError("linear solve produced non-finite values")
        if residual <= target:
            break
        x = x + lu.solve(r)
    else:
        LOGGER.warning(
            "Linear residual %.3e above target %.3e after refinement", residual, target
        )
    return np.asarray(x)


def solve_potential(problem: DiscreteProblem, fractions: FloatArray) -> FloatArray:
    """Potential solving the Poisson equation for fixed fractions."""
    operator, rhs = assemble_poisson(problem, fractions)
    return linear_solve(operator, rhs)


def starting_state(problem: DiscreteProblem) -> State:
    """Initial fractions with the matching potential."""
    fractions = problem.initial_fractions.copy()
    return State(fractions=fractions, potential=solve_potential(problem, fractions))


def _residual_norm(
    problem: DiscreteProblem, vector: FloatArray, state_old: State, tau: float
) -> tuple[FloatArray, float]:
    state = State.from_vector(vector, problem.n_species, problem.n_cells)
    residual = transient_residual(problem, state, state_old, tau)
    return residual, float(np.max(np.abs(residual)))


def _outside_simplex(state: State) -> bool:
    everything = state.all_fractions()
    return bool(np.any(everything <= 0.0) or np.any(everything >= 1.0))


def _polish(
    problem: DiscreteProblem,
    x: FloatArray,
    residual: FloatArray,
    state_old: State,
    tau: float,
    tol: float,
    history: list[float],
) -> tuple[FloatArray, FloatArray]:
    """Full Newton updates past the tolerance until the update reaches roundoff.

    Near-zero fractions of a converged iterate carry absolute errors of the
    size of the last update, which can flip their sign. Updates that raise the
    residual above ``max(tol, current)`` are rejected. Appends to ``history``.
    """
    n_species, n_cells = problem.n_species, problem.n_cells
    for _ in range(POLISH_ITERS):
        current = State.from_vector(x, n_species, n_cells)
        jacobian = transient_jacobian(problem, current, state_old, tau)
        delta = linear_solve(jacobian, -residual)
        try:
            trial_residual, trial_norm = _residual_norm(
                problem, x + delta, state_old, tau
            )
        except KernelOverflowError:
            break
        if not np.isfinite(trial_norm) or trial_norm > max(tol, history[-1]):
            break
        x, residual = x + delta, trial_residual
        history.append(trial_norm)
        size = float(np.max(np.abs(delta)))
        LOGGER.debug("Newton polish: update %.3e, residual %.3e", size, trial_norm)
        if size <= MACHINE_EPS * (1.0 + float(np.max(np.abs(x)))):
            break
    return x, residual


def settle_roundoff(fractions: FloatArray) -> FloatArray:
    """Lift species fractions in ``[-ROUNDOFF_FLOOR, 0]`` to the smallest normal.

    Larger violations are left for the caller to reject. The mass change is
    below ``ROUNDOFF_FLOOR`` per lifted cell.
    """
    lifted = (fractions <= 0.0) & (fractions >= -ROUNDOFF_FLOOR)
    if not np.any(lifted):
        return fractions
    LOGGER.debug("Lifting %d roundoff-level fractions", int(lifted.sum()))
    return np.where(lifted, TINY, fractions)


def newton_step_solve(
    problem: DiscreteProblem,
    state_old: State,
    tau: float,
    options: NewtonOptions | None = None,
) -> StepSolution:
    """Solve one backward Euler step from ``state_old``.

    The initial iterate keeps the old fractions and re-solves the potential.
    With damping enabled the Newton step is halved until the residual
    infinity norm decreases.

    Raises:
        NonConvergenceError: More than ``max_iters`` Newton updates needed
        StallError: No decreasing step above ``min_step``
        SingularSystemError: Jacobian factorization failed
        PositivityError: Converged state leaves the open simplex by more than
            roundoff
    """
    options = options or NewtonOptions()
    n_species, n_cells = problem.n_species, problem.n_cells
    guess = State(
        fractions=state_old.fractions.copy(),
        potential=solve_potential(problem, state_old.fractions),
    )
    x = guess.to_vector()
    residual, norm = _residual_norm(problem, x, state_old, tau)
    history = [norm]

    while history[-1] > options.tol_inf:
        if len(history) > options.max_iters:
            raise NonConvergenceError(
                f"Newton did not reach {options.tol_inf:.1e} in {options.max_iters} "
                f"iterations (residual {history[-1]:.3e})",
                history,
            )
        current = State.from_vector(x, n_species, n_cells)
        jacobian = transient_jacobian(problem, current, state_old, tau)
        delta = linear_solve(jacobian, -residual)

        step = 1.0
        while True:
            trial = x + step * delta
            try:
                trial_residual, trial_norm = _residual_norm(
                    problem, trial, state_old, tau
                )
            except KernelOverflowError:
                if not options.damping:
                    raise
                trial_residual, trial_norm = residual, float("inf")
            if np.isfinite(trial_norm) and (
                not options.damping or trial_norm < history[-1]
            ):
                break
            if not options.damping:
                raise NonConvergenceError(
                    "Newton produced a non-finite residual", history
                )
            step *= options.backtrack_factor
            if step < options.min_step:
                raise StallError(
                    f"no decreasing Newton step above {options.min_step:.1e} "
                    f"(residual {history[-1]:.3e})",
                    history,
                )
        LOGGER.debug(
            "Newton iterate %d: residual %.3e, step %.3e",
            len(history),
            trial_norm,
            step,
        )
        x, residual = trial, trial_residual
        history.append(trial_norm)

    if _outside_simplex(State.from_vector(x, n_species, n_cells)):
        x, _ = _polish(
            problem, x, residual, state_old, tau, options.tol_inf, history
        )

    state = State.from_vector(x, n_species, n_cells)
    state = State(
        fractions=settle_roundoff(state.fractions), potential=state.potential
    )
    everything = state.all_fractions()
    if np.any(everything <= 0.0) or np.any(everything >= 1.0):
        species, cell = np.unravel_index(
            int(np.argmin(np.minimum(everything, 1.0 - everything))), everything.shape
        )
        raise PositivityError(
            f"converged fraction u_{species} = {everything[species, cell]!r} "
            f"in cell {cell} is outside (0, 1)"
        )
    if options.verbose:
        LOGGER.info("Newton converged in %d iterations", len(history))
    return StepSolution(
        state=state, iterations=len(history), residual_history=tuple(history)
    )


def run_transient(
    problem: DiscreteProblem,
    options: NewtonOptions | None = None,
    *,
    stride: int = 1,
    observer: Observer | None = None,
    initial_state: State | None = None,
) -> TimeLoopResult:
    """March the whole time grid of ``problem``.

    Args:
        problem: Discretized problem
        options: Newton options
        stride: Keep every ``stride``-th state; ``0`` keeps only the first and
            the last. The final state is always kept.
        observer: Called as ``observer(step, time, state)`` for every accepted
            state, the initial one included
        initial_state: Start here instead of the problem's initial data

    Returns:
        The run's snapshots, Newton counts and energy reports
    """
    if stride < 0:
        raise InvalidArgumentError(f"stride must be nonnegative, got {stride}")
    options = options or NewtonOptions()
    grid = problem.time_grid
    times = grid.times
    tolerance = MASS_RTOL * problem.mesh.domain_measure

    state = initial_state if initial_state is not None else starting_state(problem)
    report = free_energy(problem, state)
    initial_masses = np.asarray(report.masses)
    energies = [report]
    snapshots = [Snapshot(0, 0.0, state)]
    iterations: list[int] = []
    if observer is not None:
        observer(0, 0.0, state)

    for n, tau in enumerate(grid.taus, start=1):
        solution = newton_step_solve(problem, state, tau, options)
        state = solution.state
        iterations.append(solution.iterations)
        previous = energies[-1]
        report = free_energy(problem, state)
        energies.append(report)

        dissipated = tau * (report.dissipation or 0.0)
        if report.total + dissipated > previous.total + ENERGY_SLACK:
            rise = report.total + dissipated - previous.total
            LOGGER.warning("Step %d: energy rose by %.3e", n, rise)
        drift = float(np.max(np.abs(np.asarray(report.masses) - initial_masses)))
        if drift > tolerance:
            LOGGER.warning("Step %d: mass drift %.3e", n, drift)

        last = n == grid.n_steps
        if last or (stride > 0 and n % stride == 0):
            snapshots.append(Snapshot(n, float(times[n]), state))
        if observer is not None:
            observer(n, float(times[n]), state)
        if options.verbose:
            LOGGER.info(
                "Step %d/%d t=%.4g: %d Newton iterations, H=%.10g",
                n,
                grid.n_steps,
                times[n],
                solution.iterations,
                report.total,
            )

    return TimeLoopResult(
        problem=problem,
        snapshots=tuple(snapshots),
        times=times,
        taus=grid.taus,
        newton_iterations=tuple(iterations),
        energies=tuple(energies),
    )
