"""
Discrete steady state as the minimizer of a strictly convex functional of the
potential ``y`` (per cell) and the constant electrochemical potentials ``xi``.
"""

import logging
from dataclasses import dataclass, field
from typing import Final

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray
from scipy.special import logsumexp, softmax

from .assembly import State, dirichlet_load, laplacian
from .diagnostics import free_energy
from .errors import (
    ConfigurationError,
    IncompatibilityError,
    InvalidArgumentError,
    NonConvergenceError,
    StallError,
)
from .problem import DiscreteProblem
from .solver import TimeLoopResult, linear_solve, solve_potential

LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

ROUNDOFF_RTOL: Final[float] = 1e-13


@dataclass(frozen=True)
class SteadyOptions:
    """Damped Newton parameters for the steady minimization."""

    tol: float = 1e-11
    max_iters: int = 100
    armijo: float = 1e-4
    backtrack_factor: float = 0.5
    min_step: float = 2.0**-40
    verbose: bool = False

    def __post_init__(self) -> None:
        if not self.tol > 0.0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise InvalidArgumentError(
                f"max_iters must be at least 1, got {self.max_iters}"
            )
        if not 0.0 < self.armijo < 0.5:
            raise InvalidArgumentError("armijo must lie in (0, 1/2)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise InvalidArgumentError("backtrack_factor must lie in (0, 1)")
        if not 0.0 < self.min_step <= 1.0:
            raise InvalidArgumentError("min_step must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class SteadySolution:
    """Minimizer ``(phi, mu)`` with the reconstructed equilibrium fractions."""

    problem: DiscreteProblem
    potential: FloatArray
    mu: FloatArray
    fractions: FloatArray
    psi_value: float
    kkt_residual: float
    mass_residual: float
    iterations: int
    history: tuple[float, ...] = field(default=())

    @property
    def state(self) -> State:
        return State(fractions=self.fractions, potential=self.potential)


def _exponents(y: ArrayLike, xi: ArrayLike, charges: ArrayLike) -> FloatArray:
    y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    xi_arr = np.asarray(xi, dtype=np.float64)
    z = np.asarray(charges, dtype=np.float64)
    return np.vstack(
        [np.zeros((1, y_arr.shape[0])), xi_arr[:, None] - z[:, None] * y_arr[None, :]]
    )


def v_fractions(y: ArrayLike, xi: ArrayLike, charges: ArrayLike) -> FloatArray:
    """Equilibrium fractions ``(v_0, v_1..v_I)`` per cell, shape ``(I + 1, N)``.

    ``v_i = exp(xi_i - z_i y) / (1 + sum_j exp(xi_j - z_j y))``; the solvent
    is the softmax entry of the zero exponent.
    """
    return np.asarray(softmax(_exponents(y, xi, charges), axis=0))


def charge_response(y: ArrayLike, xi: ArrayLike, charges: ArrayLike) -> FloatArray:
    """``r(y, xi) = -sum_i z_i v_i(y, xi)``, nondecreasing in ``y``."""
    v = v_fractions(y, xi, charges)[1:]
    return np.asarray(-(np.asarray(charges, dtype=np.float64) @ v))


def _masses(problem: DiscreteProblem) -> FloatArray:
    return np.asarray(problem.initial_fractions @ problem.mesh.cell_measures)


def psi_value_grad(
    problem: DiscreteProblem, y: FloatArray, xi: FloatArray
) -> tuple[float, FloatArray]:
    """Value and gradient ``(d/dy, d/dxi)`` of the steady functional."""
    mesh = problem.mesh
    m = mesh.cell_measures
    a = mesh.transmissivity
    faces, k, l = mesh.interior_pairs()
    dirichlet = np.flatnonzero(mesh.dirichlet)
    owners = mesh.face_cells[dirichlet, 0]

    quadratic = float((a[faces] * (y[k] - y[l]) ** 2).sum()) + float(
        (a[dirichlet] * (y[owners] - problem.phi_dirichlet[dirichlet]) ** 2).sum()
    )
    exponents = _exponents(y, xi, problem.charges)
    value = (
        0.5 * problem.lambda_sq * quadratic
        + float(m @ logsumexp(exponents, axis=0))
        - float(m @ (problem.background * y))
        - float(xi @ _masses(problem))
    )

    v = softmax(exponents, axis=0)[1:]
    response = -(problem.charges @ v)
    grad_y = (
        problem.lambda_sq * (laplacian(mesh) @ y - dirichlet_load(problem))
        + m * response
        - m * problem.background
    )
    grad_xi = v @ m - _masses(problem)
    return value, np.concatenate([grad_y, grad_xi])


def psi_hessian(
    problem: DiscreteProblem, y: FloatArray, xi: FloatArray
) -> sp.csr_matrix:
    """Hessian of the steady functional; positive definite with Dirichlet faces."""
    m = problem.mesh.cell_measures
    z = problem.charges
    v = v_fractions(y, xi, z)[1:]
    mean_charge = z @ v
    response_slope = (z**2) @ v - mean_charge**2
    yy = problem.lambda_sq * laplacian(problem.mesh) + sp.diags(m * response_slope)
    y_xi = (m * v * (mean_charge[None, :] - z[:, None])).T
    xi_xi = np.diag(v @ m) - (v * m) @ v.T
    coupling = sp.csr_matrix(y_xi)
    return sp.csr_matrix(sp.bmat([[yy, coupling], [coupling.T, sp.csr_matrix(xi_xi)]]))


def poisson_boltzmann_residual(
    problem: DiscreteProblem, potential: FloatArray, mu: FloatArray
) -> FloatArray:
    """``lambda^2 sum_sigma a_sigma (y_K - y_{K sigma}) + m_K (r(y_K, mu) - f_K)``,
    accumulated face by face."""
    mesh = problem.mesh
    n = mesh.n_cells
    a = mesh.transmissivity
    faces, k, l = mesh.interior_pairs()
    jump = a[faces] * (potential[k] - potential[l])
    dirichlet = np.flatnonzero(mesh.dirichlet)
    owners = mesh.face_cells[dirichlet, 0]
    boundary = a[dirichlet] * (potential[owners] - problem.phi_dirichlet[dirichlet])
    divergence = (
        np.bincount(k, weights=jump, minlength=n)
        - np.bincount(l, weights=jump, minlength=n)
        + np.bincount(owners, weights=boundary, minlength=n)
    )
    m = mesh.cell_measures
    return np.asarray(
        problem.lambda_sq * divergence
        + m * (charge_response(potential, mu, problem.charges) - problem.background)
    )


def _default_guess(problem: DiscreteProblem) -> tuple[FloatArray, FloatArray]:
    masses = problem.initial_masses()
    potential = solve_potential(problem, problem.initial_fractions)
    return potential, np.log(masses[1:] / masses[0])


def solve_steady(
    problem: DiscreteProblem,
    options: SteadyOptions | None = None,
    *,
    initial_guess: tuple[FloatArray, FloatArray] | None = None,
) -> SteadySolution:
    """Minimize the steady functional by Newton with Armijo backtracking.

    Args:
        problem: Discretized problem; its initial data fixes the masses
        options: Newton options
        initial_guess: ``(y, xi)`` to start from; defaults to the Poisson
            potential of the initial data and ``xi_i = log(M_i / M_0)``

    Returns:
        The steady solution
    """
    options = options or SteadyOptions()
    masses = problem.initial_masses()
    if np.any(masses <= 0.0):
        raise ConfigurationError("every species needs a positive initial mass")
    if not np.any(problem.mesh.dirichlet):
        raise ConfigurationError("steady state needs a Dirichlet boundary")

    n = problem.n_cells
    y, xi = initial_guess if initial_guess is not None else _default_guess(problem)
    x = np.concatenate(
        [np.asarray(y, dtype=np.float64), np.asarray(xi, dtype=np.float64)]
    )
    m_max = float(problem.mesh.cell_measures.max())
    f_max = float(np.max(np.abs(problem.background), initial=0.0))
    target = options.tol * (1.0 + m_max * (1.0 + f_max))

    value, grad = psi_value_grad(problem, x[:n], x[n:])
    history = [float(np.max(np.abs(grad)))]
    while history[-1] > target:
        if len(history) > options.max_iters:
            raise NonConvergenceError(
                f"steady Newton did not reach {target:.1e} in {options.max_iters} "
                f"iterations (gradient {history[-1]:.3e})",
                history,
            )
        direction = linear_solve(psi_hessian(problem, x[:n], x[n:]), -grad)
        slope = float(grad @ direction)
        step = 1.0
        while True:
            trial = x + step * direction
            trial_value, trial_grad = psi_value_grad(problem, trial[:n], trial[n:])
            trial_norm = float(np.max(np.abs(trial_grad)))
            if trial_value <= value + options.armijo * step * slope:
                break
            roundoff = ROUNDOFF_RTOL * (1.0 + abs(value))
            if abs(trial_value - value) <= roundoff and trial_norm < history[-1]:
                break
            step *= options.backtrack_factor
            if step < options.min_step:
                raise StallError(
                    f"steady line search failed (gradient {history[-1]:.3e})", history
                )
        x, value, grad = trial, trial_value, trial_grad
        history.append(trial_norm)
        LOGGER.debug(
            "Steady iterate %d: psi %.15g, gradient %.3e",
            len(history),
            value,
            trial_norm,
        )

    y, xi = x[:n], x[n:]
    fractions = v_fractions(y, xi, problem.charges)[1:]
    kkt = float(np.max(np.abs(grad[:n])))
    mass = float(np.max(np.abs(grad[n:])))
    if options.verbose:
        LOGGER.info(
            "Steady state after %d iterations: psi=%.15g, KKT %.2e, mass %.2e",
            len(history),
            value,
            kkt,
            mass,
        )
    return SteadySolution(
        problem=problem,
        potential=y.copy(),
        mu=xi.copy(),
        fractions=fractions,
        psi_value=value,
        kkt_residual=kkt,
        mass_residual=mass,
        iterations=len(history),
        history=tuple(history),
    )


@dataclass(frozen=True)
class LongTimeGap:
    """Relative energy and sup-norm distance to the steady state per kept step."""

    steps: tuple[int, ...]
    times: tuple[float, ...]
    relative_energy: tuple[float, ...]
    fraction_gap: tuple[float, ...]


def long_time_gap(run: TimeLoopResult, steady: SteadySolution) -> LongTimeGap:
    """``H^n - H^inf`` and ``max |U^n - U^inf|`` over the snapshots of ``run``."""
    if run.problem is not steady.problem:
        raise IncompatibilityError("run and steady state belong to different problems")
    limit_energy = free_energy(steady.problem, steady.state).total
    limit = steady.state.all_fractions()
    energies = [run.energies[snap.step].total - limit_energy for snap in run.snapshots]
    gaps = [
        float(np.max(np.abs(snap.state.all_fractions() - limit)))
        for snap in run.snapshots
    ]
    return LongTimeGap(
        steps=tuple(snap.step for snap in run.snapshots),
        times=tuple(snap.time for snap in run.snapshots),
        relative_energy=tuple(energies),
        fraction_gap=tuple(gaps),
    )
