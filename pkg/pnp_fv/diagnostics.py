"""
Free energy, dissipation, masses and error norms.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Final, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.special import xlogy

from .assembly import State, interior_fluxes
from .errors import DomainError, IncompatibilityError
from .mesh import AdmissibleMesh
from .problem import DiscreteProblem

if TYPE_CHECKING:
    from .solver import TimeLoopResult

LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

SIMPLEX_TOL: Final[float] = 1e-14


@dataclass(frozen=True)
class EnergyReport:
    """Terms of the discrete free energy of one state."""

    entropy: float
    potential_energy: float
    boundary_term: float
    total: float
    dissipation: float | None
    masses: tuple[float, ...]


def mixing_entropy(fractions: FloatArray) -> FloatArray:
    """``u_0 log u_0 + sum_i u_i log u_i`` with ``0 log 0 = 0``.

    Args:
        fractions: Species fractions ``u_1..u_I`` along axis 0 (the solvent
            is derived); trailing axes are evaluated elementwise

    Returns:
        Entropy density, with the trailing shape of ``fractions``
    """
    u = np.asarray(fractions, dtype=np.float64)
    solvent = 1.0 - u.sum(axis=0)
    if np.any(u < -SIMPLEX_TOL) or np.any(solvent < -SIMPLEX_TOL):
        raise DomainError("fractions outside the simplex")
    u = np.clip(u, 0.0, None)
    solvent = np.clip(solvent, 0.0, None)
    return np.asarray(xlogy(solvent, solvent) + xlogy(u, u).sum(axis=0))


def electrochemical_potentials(problem: DiscreteProblem, state: State) -> FloatArray:
    """``mu_{i,K} = log(u_{i,K} / u_{0,K}) + z_i phi_K``, shape ``(I, N)``."""
    u = state.fractions
    u0 = state.solvent
    if np.any(u <= 0.0) or np.any(u0 <= 0.0):
        raise DomainError("electrochemical potentials need strictly positive fractions")
    return np.asarray(np.log(u / u0) + problem.charges[:, None] * state.potential)


def species_masses(problem: DiscreteProblem, state: State) -> FloatArray:
    """``sum_K m_K u_{i,K}`` for ``i = 0..I`` (solvent first)."""
    return np.asarray(state.all_fractions() @ problem.mesh.cell_measures)


def dissipation(problem: DiscreteProblem, state: State) -> float:
    """``sum_i sum_sigma F_{i,K sigma} (mu_{i,K} - mu_{i,L})`` over interior faces."""
    mu = electrochemical_potentials(problem, state)
    _, k, l = problem.mesh.interior_pairs()
    fluxes = interior_fluxes(problem, state)
    return float((fluxes * (mu[:, k] - mu[:, l])).sum())


def free_energy(problem: DiscreteProblem, state: State) -> EnergyReport:
    """Discrete free energy of ``state``.

    Neumann faces contribute no gradient; Dirichlet faces use ``phi^D``.
    The dissipation is filled in when every fraction is strictly positive.
    """
    mesh = problem.mesh
    a = mesh.transmissivity
    phi = state.potential
    entropy = float(mesh.cell_measures @ mixing_entropy(state.fractions))

    faces, k, l = mesh.interior_pairs()
    dirichlet = np.flatnonzero(mesh.dirichlet)
    owners = mesh.face_cells[dirichlet, 0]
    phi_d = problem.phi_dirichlet[dirichlet]
    a_d = a[dirichlet]
    gradient_sq = float((a[faces] * (phi[k] - phi[l]) ** 2).sum()) + float(
        (a_d * (phi[owners] - phi_d) ** 2).sum()
    )
    potential_energy = 0.5 * problem.lambda_sq * gradient_sq
    boundary_term = -problem.lambda_sq * float(
        (a_d * phi_d * (phi_d - phi[owners])).sum()
    )

    positive = bool(np.all(state.fractions > 0.0) and np.all(state.solvent > 0.0))
    return EnergyReport(
        entropy=entropy,
        potential_energy=potential_energy,
        boundary_term=boundary_term,
        total=entropy + potential_energy + boundary_term,
        dissipation=dissipation(problem, state) if positive else None,
        masses=tuple(float(m) for m in species_masses(problem, state)),
    )


def refinement_factor(fine: AdmissibleMesh, coarse: AdmissibleMesh) -> int:
    """Integer factor between two nested uniform interval meshes."""
    if not (fine.is_uniform_interval() and coarse.is_uniform_interval()):
        raise IncompatibilityError("projection needs uniform 1D meshes")
    if not np.isclose(fine.domain_measure, coarse.domain_measure, rtol=1e-12):
        raise IncompatibilityError("meshes cover different intervals")
    factor, remainder = divmod(fine.n_cells, coarse.n_cells)
    if remainder or factor < 1:
        raise IncompatibilityError(
            f"{fine.n_cells} cells do not refine {coarse.n_cells} cells"
        )
    return factor


def project_to_coarse(
    values: FloatArray, fine: AdmissibleMesh, coarse: AdmissibleMesh
) -> FloatArray:
    """Volume-weighted average of fine-cell values over each coarse cell."""
    factor = refinement_factor(fine, coarse)
    shaped = np.asarray(values).reshape(*np.shape(values)[:-1], coarse.n_cells, factor)
    return np.asarray(shaped.mean(axis=-1))


def spacetime_l1(
    series: Sequence[FloatArray], taus: Sequence[float], measures: FloatArray
) -> float:
    """``sum_n tau^n sum_K m_K sum_i |x_{i,K}^n|`` for steps ``n = 1..N``."""
    if len(series) != len(taus):
        raise IncompatibilityError(f"{len(series)} states for {len(taus)} steps")
    return float(
        sum(tau * (np.abs(x) @ measures).sum() for tau, x in zip(taus, series))
    )


def relative_l1_spacetime_error(
    coarse_run: "TimeLoopResult", reference_run: "TimeLoopResult"
) -> float:
    """Relative space-time L1 distance of the species fractions.

    Both runs must keep every time step and share the time grid; the reference
    mesh must refine the coarse one.
    """
    taus = coarse_run.taus
    if len(taus) != len(reference_run.taus) or not np.array_equal(
        np.asarray(taus), np.asarray(reference_run.taus)
    ):
        raise IncompatibilityError("runs use different time grids")
    coarse_states = coarse_run.step_states()
    reference_states = reference_run.step_states()
    fine_mesh = reference_run.problem.mesh
    coarse_mesh = coarse_run.problem.mesh
    differences = [
        c.fractions - project_to_coarse(r.fractions, fine_mesh, coarse_mesh)
        for c, r in zip(coarse_states, reference_states)
    ]
    numerator = spacetime_l1(differences, taus, coarse_mesh.cell_measures)
    denominator = spacetime_l1(
        [r.fractions for r in reference_states], taus, fine_mesh.cell_measures
    )
    return numerator / denominator
