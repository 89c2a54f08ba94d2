"""
Assembly of the discrete Poisson operator, the coupled backward Euler
residual and its Jacobian.

Unknowns are ordered cell-major for the species, ``u_{i,K}`` at ``K * I + i``,
followed by all potentials, ``phi_K`` at ``N * I + K``.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Final

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from .errors import SingularSystemError
from .kernels import FluxKernel, face_flux_truncated, kernel_for
from .mesh import AdmissibleMesh
from .problem import DiscreteProblem

LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
SparseOperator = sp.csr_matrix


@dataclass(frozen=True, eq=False)
class State:
    """Species fractions ``(I, N)`` and potential ``(N,)``; ``u_0`` is derived."""

    fractions: FloatArray
    potential: FloatArray

    @property
    def solvent(self) -> FloatArray:
        return np.asarray(1.0 - self.fractions.sum(axis=0))

    def all_fractions(self) -> FloatArray:
        """``(I + 1, N)`` array with the solvent in row 0."""
        return np.vstack([self.solvent, self.fractions])

    def to_vector(self) -> FloatArray:
        return np.concatenate([self.fractions.T.ravel(), self.potential])

    @classmethod
    def from_vector(cls, vector: FloatArray, n_species: int, n_cells: int) -> "State":
        split = n_species * n_cells
        fractions = vector[:split].reshape(n_cells, n_species).T.copy()
        return cls(fractions=fractions, potential=vector[split:].copy())


@lru_cache(maxsize=16)
def laplacian(mesh: AdmissibleMesh) -> SparseOperator:
    """TPFA Laplacian: ``sum_sigma a_sigma (phi_K - phi_{K sigma})`` with the
    Dirichlet mirror values moved out (see :func:`dirichlet_load`)."""
    a = mesh.transmissivity
    faces, k, l = mesh.interior_pairs()
    a_int = a[faces]
    dirichlet = np.flatnonzero(mesh.dirichlet)
    owners = mesh.face_cells[dirichlet, 0]
    rows = np.concatenate([k, l, k, l, owners])
    cols = np.concatenate([k, l, l, k, owners])
    vals = np.concatenate([a_int, a_int, -a_int, -a_int, a[dirichlet]])
    n = mesh.n_cells
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def dirichlet_load(problem: DiscreteProblem) -> FloatArray:
    """``sum_{sigma in E_K, Dirichlet} a_sigma phi^D_sigma`` per cell."""
    mesh = problem.mesh
    dirichlet = np.flatnonzero(mesh.dirichlet)
    weights = mesh.transmissivity[dirichlet] * problem.phi_dirichlet[dirichlet]
    owners = mesh.face_cells[dirichlet, 0]
    return np.bincount(owners, weights=weights, minlength=mesh.n_cells)


def charge_density(problem: DiscreteProblem, fractions: FloatArray) -> FloatArray:
    """``f_K + sum_i z_i u_{i,K}``."""
    return np.asarray(problem.background + problem.charges @ fractions)


def assemble_poisson(
    problem: DiscreteProblem, fractions: FloatArray
) -> tuple[SparseOperator, FloatArray]:
    """Linear system ``lambda^2 L phi = rhs`` for the potential given fractions."""
    if not np.any(problem.mesh.dirichlet):
        raise SingularSystemError("Poisson problem has no Dirichlet face")
    measures = problem.mesh.cell_measures
    operator = problem.lambda_sq * laplacian(problem.mesh)
    rhs = measures * charge_density(problem, fractions)
    rhs = rhs + problem.lambda_sq * dirichlet_load(problem)
    return sp.csr_matrix(operator), rhs


def poisson_residual(problem: DiscreteProblem, state: State) -> FloatArray:
    operator, rhs = assemble_poisson(problem, state.fractions)
    return np.asarray(operator @ state.potential - rhs)


def interior_fluxes(
    problem: DiscreteProblem, state: State, *, kernel: FluxKernel | None = None
) -> FloatArray:
    """Truncated fluxes ``F_{i,K sigma}`` on interior faces, shape ``(I, F_int)``."""
    mesh = problem.mesh
    faces, k, l = mesh.interior_pairs()
    u = state.fractions
    u0 = state.solvent
    phi = state.potential
    return face_flux_truncated(
        kernel or kernel_for(problem.kernel),
        mesh.transmissivity[faces][None, :],
        problem.diffusion[:, None],
        problem.charges[:, None],
        u[:, k],
        u0[k],
        u[:, l],
        u0[l],
        phi[k],
        phi[l],
    )


def flux_divergence(problem: DiscreteProblem, state: State) -> FloatArray:
    """``sum_{sigma in E_K} F_{i,K sigma}`` per species and cell.

    Boundary fluxes vanish.
    """
    n = problem.n_cells
    _, k, l = problem.mesh.interior_pairs()
    fluxes = interior_fluxes(problem, state)
    return np.vstack(
        [
            np.bincount(k, weights=row, minlength=n)
            - np.bincount(l, weights=row, minlength=n)
            for row in fluxes
        ]
    )


def transient_residual(
    problem: DiscreteProblem, state_new: State, state_old: State, tau: float
) -> FloatArray:
    """Backward Euler residual of the species balances and the Poisson equation."""
    measures = problem.mesh.cell_measures
    change = (state_new.fractions - state_old.fractions) * measures
    species = change + tau * flux_divergence(problem, state_new)
    potential = poisson_residual(problem, state_new)
    return np.concatenate([species.T.ravel(), potential])


def _active(x: FloatArray) -> FloatArray:
    # subgradient of max(x, 0), taking the active branch at zero
    return (x >= 0.0).astype(np.float64)


def transient_jacobian(
    problem: DiscreteProblem, state_new: State, state_old: State, tau: float
) -> SparseOperator:
    """Exact Jacobian of :func:`transient_residual` at ``state_new``."""
    del state_old  # the residual is affine in the old state
    mesh = problem.mesh
    kernel = kernel_for(problem.kernel)
    n_species, n_cells = problem.n_species, problem.n_cells
    offset = n_species * n_cells
    faces, k, l = mesh.interior_pairs()
    n_int = faces.shape[0]

    u = state_new.fractions
    u0 = state_new.solvent
    phi = state_new.potential
    z = problem.charges[:, None]
    u_k, u_l = u[:, k], u[:, l]
    u0_k, u0_l = u0[k][None, :], u0[l][None, :]

    y = z * (phi[l] - phi[k])[None, :]
    forward_b, backward_b = kernel(y), kernel(-y)
    forward_db, backward_db = kernel.derivative(y), kernel.derivative(-y)
    p = np.maximum(u_k, 0.0) * np.maximum(u0_l, 0.0)
    q = np.maximum(u_l, 0.0) * np.maximum(u0_k, 0.0)
    scale = tau * mesh.transmissivity[faces][None, :] * problem.diffusion[:, None]

    diag = np.arange(n_species)
    shape = (n_species, n_species, n_int)
    d_uk = np.broadcast_to(
        (np.maximum(u_l, 0.0) * _active(u0_k) * backward_b)[:, None, :], shape
    ).copy()
    d_uk[diag, diag, :] += _active(u_k) * np.maximum(u0_l, 0.0) * forward_b
    d_ul = np.broadcast_to(
        (-np.maximum(u_k, 0.0) * _active(u0_l) * forward_b)[:, None, :], shape
    ).copy()
    d_ul[diag, diag, :] -= _active(u_l) * np.maximum(u0_k, 0.0) * backward_b
    d_uk *= scale[:, None, :]
    d_ul *= scale[:, None, :]
    d_phik = -z * scale * (p * forward_db + q * backward_db)

    species = np.arange(n_species)[:, None, None]
    other = np.arange(n_species)[None, :, None]
    row_k = np.broadcast_to(k[None, None, :] * n_species + species, shape)
    row_l = np.broadcast_to(l[None, None, :] * n_species + species, shape)
    col_k = np.broadcast_to(k[None, None, :] * n_species + other, shape)
    col_l = np.broadcast_to(l[None, None, :] * n_species + other, shape)
    row_k2 = k[None, :] * n_species + np.arange(n_species)[:, None]
    row_l2 = l[None, :] * n_species + np.arange(n_species)[:, None]
    phi_col_k = np.broadcast_to(offset + k[None, :], (n_species, n_int))
    phi_col_l = np.broadcast_to(offset + l[None, :], (n_species, n_int))

    rows = [
        row_k.ravel(), row_k.ravel(), row_l.ravel(), row_l.ravel(),
        row_k2.ravel(), row_k2.ravel(), row_l2.ravel(), row_l2.ravel(),
    ]  # fmt: skip
    cols = [
        col_k.ravel(), col_l.ravel(), col_k.ravel(), col_l.ravel(),
        phi_col_k.ravel(), phi_col_l.ravel(), phi_col_k.ravel(), phi_col_l.ravel(),
    ]  # fmt: skip
    vals = [
        d_uk.ravel(), d_ul.ravel(), -d_uk.ravel(), -d_ul.ravel(),
        d_phik.ravel(), -d_phik.ravel(), -d_phik.ravel(), d_phik.ravel(),
    ]  # fmt: skip

    # time term
    measures = mesh.cell_measures
    mass_rows = np.arange(offset)
    rows.append(mass_rows)
    cols.append(mass_rows)
    vals.append(np.repeat(measures, n_species))

    # Poisson rows: charge coupling and lambda^2 L
    cells = np.repeat(np.arange(n_cells), n_species)
    rows.append(offset + cells)
    cols.append(mass_rows)
    vals.append(-(measures[:, None] * problem.charges[None, :]).ravel())
    lap = laplacian(mesh).tocoo()
    rows.append(offset + lap.row)
    cols.append(offset + lap.col)
    vals.append(problem.lambda_sq * lap.data)

    size = problem.n_unknowns
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    ).tocsr()
