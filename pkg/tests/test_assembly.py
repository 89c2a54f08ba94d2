from typing import Callable

import numpy as np
import pytest

from pnp_fv.assembly import (
    State,
    assemble_poisson,
    flux_divergence,
    laplacian,
    transient_jacobian,
    transient_residual,
)
from pnp_fv.diagnostics import free_energy
from pnp_fv.mesh import build_interval_mesh, build_square_mesh
from pnp_fv.problem import (
    Box,
    DiscreteProblem,
    ProblemSpec,
    ScalarField,
    Species,
    TimeGrid,
    discretize,
)
from pnp_fv.solver import linear_solve

ProblemFactory = Callable[..., DiscreteProblem]


def _two_cell_problem(charge: int = 1) -> DiscreteProblem:
    spec = ProblemSpec(
        species=(Species("u1", 1.0, charge),),
        lambda_sq=1.0,
        initial_fractions=(ScalarField(constant=0.5),),
        time_grid=TimeGrid.uniform(0.1, 0.1),
    )
    return discretize(spec, build_interval_mesh(1.0, 2))


def _random_state(
    problem: DiscreteProblem, rng: np.random.Generator, low: float = 0.05
) -> State:
    fractions = rng.uniform(low, 0.3, (problem.n_species, problem.n_cells))
    return State(fractions=fractions, potential=rng.uniform(-1.0, 1.0, problem.n_cells))


def _mixed_problem() -> DiscreteProblem:
    spec = ProblemSpec(
        species=(Species("a", 1.0, 2), Species("b", 0.5, -1)),
        lambda_sq=0.3,
        initial_fractions=(ScalarField(constant=0.2), ScalarField(constant=0.3)),
        time_grid=TimeGrid.uniform(0.01, 0.01),
        background_charge=ScalarField(constant=-0.1),
        dirichlet_region=Box((0.0, 0.1)),
        phi_dirichlet=ScalarField(constant=0.5),
    )
    return discretize(spec, build_interval_mesh(1.0, 6))


def test_two_cell_poisson_system() -> None:
    problem = _two_cell_problem()
    operator, rhs = assemble_poisson(problem, problem.initial_fractions)
    np.testing.assert_allclose(operator.toarray(), [[6.0, -2.0], [-2.0, 6.0]])
    np.testing.assert_allclose(rhs, [0.25, 0.25])
    potential = linear_solve(operator, rhs)
    np.testing.assert_allclose(potential, [0.0625, 0.0625], rtol=1e-14)

    report = free_energy(problem, State(problem.initial_fractions, potential))
    assert report.potential_energy == pytest.approx(0.015625, rel=1e-13)
    assert report.boundary_term == 0.0


def test_constant_boundary_data_without_charge() -> None:
    spec = ProblemSpec(
        species=(Species("u1", 1.0, 0),),
        lambda_sq=0.7,
        initial_fractions=(ScalarField(constant=0.4),),
        time_grid=TimeGrid.uniform(0.1, 0.1),
        dirichlet_region=Box((0.0, 1.0, 0.0, 1.0)),
        phi_dirichlet=ScalarField(constant=-3.0),
    )
    problem = discretize(spec, build_square_mesh(4))
    operator, rhs = assemble_poisson(problem, problem.initial_fractions)
    np.testing.assert_allclose(linear_solve(operator, rhs), -3.0, rtol=1e-12)


def test_laplacian_is_symmetric_with_dirichlet_row_sums() -> None:
    problem = _mixed_problem()
    mesh = problem.mesh
    lap = laplacian(mesh).toarray()
    np.testing.assert_allclose(lap, lap.T)
    expected = np.bincount(
        mesh.face_cells[mesh.dirichlet, 0],
        weights=mesh.transmissivity[mesh.dirichlet],
        minlength=mesh.n_cells,
    )
    np.testing.assert_allclose(lap.sum(axis=1), expected, atol=1e-12)


def test_poisson_block_is_positive_definite() -> None:
    problem = _mixed_problem()
    operator, _ = assemble_poisson(problem, problem.initial_fractions)
    assert np.all(np.linalg.eigvalsh(operator.toarray()) > 0.0)


def test_residual_vanishes_on_neutral_constant_state(
    neutral_problem: ProblemFactory,
) -> None:
    problem = neutral_problem()
    state = State(problem.initial_fractions.copy(), np.zeros(problem.n_cells))
    residual = transient_residual(problem, state, state, 1e-3)
    assert np.max(np.abs(residual)) == 0.0


def test_single_face_residual_is_the_flux() -> None:
    problem = _two_cell_problem()
    state = State(np.array([[0.5, 0.25]]), np.array([0.0, 1.0]))
    residual = transient_residual(problem, state, state, 0.1)
    flux = 2.0 * (0.375 * 0.5819767068693265 - 0.125 * 1.5819767068693265)
    assert residual[0] == pytest.approx(0.1 * flux, rel=1e-12)
    assert residual[1] == pytest.approx(-0.1 * flux, rel=1e-12)


def test_species_residual_is_locally_conservative(
    interval_problem: ProblemFactory, rng: np.random.Generator
) -> None:
    problem = interval_problem(n_cells=12)
    old = _random_state(problem, rng)
    new = _random_state(problem, rng)
    residual = transient_residual(problem, new, old, 0.01)
    species = residual[: problem.n_species * problem.n_cells]
    species = species.reshape(problem.n_cells, problem.n_species).T
    measures = problem.mesh.cell_measures
    change = ((new.fractions - old.fractions) * measures).sum(axis=1)
    tolerance = 1e-14 * measures.sum()
    np.testing.assert_allclose(species.sum(axis=1), change, atol=tolerance)
    assert np.max(np.abs(flux_divergence(problem, new).sum(axis=1))) <= 1e-14


def _finite_difference_jacobian(
    problem: DiscreteProblem, state: State, old: State, tau: float, h: float = 1e-6
) -> np.ndarray:
    x = state.to_vector()
    columns = []
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = h
        plus = State.from_vector(x + step, problem.n_species, problem.n_cells)
        minus = State.from_vector(x - step, problem.n_species, problem.n_cells)
        columns.append(
            (
                transient_residual(problem, plus, old, tau)
                - transient_residual(problem, minus, old, tau)
            )
            / (2.0 * h)
        )
    return np.column_stack(columns)


@pytest.mark.parametrize("seed", range(10))
def test_jacobian_matches_finite_differences(seed: int) -> None:
    rng = np.random.default_rng(seed)
    problem = _mixed_problem()
    state = _random_state(problem, rng)
    old = _random_state(problem, rng)
    exact = transient_jacobian(problem, state, old, 0.05).toarray()
    numeric = _finite_difference_jacobian(problem, state, old, 0.05)
    assert np.max(np.abs(exact - numeric)) <= 1e-5 * max(1.0, np.max(np.abs(exact)))


def test_jacobian_on_triangles_matches_finite_differences(
    rng: np.random.Generator,
) -> None:
    spec = ProblemSpec(
        species=(Species("a", 1.0, 1), Species("b", 2.0, -1)),
        lambda_sq=0.5,
        initial_fractions=(ScalarField(constant=0.2), ScalarField(constant=0.2)),
        time_grid=TimeGrid.uniform(0.01, 0.01),
        dirichlet_region=Box((0.0, 0.5, 1.0, 1.0)),
    )
    problem = discretize(spec, build_square_mesh(3))
    state = _random_state(problem, rng)
    exact = transient_jacobian(problem, state, state, 0.01).toarray()
    numeric = _finite_difference_jacobian(problem, state, state, 0.01)
    assert np.max(np.abs(exact - numeric)) <= 1e-5 * max(1.0, np.max(np.abs(exact)))


def test_jacobian_without_time_step_is_the_mass_matrix(
    rng: np.random.Generator,
) -> None:
    problem = _mixed_problem()
    state = _random_state(problem, rng)
    jacobian = transient_jacobian(problem, state, state, 0.0).toarray()
    size = problem.n_species * problem.n_cells
    expected = np.diag(np.repeat(problem.mesh.cell_measures, problem.n_species))
    np.testing.assert_allclose(jacobian[:size, :size], expected)
    np.testing.assert_allclose(jacobian[:size, size:], 0.0)


def test_uncharged_species_do_not_see_the_potential(
    rng: np.random.Generator,
) -> None:
    spec = ProblemSpec(
        species=(Species("a", 1.0, 0),),
        lambda_sq=1.0,
        initial_fractions=(ScalarField(constant=0.2),),
        time_grid=TimeGrid.uniform(0.01, 0.01),
    )
    problem = discretize(spec, build_interval_mesh(1.0, 5))
    state = _random_state(problem, rng)
    jacobian = transient_jacobian(problem, state, state, 0.01).toarray()
    assert np.all(jacobian[: problem.n_cells, problem.n_cells :] == 0.0)


def test_state_vector_layout() -> None:
    fractions = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    state = State(fractions, np.array([7.0, 8.0, 9.0]))
    vector = state.to_vector()
    np.testing.assert_array_equal(vector, [1, 4, 2, 5, 3, 6, 7, 8, 9])
    back = State.from_vector(vector, 2, 3)
    np.testing.assert_array_equal(back.fractions, state.fractions)
    np.testing.assert_array_equal(back.potential, state.potential)
    np.testing.assert_allclose(state.all_fractions()[0], [-4.0, -6.0, -8.0])
