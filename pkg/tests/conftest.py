from typing import Callable

import numpy as np
import pytest

from pnp_fv.mesh import build_interval_mesh
from pnp_fv.problem import (
    Box,
    DiscreteProblem,
    ProblemSpec,
    ScalarField,
    Species,
    TimeGrid,
    discretize,
)

ProblemFactory = Callable[..., DiscreteProblem]


def interval_spec(
    *,
    tau: float = 1e-3,
    final_time: float = 0.02,
    lambda_sq: float = 1e-2,
) -> ProblemSpec:
    """Two charged species on (0, 1) with phi^D = 10 at x = 0 and 0 at x = 1."""
    return ProblemSpec(
        species=(Species("u1", 1.0, 2), Species("u2", 1.0, 1)),
        lambda_sq=lambda_sq,
        initial_fractions=(
            ScalarField(constant=0.1, gradient=(0.1,)),
            ScalarField(constant=0.4),
        ),
        time_grid=TimeGrid.uniform(tau, final_time),
        dirichlet_region=Box((0.0, 1.0)),
        phi_dirichlet=ScalarField(constant=10.0, gradient=(-10.0,)),
    )


@pytest.fixture
def interval_problem() -> ProblemFactory:
    def build(n_cells: int = 16, **kwargs: float) -> DiscreteProblem:
        return discretize(interval_spec(**kwargs), build_interval_mesh(1.0, n_cells))

    return build


@pytest.fixture
def neutral_problem() -> ProblemFactory:
    """Constant, globally neutral data with zero boundary potential."""

    def build(n_cells: int = 6, final_time: float = 0.005) -> DiscreteProblem:
        spec = ProblemSpec(
            species=(Species("plus", 1.0, 1), Species("minus", 2.0, -1)),
            lambda_sq=0.5,
            initial_fractions=(ScalarField(constant=0.2), ScalarField(constant=0.2)),
            time_grid=TimeGrid.uniform(1e-3, final_time),
        )
        return discretize(spec, build_interval_mesh(1.0, n_cells))

    return build


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def interval_spec_factory() -> Callable[..., ProblemSpec]:
    return interval_spec
