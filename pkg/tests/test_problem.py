import numpy as np
import pytest

from pnp_fv.errors import ConfigurationError, DataError
from pnp_fv.kernels import KernelKind
from pnp_fv.mesh import FaceKind, build_interval_mesh, build_square_mesh
from pnp_fv.problem import (
    Box,
    BoxIndicator,
    CellTable,
    ProblemSpec,
    ScalarField,
    Species,
    TimeGrid,
    discretize,
)


def _spec(*initial: ScalarField, **kwargs: object) -> ProblemSpec:
    species = tuple(Species(f"u{i + 1}", 1.0, 1) for i in range(len(initial)))
    return ProblemSpec(
        species=species,
        lambda_sq=1.0,
        initial_fractions=initial,
        time_grid=TimeGrid.uniform(0.1, 1.0),
        **kwargs,  # type: ignore[arg-type]
    )


def test_affine_cell_averages_are_exact() -> None:
    mesh = build_interval_mesh(1.0, 4)
    field = ScalarField(constant=0.1, gradient=(0.1,))
    np.testing.assert_allclose(
        field.cell_averages(mesh), [0.1125, 0.1375, 0.1625, 0.1875], rtol=1e-15
    )


def test_box_indicator_averages_in_1d() -> None:
    mesh = build_interval_mesh(1.0, 4)
    field = ScalarField(boxes=(BoxIndicator(Box((0.0, 0.3)), 1.0),))
    averages = field.cell_averages(mesh)
    np.testing.assert_allclose(averages, [1.0, 0.2, 0.0, 0.0], atol=1e-15)


def test_box_indicator_integral_in_2d() -> None:
    mesh = build_square_mesh(8)
    field = ScalarField(boxes=(BoxIndicator(Box((0.0, 0.5, 0.2, 0.7)), 0.3),))
    total = float(mesh.cell_measures @ field.cell_averages(mesh))
    assert total == pytest.approx(0.3 * 0.25, rel=1e-12)


def test_box_contains_is_closed() -> None:
    box = Box((0.0, 0.5, 1.0, 1.0))
    points = np.array([[0.5, 1.0], [0.25, 1.0], [0.6, 1.0], [0.25, 0.9]])
    assert list(box.contains(points)) == [True, True, False, False]


def test_box_rejects_bad_bounds() -> None:
    with pytest.raises(ConfigurationError):
        Box((0.0, 1.0, 2.0))
    with pytest.raises(ConfigurationError):
        Box((1.0, 0.0))


def test_uniform_time_grid() -> None:
    grid = TimeGrid.uniform(1e-3, 1.0)
    assert grid.n_steps == 1000
    assert grid.final_time == pytest.approx(1.0, rel=1e-12)
    short = TimeGrid.uniform(0.3, 1.0)
    assert short.taus == pytest.approx((0.3, 0.3, 0.3, 0.1))


def test_time_grid_rejects_tiny_steps() -> None:
    with pytest.raises(ConfigurationError):
        TimeGrid((1e-3, 1e-13))
    with pytest.raises(ConfigurationError):
        TimeGrid(())


def test_problem_spec_validation() -> None:
    with pytest.raises(ConfigurationError):
        _spec()
    with pytest.raises(ConfigurationError):
        ProblemSpec(
            species=(Species("a", 1.0, 1),),
            lambda_sq=0.0,
            initial_fractions=(ScalarField(constant=0.1),),
            time_grid=TimeGrid.uniform(0.1, 1.0),
        )
    with pytest.raises(ConfigurationError):
        Species("a", -1.0, 1)


def test_discretize_tags_dirichlet_region() -> None:
    mesh = build_square_mesh(24)
    spec = _spec(
        ScalarField(constant=0.2),
        dirichlet_region=Box((0.0, 0.5, 1.0, 1.0)),
        phi_dirichlet=ScalarField(constant=2.0),
    )
    problem = discretize(spec, mesh)
    dirichlet = problem.mesh.dirichlet
    h = 1.0 / 24
    assert 0.5 - h <= problem.mesh.face_measures[dirichlet].sum() <= 0.5 + h
    np.testing.assert_allclose(problem.mesh.face_midpoints[dirichlet, 1], 1.0)
    np.testing.assert_allclose(problem.phi_dirichlet[dirichlet], 2.0)
    assert np.all(problem.phi_dirichlet[~dirichlet] == 0.0)
    boundary = ~problem.mesh.interior
    assert np.all(problem.mesh.face_kinds[boundary & ~dirichlet] == FaceKind.NEUMANN)


def test_discretize_keeps_interval_endpoints_without_region() -> None:
    problem = discretize(_spec(ScalarField(constant=0.2)), build_interval_mesh(1.0, 8))
    assert list(np.flatnonzero(problem.mesh.dirichlet)) == [0, 8]
    assert problem.n_unknowns == 16
    masses = problem.initial_masses()
    np.testing.assert_allclose(masses, [0.8, 0.2])


def test_empty_dirichlet_region_is_rejected() -> None:
    spec = _spec(ScalarField(constant=0.2), dirichlet_region=Box((0.4, 0.6)))
    with pytest.raises(ConfigurationError, match="Dirichlet"):
        discretize(spec, build_interval_mesh(1.0, 8))


def test_initial_data_outside_simplex_is_rejected() -> None:
    mesh = build_interval_mesh(1.0, 4)
    with pytest.raises(DataError, match="initial"):
        discretize(_spec(ScalarField(constant=0.6), ScalarField(constant=0.6)), mesh)
    with pytest.raises(DataError, match=r"initial\.u1"):
        discretize(_spec(ScalarField(constant=0.1, gradient=(-0.5,))), mesh)
    with pytest.raises(DataError, match="mass"):
        discretize(_spec(ScalarField(constant=0.0)), mesh)


def test_cell_table_background() -> None:
    spec = _spec(ScalarField(constant=0.2), background_charge=CellTable((1.0, -1.0)))
    problem = discretize(spec, build_interval_mesh(1.0, 2))
    np.testing.assert_allclose(problem.background, [1.0, -1.0])
    with pytest.raises(ConfigurationError):
        discretize(spec, build_interval_mesh(1.0, 3))


def test_from_dict_parses_the_configuration_schema() -> None:
    spec = ProblemSpec.from_dict(
        {
            "species": [
                {"name": "a", "D": 1, "z": 2},
                {"name": "b", "D": 2.0, "z": -1},
            ],
            "lambda_sq": 0.16,
            "initial": {
                "b": 0.3,
                "a": {"boxes": [{"box": [0, 0.5, 0, 0.5], "value": 0.3}]},
            },
            "dirichlet": {"box": [0, 0.5, 1, 1], "phi": {"affine": [1.0, 2.0, 0.0]}},
            "f": {"const": -0.1},
            "time": {"taus": [0.1, 0.2]},
            "kernel": "sqra",
        }
    )
    assert [s.name for s in spec.species] == ["a", "b"]
    assert spec.species[0].diffusion == 1.0
    assert spec.initial_fractions[1] == ScalarField(constant=0.3)
    assert spec.initial_fractions[0].boxes[0].value == 0.3
    assert spec.phi_dirichlet == ScalarField(constant=1.0, gradient=(2.0, 0.0))
    assert spec.background_charge == ScalarField(constant=-0.1)
    assert spec.time_grid.taus == (0.1, 0.2)
    assert spec.kernel is KernelKind.SQRA


@pytest.mark.parametrize(
    "patch,key",
    [
        ({"lambda_sq": "big"}, "lambda_sq"),
        ({"species": []}, "species"),
        ({"kernel": "upwind"}, "kernel"),
        ({"initial": [{"slope": 1}]}, "initial[0]"),
        ({"time": {"tau": 0.1}}, "time.T"),
    ],
)
def test_from_dict_errors_name_the_key(patch: dict[str, object], key: str) -> None:
    data: dict[str, object] = {
        "species": [{"D": 1.0, "z": 1}],
        "lambda_sq": 1.0,
        "initial": [0.2],
        "time": {"tau": 0.1, "T": 1.0},
    }
    data.update(patch)
    with pytest.raises(ConfigurationError) as info:
        ProblemSpec.from_dict(data)
    assert key in str(info.value)
