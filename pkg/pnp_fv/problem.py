"""
Problem description and its discretization onto an admissible mesh.
"""

import logging
from dataclasses import dataclass, field
from typing import Final, Mapping, Sequence, cast

import numpy as np
from numpy.typing import NDArray

from .errors import AdmissibilityError, ConfigurationError, DataError
from .kernels import KernelKind
from .mesh import AdmissibleMesh, FaceKind, validate_admissibility
from .mesh.geometry import clip_polygon_to_box, signed_area

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

MIN_TIME_STEP: Final[float] = 1e-12
REGION_TOL: Final[float] = 1e-12
SIMPLEX_TOL: Final[float] = 1e-14


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``(xmin, xmax[, ymin, ymax])``; closed, with a small slack."""

    bounds: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.bounds) not in (2, 4):
            raise ConfigurationError(f"box needs 2 or 4 bounds, got {self.bounds}")
        for lo, hi in zip(self.bounds[::2], self.bounds[1::2]):
            if lo > hi:
                raise ConfigurationError(f"box bounds out of order: {self.bounds}")

    @property
    def dimension(self) -> int:
        return len(self.bounds) // 2

    def contains(self, points: FloatArray) -> NDArray[np.bool_]:
        inside = np.ones(points.shape[0], dtype=bool)
        for axis in range(min(self.dimension, points.shape[1])):
            lo, hi = self.bounds[2 * axis], self.bounds[2 * axis + 1]
            coord = points[:, axis]
            inside &= (coord >= lo - REGION_TOL) & (coord <= hi + REGION_TOL)
        return inside


@dataclass(frozen=True)
class BoxIndicator:
    """``value`` times the indicator of ``box``."""

    box: Box
    value: float


@dataclass(frozen=True)
class ScalarField:
    """Constant plus affine part plus a finite sum of scaled box indicators.

    Every member of this family has exact cell averages: the affine part is
    evaluated at the cell centroid and each indicator contributes the covered
    fraction of the cell.
    """

    constant: float = 0.0
    gradient: tuple[float, ...] = ()
    boxes: tuple[BoxIndicator, ...] = ()

    def evaluate(self, points: FloatArray) -> FloatArray:
        values = self._affine_at(points)
        for indicator in self.boxes:
            values += indicator.value * indicator.box.contains(points)
        return values

    def _affine_at(self, points: FloatArray) -> FloatArray:
        values = np.full(points.shape[0], self.constant)
        for axis, slope in enumerate(self.gradient):
            values += slope * points[:, axis]
        return values

    def cell_averages(self, mesh: AdmissibleMesh) -> FloatArray:
        """Exact mean value over every cell."""
        values = self._affine_at(mesh.cell_centroids)
        for indicator in self.boxes:
            values += indicator.value * _covered_fraction(mesh, indicator.box)
        return values

    def face_values(self, mesh: AdmissibleMesh) -> FloatArray:
        """Face-midpoint values (exact face means for affine data)."""
        return self.evaluate(mesh.face_midpoints)


@dataclass(frozen=True)
class CellTable:
    """Field given directly as one value per cell."""

    values: tuple[float, ...]

    def cell_averages(self, mesh: AdmissibleMesh) -> FloatArray:
        if len(self.values) != mesh.n_cells:
            raise ConfigurationError(
                f"cell table has {len(self.values)} entries for {mesh.n_cells} cells"
            )
        return np.asarray(self.values, dtype=np.float64)


def _covered_fraction(mesh: AdmissibleMesh, box: Box) -> FloatArray:
    """Share of each cell's measure lying inside ``box``."""
    if mesh.dimension == 1:
        left = mesh.cell_vertices[:, 0, 0]
        right = mesh.cell_vertices[:, 1, 0]
        overlap = np.minimum(right, box.bounds[1]) - np.maximum(left, box.bounds[0])
        return np.asarray(np.clip(overlap, 0.0, None) / mesh.cell_measures)
    if box.dimension != 2:
        raise ConfigurationError("2D meshes need boxes with four bounds")
    xmin, xmax, ymin, ymax = box.bounds
    fractions = np.zeros(mesh.n_cells)
    for k, polygon in enumerate(mesh.cell_vertices):
        lo, hi = polygon.min(axis=0), polygon.max(axis=0)
        if hi[0] <= xmin or lo[0] >= xmax or hi[1] <= ymin or lo[1] >= ymax:
            continue
        if lo[0] >= xmin and hi[0] <= xmax and lo[1] >= ymin and hi[1] <= ymax:
            fractions[k] = 1.0
            continue
        clipped = clip_polygon_to_box(polygon, (xmin, xmax, ymin, ymax))
        fractions[k] = abs(signed_area(clipped)) / mesh.cell_measures[k]
    return fractions


@dataclass(frozen=True)
class Species:
    """An ionic species: diffusion coefficient and integer charge."""

    name: str
    diffusion: float
    charge: int

    def __post_init__(self) -> None:
        if not self.diffusion > 0.0:
            raise ConfigurationError(
                f"species {self.name}: diffusion must be positive, got {self.diffusion}"
            )


@dataclass(frozen=True)
class TimeGrid:
    """Sequence of time steps ``tau^n``, ``n = 1..N``."""

    taus: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.taus:
            raise ConfigurationError("time grid has no steps")
        if min(self.taus) < MIN_TIME_STEP:
            raise ConfigurationError(
                f"time steps must be at least {MIN_TIME_STEP}, got {min(self.taus)}"
            )

    @classmethod
    def uniform(cls, tau: float, final_time: float) -> "TimeGrid":
        """Steps of size ``tau`` up to ``final_time``; the last one may be shorter."""
        if not tau > 0.0 or not final_time > 0.0:
            raise ConfigurationError("tau and T must be positive")
        n_steps = int(np.floor(final_time / tau + 1e-9))
        taus = [tau] * n_steps
        remainder = final_time - n_steps * tau
        if remainder > 1e-9 * tau:
            taus.append(remainder)
        return cls(tuple(taus))

    @property
    def n_steps(self) -> int:
        return len(self.taus)

    @property
    def times(self) -> FloatArray:
        """``t^0 = 0, t^1, ..., t^N``."""
        return np.concatenate([[0.0], np.cumsum(self.taus)])

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


Field = ScalarField | CellTable


@dataclass(frozen=True)
class ProblemSpec:
    """Complete physical and numerical problem description."""

    species: tuple[Species, ...]
    lambda_sq: float
    initial_fractions: tuple[ScalarField, ...]
    time_grid: TimeGrid
    background_charge: Field = field(default_factory=ScalarField)
    dirichlet_region: Box | None = None
    phi_dirichlet: ScalarField = field(default_factory=ScalarField)
    kernel: KernelKind = KernelKind.BERNOULLI

    def __post_init__(self) -> None:
        if not self.species:
            raise ConfigurationError("at least one species is required")
        if len(self.initial_fractions) != len(self.species):
            raise ConfigurationError(
                f"{len(self.species)} species but "
                f"{len(self.initial_fractions)} initial fractions"
            )
        if not self.lambda_sq > 0.0:
            raise ConfigurationError(
                f"lambda_sq must be positive, got {self.lambda_sq}"
            )

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "ProblemSpec":
        """Parse the JSON configuration schema."""
        raw_species = _require(data, "species")
        if not isinstance(raw_species, list) or not raw_species:
            raise ConfigurationError("key 'species': expected a nonempty list")
        species: list[Species] = []
        for index, item in enumerate(cast(list[object], raw_species)):
            entry = _as_mapping(item, f"species[{index}]")
            species.append(
                Species(
                    name=str(entry.get("name", f"u{index + 1}")),
                    diffusion=_as_float(_require(entry, "D"), f"species[{index}].D"),
                    charge=_as_int(_require(entry, "z"), f"species[{index}].z"),
                )
            )

        raw_initial = _require(data, "initial")
        if isinstance(raw_initial, Mapping):
            mapping = cast(Mapping[str, object], raw_initial)
            try:
                raw_list = [mapping[s.name] for s in species]
            except KeyError as exc:
                raise ConfigurationError(
                    f"key 'initial': missing species {exc}"
                ) from exc
        elif isinstance(raw_initial, list):
            raw_list = cast(list[object], raw_initial)
        else:
            raise ConfigurationError("key 'initial': expected a list or an object")
        initial = tuple(
            _parse_field(item, f"initial[{i}]") for i, item in enumerate(raw_list)
        )

        background: Field = ScalarField()
        if "f" in data:
            raw_f = data["f"]
            if isinstance(raw_f, Mapping) and "cells" in raw_f:
                cells = cast(Mapping[str, object], raw_f)["cells"]
                if not isinstance(cells, list):
                    raise ConfigurationError("key 'f.cells': expected a list")
                background = CellTable(
                    tuple(_as_float(v, "f.cells") for v in cast(list[object], cells))
                )
            else:
                background = _parse_field(raw_f, "f")

        region: Box | None = None
        phi = ScalarField()
        if "dirichlet" in data:
            dirichlet = _as_mapping(data["dirichlet"], "dirichlet")
            raw_box = _require(dirichlet, "box", "dirichlet.box")
            if not isinstance(raw_box, list):
                raise ConfigurationError("key 'dirichlet.box': expected a list")
            bounds = cast(list[object], raw_box)
            region = Box(tuple(_as_float(v, "dirichlet.box") for v in bounds))
            phi = _parse_field(dirichlet.get("phi", 0.0), "dirichlet.phi")

        time = _as_mapping(_require(data, "time"), "time")
        if "taus" in time:
            raw_taus = time["taus"]
            if not isinstance(raw_taus, list):
                raise ConfigurationError("key 'time.taus': expected a list")
            grid = TimeGrid(
                tuple(_as_float(v, "time.taus") for v in cast(list[object], raw_taus))
            )
        else:
            grid = TimeGrid.uniform(
                _as_float(_require(time, "tau", "time.tau"), "time.tau"),
                _as_float(_require(time, "T", "time.T"), "time.T"),
            )

        kernel_name = str(data.get("kernel", "bernoulli"))
        try:
            kernel = KernelKind(kernel_name)
        except ValueError as exc:
            raise ConfigurationError(
                f"key 'kernel': unknown kernel {kernel_name}"
            ) from exc

        return cls(
            species=tuple(species),
            lambda_sq=_as_float(_require(data, "lambda_sq"), "lambda_sq"),
            initial_fractions=initial,
            time_grid=grid,
            background_charge=background,
            dirichlet_region=region,
            phi_dirichlet=phi,
            kernel=kernel,
        )


def _require(data: Mapping[str, object], key: str, label: str | None = None) -> object:
    if key not in data:
        raise ConfigurationError(f"missing key '{label or key}'")
    return data[key]


def _as_mapping(value: object, label: str) -> Mapping[str, object]:
    if not isinstance(value, Mapping):
        raise ConfigurationError(f"key '{label}': expected an object")
    return cast(Mapping[str, object], value)


def _as_float(value: object, label: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"key '{label}': expected a number, got {value!r}")
    return float(value)


def _as_int(value: object, label: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"key '{label}': expected an integer, got {value!r}")
    return value


def _parse_field(value: object, label: str) -> ScalarField:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return ScalarField(constant=float(value))
    spec = _as_mapping(value, label)
    unknown = set(spec) - {"const", "affine", "boxes"}
    if unknown:
        raise ConfigurationError(f"key '{label}': unknown field keys {sorted(unknown)}")

    constant = _as_float(spec.get("const", 0.0), f"{label}.const")
    gradient: tuple[float, ...] = ()
    if "affine" in spec:
        coefficients = spec["affine"]
        if not isinstance(coefficients, list) or len(coefficients) < 2:
            raise ConfigurationError(f"key '{label}.affine': expected [c0, gx(, gy)]")
        numbers = [
            _as_float(v, f"{label}.affine") for v in cast(list[object], coefficients)
        ]
        constant += numbers[0]
        gradient = tuple(numbers[1:])

    boxes: list[BoxIndicator] = []
    raw_boxes = spec.get("boxes", [])
    if not isinstance(raw_boxes, list):
        raise ConfigurationError(f"key '{label}.boxes': expected a list")
    for i, item in enumerate(cast(list[object], raw_boxes)):
        entry = _as_mapping(item, f"{label}.boxes[{i}]")
        raw_bounds = _require(entry, "box", f"{label}.boxes[{i}].box")
        if not isinstance(raw_bounds, list):
            raise ConfigurationError(f"key '{label}.boxes[{i}].box': expected a list")
        bounds = tuple(
            _as_float(v, f"{label}.boxes[{i}].box")
            for v in cast(list[object], raw_bounds)
        )
        boxes.append(
            BoxIndicator(
                box=Box(bounds),
                value=_as_float(_require(entry, "value"), f"{label}.boxes[{i}].value"),
            )
        )
    return ScalarField(constant=constant, gradient=gradient, boxes=tuple(boxes))


@dataclass(frozen=True, eq=False)
class DiscreteProblem:
    """A :class:`ProblemSpec` projected onto a mesh."""

    mesh: AdmissibleMesh
    species_names: tuple[str, ...]
    diffusion: FloatArray
    charges: FloatArray
    lambda_sq: float
    background: FloatArray
    phi_dirichlet: FloatArray
    initial_fractions: FloatArray
    time_grid: TimeGrid
    kernel: KernelKind = KernelKind.BERNOULLI

    @property
    def n_species(self) -> int:
        return int(self.diffusion.shape[0])

    @property
    def n_cells(self) -> int:
        return self.mesh.n_cells

    @property
    def n_unknowns(self) -> int:
        return (self.n_species + 1) * self.n_cells

    @property
    def initial_solvent(self) -> FloatArray:
        return np.asarray(1.0 - self.initial_fractions.sum(axis=0))

    def initial_masses(self) -> FloatArray:
        """``sum_K m_K u_{i,K}^0`` for ``i = 0..I``."""
        fractions = np.vstack([self.initial_solvent, self.initial_fractions])
        return np.asarray(fractions @ self.mesh.cell_measures)


def discretize(spec: ProblemSpec, mesh: AdmissibleMesh) -> DiscreteProblem:
    """Cell-average the data of ``spec`` and tag the Dirichlet faces of ``mesh``."""
    report = validate_admissibility(mesh)
    if not report.passed:
        raise AdmissibilityError("; ".join(report.failures))

    if spec.dirichlet_region is not None:
        boundary = ~mesh.interior
        selected = spec.dirichlet_region.contains(mesh.face_midpoints)
        kinds = np.where(
            boundary,
            np.where(selected, FaceKind.DIRICHLET, FaceKind.NEUMANN),
            FaceKind.INTERIOR,
        ).astype(np.int8)
        mesh = mesh.with_face_kinds(kinds)
    if not np.any(mesh.dirichlet):
        raise ConfigurationError("empty Dirichlet boundary: no face matches the region")

    phi_dirichlet = np.where(mesh.dirichlet, spec.phi_dirichlet.face_values(mesh), 0.0)
    background = spec.background_charge.cell_averages(mesh)
    fractions = np.vstack([u.cell_averages(mesh) for u in spec.initial_fractions])

    names = tuple(s.name for s in spec.species)
    for i, name in enumerate(names):
        if np.any(fractions[i] < -SIMPLEX_TOL):
            cell = int(np.argmin(fractions[i]))
            raise DataError(
                f"initial.{name}: negative fraction {fractions[i, cell]!r} "
                f"in cell {cell}"
            )
    solvent = 1.0 - fractions.sum(axis=0)
    if np.any(solvent < -SIMPLEX_TOL):
        cell = int(np.argmin(solvent))
        raise DataError(
            f"initial: fractions sum to {1.0 - solvent[cell]!r} > 1 in cell {cell}"
        )
    measures = mesh.cell_measures
    masses = np.concatenate([[solvent @ measures], fractions @ measures])
    for label, mass in zip(("solvent",) + names, masses):
        if not mass > 0.0:
            raise DataError(f"initial.{label}: total initial mass must be positive")

    problem = DiscreteProblem(
        mesh=mesh,
        species_names=names,
        diffusion=np.array([s.diffusion for s in spec.species]),
        charges=np.array([float(s.charge) for s in spec.species]),
        lambda_sq=spec.lambda_sq,
        background=background,
        phi_dirichlet=phi_dirichlet,
        initial_fractions=fractions,
        time_grid=spec.time_grid,
        kernel=spec.kernel,
    )
    LOGGER.info(
        "Discretized %d species on %d cells (%d Dirichlet faces, %d steps)",
        problem.n_species,
        problem.n_cells,
        int(mesh.dirichlet.sum()),
        spec.time_grid.n_steps,
    )
    return problem
