"""
Admissible two-point-flux meshes and their validation.
"""

import dataclasses
import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Final

import numpy as np
from numpy.typing import NDArray

from ..errors import DegenerateMeshError, MeshError

LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]

PARTITION_RTOL: Final[float] = 1e-12
GEOMETRIC_EPSILON: Final[float] = 1e-12
GENERATED_ORTHOGONALITY_TOL: Final[float] = 1e-8
IMPORTED_ORTHOGONALITY_TOL: Final[float] = 1e-6

MIDPOINT_TAGGING_NOTE: Final[str] = (
    "boundary faces are assigned to the Dirichlet region by their midpoint"
)


class FaceKind(IntEnum):
    """Role of a face in the two-point flux stencil."""

    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2


@dataclass(frozen=True, eq=False)
class AdmissibleMesh:
    """Cells, faces and centers of an admissible finite-volume mesh.

    Face ``s`` separates ``face_cells[s, 0]`` (the cell its normal points out
    of) from ``face_cells[s, 1]``, which is ``-1`` on the boundary. The signed
    distances ``face_side_distances[s]`` are ``(d_Ks, d_Ls)``; the second one
    is zero on boundary faces.
    """

    dimension: int
    cell_measures: FloatArray
    cell_centers: FloatArray
    cell_centroids: FloatArray
    cell_diameters: FloatArray
    cell_vertices: FloatArray
    face_measures: FloatArray
    face_cells: IntArray
    face_side_distances: FloatArray
    face_normals: FloatArray
    face_midpoints: FloatArray
    face_kinds: NDArray[np.int8]
    domain_measure: float
    orthogonality_tolerance: float = GENERATED_ORTHOGONALITY_TOL

    def __post_init__(self) -> None:
        n_cells = self.cell_measures.shape[0]
        n_faces = self.face_measures.shape[0]
        if n_cells == 0 or n_faces == 0:
            raise MeshError("mesh must contain cells and faces")
        if self.cell_centers.shape != (n_cells, self.dimension):
            raise MeshError("cell centers do not match the cell count")
        if self.face_cells.shape != (n_faces, 2):
            raise MeshError("face incidence must be an (n_faces, 2) table")
        if np.any(self.cell_measures <= 0.0):
            bad = int(np.argmin(self.cell_measures))
            raise MeshError(f"cell {bad} has nonpositive measure")
        if np.any(self.face_measures <= 0.0):
            bad = int(np.argmin(self.face_measures))
            raise MeshError(f"face {bad} has nonpositive measure")

        total = float(self.cell_measures.sum())
        if abs(total - self.domain_measure) > PARTITION_RTOL * self.domain_measure:
            raise MeshError(
                f"cells cover {total!r}, domain measure is {self.domain_measure!r}"
            )

        owners, others = self.face_cells[:, 0], self.face_cells[:, 1]
        if np.any(owners < 0) or np.any(owners >= n_cells) or np.any(others >= n_cells):
            raise MeshError("face incidence references unknown cells")
        interior = others >= 0
        if np.any(owners[interior] == others[interior]):
            raise MeshError("an interior face joins a cell to itself")
        if np.any((self.face_kinds == FaceKind.INTERIOR) != interior):
            raise MeshError("face kinds disagree with face incidence")

        epsilon = GEOMETRIC_EPSILON * self.mesh_size
        d_sigma = self.d_sigma
        if np.any(d_sigma <= epsilon):
            bad = int(np.argmin(d_sigma))
            raise DegenerateMeshError(bad, float(d_sigma[bad]))
        boundary_sides = self.face_side_distances[~interior, 0]
        if np.any(boundary_sides <= epsilon):
            bad = int(np.flatnonzero(~interior)[np.argmin(boundary_sides)])
            raise DegenerateMeshError(bad, float(self.face_side_distances[bad, 0]))

    @property
    def n_cells(self) -> int:
        return int(self.cell_measures.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.face_measures.shape[0])

    @property
    def interior(self) -> NDArray[np.bool_]:
        return self.face_kinds == FaceKind.INTERIOR

    @property
    def dirichlet(self) -> NDArray[np.bool_]:
        return self.face_kinds == FaceKind.DIRICHLET

    @property
    def neumann(self) -> NDArray[np.bool_]:
        return self.face_kinds == FaceKind.NEUMANN

    @property
    def d_sigma(self) -> FloatArray:
        """Center-to-center distance (interior) or center-to-face (boundary)."""
        return np.asarray(self.face_side_distances.sum(axis=1), dtype=np.float64)

    @property
    def transmissivity(self) -> FloatArray:
        """``a_sigma = m_sigma / d_sigma`` for every face."""
        return np.asarray(self.face_measures / self.d_sigma, dtype=np.float64)

    @property
    def mesh_size(self) -> float:
        """``h_T``, the largest cell diameter."""
        return float(self.cell_diameters.max())

    @property
    def geometric_epsilon(self) -> float:
        return GEOMETRIC_EPSILON * self.mesh_size

    def interior_pairs(self) -> tuple[IntArray, IntArray, IntArray]:
        """Face indices of interior faces with their K and L cells."""
        faces = np.flatnonzero(self.interior)
        return faces, self.face_cells[faces, 0], self.face_cells[faces, 1]

    def faces_per_cell(self) -> IntArray:
        counts = np.bincount(self.face_cells[:, 0], minlength=self.n_cells)
        others = self.face_cells[self.interior, 1]
        return np.asarray(
            counts + np.bincount(others, minlength=self.n_cells), dtype=np.int64
        )

    def faces_of(self, cell: int) -> IntArray:
        """Indices of the faces bounding ``cell`` (``E_K``)."""
        hits = (self.face_cells[:, 0] == cell) | (self.face_cells[:, 1] == cell)
        return np.flatnonzero(hits)

    def neighbor(self, cell: int, face: int) -> int | None:
        """The cell across ``face`` from ``cell``; ``None`` on the boundary."""
        owner, other = (int(c) for c in self.face_cells[face])
        if cell == owner:
            return other if other >= 0 else None
        if cell == other:
            return owner
        raise MeshError(f"face {face} does not bound cell {cell}")

    def regularity(self) -> float:
        """``zeta_T``: face count and diameter-to-distance ratio, maximized.

        Sides whose signed distance vanishes (circumcenters on a face) are
        left out of the ratio.
        """
        zeta = self.faces_per_cell().astype(np.float64)
        epsilon = self.geometric_epsilon
        for side in (0, 1):
            cells = self.face_cells[:, side]
            dist = self.face_side_distances[:, side]
            usable = (cells >= 0) & (dist > epsilon)
            ratio = self.cell_diameters[cells[usable]] / dist[usable]
            np.maximum.at(zeta, cells[usable], ratio)
        return float(zeta.max())

    def with_face_kinds(self, kinds: NDArray[np.int8]) -> "AdmissibleMesh":
        """Copy of the mesh with boundary faces retagged."""
        return dataclasses.replace(self, face_kinds=np.asarray(kinds, dtype=np.int8))

    def is_uniform_interval(self) -> bool:
        if self.dimension != 1:
            return False
        return bool(np.allclose(self.cell_measures, self.cell_measures[0], rtol=1e-12))


@dataclass(frozen=True, eq=False)
class ValidationReport:
    """Outcome of :func:`validate_admissibility`."""

    deviations: FloatArray
    min_d_sigma: float
    regularity: float
    mesh_size: float
    orthogonality_tolerance: float
    geometric_epsilon: float
    failures: tuple[str, ...]
    notes: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max()) if self.deviations.size else 0.0


def orthogonality_deviations(mesh: AdmissibleMesh) -> FloatArray:
    """Angle between ``x_L - x_K`` and the face normal, per face (0 on the boundary)."""
    deviations = np.zeros(mesh.n_faces)
    faces, owners, others = mesh.interior_pairs()
    offsets = mesh.cell_centers[others] - mesh.cell_centers[owners]
    normals = mesh.face_normals[faces]
    dots = (offsets * normals).sum(axis=1)
    if mesh.dimension == 2:
        cross = np.abs(offsets[:, 0] * normals[:, 1] - offsets[:, 1] * normals[:, 0])
    else:
        cross = np.zeros_like(dots)
    deviations[faces] = np.arctan2(cross, dots)
    return deviations


def validate_admissibility(mesh: AdmissibleMesh) -> ValidationReport:
    """Check the orthogonality condition and the face distances."""
    deviations = orthogonality_deviations(mesh)
    d_sigma = mesh.d_sigma
    epsilon = mesh.geometric_epsilon
    failures: list[str] = []

    worst = int(np.argmax(deviations))
    if deviations[worst] > mesh.orthogonality_tolerance:
        failures.append(
            f"face {worst} deviates from orthogonality by {deviations[worst]:.3e} rad"
        )
    min_d = float(d_sigma.min())
    if min_d <= epsilon:
        failures.append(f"face {int(np.argmin(d_sigma))} has d_sigma = {min_d:.3e}")

    notes = (MIDPOINT_TAGGING_NOTE,) if mesh.dimension == 2 else ()
    report = ValidationReport(
        deviations=deviations,
        min_d_sigma=min_d,
        regularity=mesh.regularity(),
        mesh_size=mesh.mesh_size,
        orthogonality_tolerance=mesh.orthogonality_tolerance,
        geometric_epsilon=epsilon,
        failures=tuple(failures),
        notes=notes,
    )
    LOGGER.debug(
        "Admissibility: max deviation %.3e, min d_sigma %.3e, zeta %.3f, h %.3e",
        report.max_deviation,
        report.min_d_sigma,
        report.regularity,
        report.mesh_size,
    )
    return report


def cell_face_lists(mesh: AdmissibleMesh) -> list[list[int]]:
    """``E_K`` for every cell, in increasing face order."""
    lists: list[list[int]] = [[] for _ in range(mesh.n_cells)]
    for face, (owner, other) in enumerate(mesh.face_cells.tolist()):
        lists[owner].append(face)
        if other >= 0:
            lists[other].append(face)
    return lists


def mesh_to_json(mesh: AdmissibleMesh) -> dict[str, object]:
    """Native JSON export: ``cells`` and ``faces`` arrays."""
    kind_names = {kind.value: kind.name.lower() for kind in FaceKind}
    face_lists = cell_face_lists(mesh)
    cells = [
        {
            "measure": float(mesh.cell_measures[k]),
            "center": [float(c) for c in mesh.cell_centers[k]],
            "faces": face_lists[k],
        }
        for k in range(mesh.n_cells)
    ]
    d_sigma = mesh.d_sigma
    faces = [
        {
            "measure": float(mesh.face_measures[s]),
            "d_sigma": float(d_sigma[s]),
            "kind": kind_names[int(mesh.face_kinds[s])],
            "neighbors": [int(c) for c in mesh.face_cells[s] if c >= 0],
        }
        for s in range(mesh.n_faces)
    ]
    return {"dimension": mesh.dimension, "cells": cells, "faces": faces}
