"""
Triangle meshes: Gmsh MSH 2.2 ASCII import and a built-in unit-square generator.

Cell centers are triangle circumcenters, which makes any Delaunay
triangulation admissible for two-point fluxes.
"""

import logging
from pathlib import Path
from typing import Final

import numpy as np

from ..errors import AdmissibilityError, MeshError, UnsupportedElementError
from .base import (
    GENERATED_ORTHOGONALITY_TOL,
    IMPORTED_ORTHOGONALITY_TOL,
    AdmissibleMesh,
    FloatArray,
    IntArray,
    validate_admissibility,
)
from .geometry import circumcenters
from .polygonal import polygon_mesh

LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

TRIANGLE: Final[int] = 2
# point, line and higher-order line elements carry boundary/geometry
# bookkeeping only and are skipped
IGNORED_ELEMENTS: Final[frozenset[int]] = frozenset({1, 8, 15, 26, 27, 28})


def _section(lines: list[str], name: str) -> list[str]:
    try:
        start = lines.index(f"${name}")
        stop = lines.index(f"$End{name}", start)
    except ValueError as exc:
        raise MeshError(f"missing ${name} section") from exc
    return lines[start + 1 : stop]


def parse_msh(msh_text: str) -> tuple[FloatArray, IntArray]:
    """Read node coordinates and triangle connectivity from MSH 2.2 ASCII."""
    lines = [line.strip() for line in msh_text.splitlines() if line.strip()]

    header = _section(lines, "MeshFormat")
    if not header or header[0].split()[:2] != ["2.2", "0"]:
        raise MeshError("only MSH format 2.2 ASCII is supported")

    node_lines = _section(lines, "Nodes")
    try:
        n_nodes = int(node_lines[0])
        node_ids: dict[int, int] = {}
        coords = np.empty((n_nodes, 3))
        for row, line in enumerate(node_lines[1 : n_nodes + 1]):
            fields = line.split()
            node_ids[int(fields[0])] = row
            coords[row] = [float(v) for v in fields[1:4]]
    except (IndexError, ValueError) as exc:
        raise MeshError(f"malformed $Nodes section: {exc}") from exc
    if np.any(np.abs(coords[:, 2]) > 0.0):
        raise MeshError("only planar meshes (z = 0) are supported")

    element_lines = _section(lines, "Elements")
    try:
        n_elements = int(element_lines[0])
        elements = [
            [int(v) for v in line.split()]
            for line in element_lines[1 : n_elements + 1]
        ]
    except (IndexError, ValueError) as exc:
        raise MeshError(f"malformed $Elements section: {exc}") from exc

    triangles: list[list[int]] = []
    for fields in elements:
        element_type, n_tags = fields[1], fields[2]
        if element_type == TRIANGLE:
            vertices = fields[3 + n_tags : 6 + n_tags]
            try:
                triangles.append([node_ids[v] for v in vertices])
            except KeyError as exc:
                raise MeshError(f"element {fields[0]} uses unknown node {exc}") from exc
        elif element_type not in IGNORED_ELEMENTS:
            raise UnsupportedElementError(
                f"element {fields[0]} has unsupported type {element_type}"
            )
    if not triangles:
        raise MeshError("mesh contains no triangles")

    return coords[:, :2], np.asarray(triangles, dtype=np.int64)


def triangle_mesh(
    nodes: FloatArray, triangles: IntArray, *, orthogonality_tolerance: float
) -> AdmissibleMesh:
    """Admissible mesh with circumcenters as cell centers."""
    centers = circumcenters(nodes[triangles])
    mesh = polygon_mesh(
        nodes,
        triangles.tolist(),
        centers,
        orthogonality_tolerance=orthogonality_tolerance,
    )
    report = validate_admissibility(mesh)
    if not report.passed:
        raise AdmissibilityError("; ".join(report.failures))
    return mesh


def import_simplicial_mesh(msh_text: str) -> AdmissibleMesh:
    """Build an admissible mesh from a Delaunay triangulation in MSH 2.2 ASCII."""
    nodes, triangles = parse_msh(msh_text)
    mesh = triangle_mesh(
        nodes, triangles, orthogonality_tolerance=IMPORTED_ORTHOGONALITY_TOL
    )
    LOGGER.info(
        "Imported %d triangles and %d edges (h = %.3e)",
        mesh.n_cells,
        mesh.n_faces,
        mesh.mesh_size,
    )
    return mesh


def read_msh(path: Path) -> AdmissibleMesh:
    """Import a mesh file; see :func:`import_simplicial_mesh`."""
    return import_simplicial_mesh(path.read_text(encoding="utf-8"))


def square_triangulation(n_columns: int) -> tuple[FloatArray, IntArray]:
    """Nodes and triangles of an isosceles-strip triangulation of ``(0, 1)^2``.

    Rows alternate between nodes at ``i h`` and at ``(i + 1/2) h`` (plus both
    walls). Row spacing close to ``h sqrt(3) / 2`` keeps every triangle acute
    except the right triangles closing each strip at the walls.
    """
    if n_columns < 2:
        raise MeshError(f"n_columns must be at least 2, got {n_columns}")
    h = 1.0 / n_columns
    n_rows = max(2, int(round(2.0 / (np.sqrt(3.0) * h))))
    heights = np.linspace(0.0, 1.0, n_rows + 1)

    even_x = np.linspace(0.0, 1.0, n_columns + 1)
    odd_x = np.concatenate([[0.0], (np.arange(n_columns) + 0.5) * h, [1.0]])

    coords: list[FloatArray] = []
    rows: list[IntArray] = []
    offset = 0
    for j, y in enumerate(heights):
        xs = even_x if j % 2 == 0 else odd_x
        coords.append(np.column_stack([xs, np.full_like(xs, y)]))
        rows.append(np.arange(offset, offset + len(xs)))
        offset += len(xs)
    nodes = np.vstack(coords)

    triangles: list[tuple[int, int, int]] = []
    for j in range(n_rows):
        even, odd = (rows[j], rows[j + 1]) if j % 2 == 0 else (rows[j + 1], rows[j])
        a = b = 0
        while a < len(even) - 1 or b < len(odd) - 1:
            advance_even = b == len(odd) - 1 or (
                a < len(even) - 1 and nodes[even[a + 1], 0] <= nodes[odd[b + 1], 0]
            )
            if advance_even:
                triangles.append((even[a], even[a + 1], odd[b]))
                a += 1
            else:
                triangles.append((even[a], odd[b], odd[b + 1]))
                b += 1
    return nodes, np.asarray(triangles, dtype=np.int64)


def build_square_mesh(n_columns: int) -> AdmissibleMesh:
    """Built-in admissible triangle mesh of the unit square."""
    nodes, triangles = square_triangulation(n_columns)
    return triangle_mesh(
        nodes, triangles, orthogonality_tolerance=GENERATED_ORTHOGONALITY_TOL
    )
