"""
Generic 2D polygonal meshes from node coordinates, cell connectivity and centers.
"""

from typing import Sequence

import numpy as np

from ..errors import MeshError
from .base import (
    GENERATED_ORTHOGONALITY_TOL,
    AdmissibleMesh,
    FaceKind,
    FloatArray,
)
from .geometry import polygon_centroid, polygon_diameter, signed_area


def polygon_mesh(
    nodes: FloatArray,
    cells: Sequence[Sequence[int]],
    centers: FloatArray,
    *,
    orthogonality_tolerance: float = GENERATED_ORTHOGONALITY_TOL,
) -> AdmissibleMesh:
    """Assemble an :class:`AdmissibleMesh` from convex polygonal cells.

    Shared edges become interior faces, the rest boundary faces tagged
    Neumann. The domain measure is recomputed from the boundary loop so the
    partition check compares two independent sums.
    """
    if not cells:
        raise MeshError("no cells given")
    n_vertices = {len(cell) for cell in cells}
    if len(n_vertices) != 1:
        raise MeshError("all cells must have the same number of vertices")

    oriented: list[list[int]] = []
    for cell in cells:
        ids = [int(v) for v in cell]
        if signed_area(nodes[ids]) < 0.0:
            ids.reverse()
        oriented.append(ids)

    vertices = np.stack([nodes[ids] for ids in oriented])
    measures = np.array([signed_area(poly) for poly in vertices])
    centroids = np.stack([polygon_centroid(poly) for poly in vertices])
    diameters = np.array([polygon_diameter(poly) for poly in vertices])

    edge_index: dict[tuple[int, int], int] = {}
    owners: list[int] = []
    others: list[int] = []
    starts: list[int] = []
    ends: list[int] = []
    for k, ids in enumerate(oriented):
        for p, q in zip(ids, ids[1:] + ids[:1]):
            key = (min(p, q), max(p, q))
            face = edge_index.get(key)
            if face is None:
                edge_index[key] = len(owners)
                owners.append(k)
                others.append(-1)
                starts.append(p)
                ends.append(q)
            elif others[face] == -1:
                others[face] = k
            else:
                raise MeshError(f"edge {key} is shared by more than two cells")

    face_cells = np.column_stack([owners, others]).astype(np.int64)
    p = nodes[np.asarray(starts)]
    q = nodes[np.asarray(ends)]
    tangent = q - p
    lengths = np.sqrt((tangent**2).sum(axis=1))
    normals = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / lengths[:, None]
    midpoints = 0.5 * (p + q)

    centers = np.asarray(centers, dtype=np.float64)
    interior = face_cells[:, 1] >= 0
    sides = np.zeros((len(owners), 2))
    sides[:, 0] = ((midpoints - centers[face_cells[:, 0]]) * normals).sum(axis=1)
    sides[interior, 1] = (
        (centers[face_cells[interior, 1]] - midpoints[interior]) * normals[interior]
    ).sum(axis=1)

    kinds = np.where(interior, FaceKind.INTERIOR, FaceKind.NEUMANN).astype(np.int8)
    boundary_area = 0.5 * float(
        (p[~interior, 0] * q[~interior, 1] - q[~interior, 0] * p[~interior, 1]).sum()
    )

    return AdmissibleMesh(
        dimension=2,
        cell_measures=measures,
        cell_centers=centers,
        cell_centroids=centroids,
        cell_diameters=diameters,
        cell_vertices=vertices,
        face_measures=lengths,
        face_cells=face_cells,
        face_side_distances=sides,
        face_normals=normals,
        face_midpoints=midpoints,
        face_kinds=kinds,
        domain_measure=boundary_area,
        orthogonality_tolerance=orthogonality_tolerance,
    )
