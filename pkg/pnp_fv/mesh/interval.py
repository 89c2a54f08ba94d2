"""
Uniform meshes of a 1D interval ``(0, L)``.
"""

import numpy as np

from ..errors import InvalidArgumentError
from .base import GENERATED_ORTHOGONALITY_TOL, AdmissibleMesh, FaceKind


def build_interval_mesh(domain_length: float, n_cells: int) -> AdmissibleMesh:
    """Uniform mesh of ``(0, domain_length)`` with ``n_cells`` cells.

    Face ``j`` sits at ``x = j h``; faces ``0`` and ``n_cells`` are the two
    endpoints and are tagged Dirichlet until a problem retags them.
    """
    if n_cells < 2:
        raise InvalidArgumentError(f"n_cells must be at least 2, got {n_cells}")
    if not domain_length > 0.0:
        raise InvalidArgumentError(
            f"domain_length must be positive, got {domain_length}"
        )

    h = domain_length / n_cells
    nodes = np.linspace(0.0, domain_length, n_cells + 1)
    centers = 0.5 * (nodes[:-1] + nodes[1:])

    n_faces = n_cells + 1
    face_cells = np.empty((n_faces, 2), dtype=np.int64)
    face_cells[1:-1, 0] = np.arange(n_cells - 1)
    face_cells[1:-1, 1] = np.arange(1, n_cells)
    face_cells[0] = (0, -1)
    face_cells[-1] = (n_cells - 1, -1)

    sides = np.full((n_faces, 2), 0.5 * h)
    sides[0, 1] = 0.0
    sides[-1, 1] = 0.0

    normals = np.ones((n_faces, 1))
    normals[0, 0] = -1.0

    kinds = np.full(n_faces, FaceKind.INTERIOR, dtype=np.int8)
    kinds[[0, -1]] = FaceKind.DIRICHLET

    return AdmissibleMesh(
        dimension=1,
        cell_measures=np.full(n_cells, h),
        cell_centers=centers[:, None],
        cell_centroids=centers[:, None],
        cell_diameters=np.full(n_cells, h),
        cell_vertices=np.column_stack([nodes[:-1], nodes[1:]])[:, :, None],
        face_measures=np.ones(n_faces),
        face_cells=face_cells,
        face_side_distances=sides,
        face_normals=normals,
        face_midpoints=nodes[:, None],
        face_kinds=kinds,
        domain_measure=float(domain_length),
        orthogonality_tolerance=GENERATED_ORTHOGONALITY_TOL,
    )
