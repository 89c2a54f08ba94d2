"""
Admissible finite-volume meshes: generation, import, validation and export.
"""

from typing import Final

from .base import (
    AdmissibleMesh,
    FaceKind,
    ValidationReport,
    mesh_to_json,
    validate_admissibility,
)
from .factory import load_mesh
from .interval import build_interval_mesh
from .polygonal import polygon_mesh
from .simplicial import build_square_mesh, import_simplicial_mesh, read_msh

__all__: Final[list[str]] = [
    "AdmissibleMesh",
    "FaceKind",
    "ValidationReport",
    "build_interval_mesh",
    "build_square_mesh",
    "import_simplicial_mesh",
    "load_mesh",
    "mesh_to_json",
    "polygon_mesh",
    "read_msh",
    "validate_admissibility",
]
