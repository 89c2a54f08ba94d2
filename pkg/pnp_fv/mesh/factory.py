"""
Factory resolving a mesh source string into an admissible mesh.
"""

from pathlib import Path

from ..errors import MeshError
from .base import AdmissibleMesh
from .interval import build_interval_mesh
from .simplicial import build_square_mesh, read_msh


def load_mesh(source: str, *, domain_length: float = 1.0) -> AdmissibleMesh:
    """
    Build or import the mesh named by ``source``.

    Args:
        source: ``builtin:1d:N`` (uniform interval of ``domain_length``),
            ``builtin:2d:N`` (unit-square triangles, ``N`` columns) or a
            path to an MSH 2.2 ASCII file
        domain_length: Interval length for builtin 1D meshes

    Returns:
        The admissible mesh
    """
    if source.startswith("builtin:"):
        parts = source.split(":")
        if len(parts) != 3:
            raise MeshError(f"malformed builtin mesh source: {source}")
        try:
            size = int(parts[2])
        except ValueError as exc:
            raise MeshError(f"malformed builtin mesh size in {source}") from exc
        if parts[1] == "1d":
            return build_interval_mesh(domain_length, size)
        if parts[1] == "2d":
            return build_square_mesh(size)
        raise MeshError(f"unknown builtin mesh family: {parts[1]}")

    path = Path(source)
    if path.suffix != ".msh":
        raise MeshError(f"unsupported mesh file type: {path}")
    return read_msh(path)
