"""
Planar polygon helpers used by the 2D mesh builders and by exact cell averaging.
"""

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]


def signed_area(polygon: FloatArray) -> float:
    """Shoelace area; positive for counter-clockwise vertex order."""
    if len(polygon) < 3:
        return 0.0
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(polygon: FloatArray) -> FloatArray:
    """Area centroid of a simple polygon."""
    x, y = polygon[:, 0], polygon[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(cross.sum())
    if area == 0.0:
        return np.asarray(polygon.mean(axis=0), dtype=np.float64)
    cx = float(((x + xn) * cross).sum()) / (6.0 * area)
    cy = float(((y + yn) * cross).sum()) / (6.0 * area)
    return np.array([cx, cy])


def polygon_diameter(polygon: FloatArray) -> float:
    """Largest vertex-to-vertex distance (the diameter of a convex polygon)."""
    diffs = polygon[:, None, :] - polygon[None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=-1)).max())


def _clip_half_plane(
    polygon: list[FloatArray], axis: int, bound: float, keep_below: bool
) -> list[FloatArray]:
    """One Sutherland-Hodgman pass against an axis-aligned half plane."""
    if not polygon:
        return polygon

    def inside(point: FloatArray) -> bool:
        return bool(point[axis] <= bound) if keep_below else bool(point[axis] >= bound)

    clipped: list[FloatArray] = []
    previous = polygon[-1]
    for current in polygon:
        if inside(current):
            if not inside(previous):
                clipped.append(_intersect(previous, current, axis, bound))
            clipped.append(current)
        elif inside(previous):
            clipped.append(_intersect(previous, current, axis, bound))
        previous = current
    return clipped


def _intersect(p: FloatArray, q: FloatArray, axis: int, bound: float) -> FloatArray:
    t = (bound - p[axis]) / (q[axis] - p[axis])
    point = p + t * (q - p)
    point[axis] = bound
    return point


def clip_polygon_to_box(
    polygon: FloatArray, box: tuple[float, float, float, float]
) -> FloatArray:
    """Intersection of a convex polygon with ``[xmin, xmax] x [ymin, ymax]``."""
    xmin, xmax, ymin, ymax = box
    vertices = [np.array(v, dtype=np.float64) for v in polygon]
    vertices = _clip_half_plane(vertices, 0, xmin, keep_below=False)
    vertices = _clip_half_plane(vertices, 0, xmax, keep_below=True)
    vertices = _clip_half_plane(vertices, 1, ymin, keep_below=False)
    vertices = _clip_half_plane(vertices, 1, ymax, keep_below=True)
    if not vertices:
        return np.zeros((0, 2))
    return np.vstack(vertices)


def circumcenters(triangles: FloatArray) -> FloatArray:
    """Circumcenters of an ``(n, 3, 2)`` stack of triangles."""
    a, b, c = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    ab, ac = b - a, c - a
    d = 2.0 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
    ab2 = (ab**2).sum(axis=1)
    ac2 = (ac**2).sum(axis=1)
    ux = (ac[:, 1] * ab2 - ab[:, 1] * ac2) / d
    uy = (ab[:, 0] * ac2 - ac[:, 0] * ab2) / d
    return a + np.column_stack([ux, uy])
