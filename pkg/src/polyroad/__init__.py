"""polyroad: dynamic free-space roadmap over convex polyhedra."""

from .geometry import (
    AABB,
    OBB,
    Ellipsoid,
    GeometryError,
    DegenerateGeometryError,
    UnboundedError,
    HPolyhedron,
    Hyperplane,
)

__all__ = [
    "AABB",
    "OBB",
    "Ellipsoid",
    "GeometryError",
    "DegenerateGeometryError",
    "UnboundedError",
    "HPolyhedron",
    "Hyperplane",
]

__version__ = "0.1.0"
