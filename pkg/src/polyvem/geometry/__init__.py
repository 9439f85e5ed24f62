from .curves import Curve
from .mesh import (
    DIRICHLET,
    NEUMANN,
    Element2D,
    Element3D,
    Mesh,
    domain_quadrature,
    element_measures,
    validate_mesh,
)
from .polygon import Polygon2D
from .polyhedron import Polyhedron3D, SpherePatch, plane_frame, sphere_patch_rule
from .quadrature import (
    QuadratureRule,
    boundary_quadrature,
    curve_rule,
    segment_rule,
    polygon_area,
    polygon_centroid,
)
from .ribbon import Ribbon, build_ribbon, clip_triangle
from . import builders
from .meshfile import MeshFormatError, format_mesh, parse_mesh, read_mesh, write_mesh

__all__ = [
    "Curve", "DIRICHLET", "NEUMANN", "Element2D", "Element3D", "Mesh",
    "domain_quadrature", "element_measures", "validate_mesh", "Polygon2D",
    "Polyhedron3D", "SpherePatch", "plane_frame", "sphere_patch_rule",
    "QuadratureRule", "boundary_quadrature", "curve_rule", "segment_rule",
    "polygon_area", "polygon_centroid", "Ribbon", "build_ribbon",
    "clip_triangle", "builders", "MeshFormatError", "format_mesh",
    "parse_mesh", "read_mesh", "write_mesh",
]
