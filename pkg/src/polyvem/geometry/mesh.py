"""Polytopal mesh model: elements, boundary tags, measures, validation."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .curves import Curve
from .polygon import Polygon2D
from .polyhedron import Polyhedron3D, SpherePatch

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass
class Element2D:
    """Polygonal cell: CCW vertex ids, optionally one curved (boundary) edge.

    Ribbon cells (``fem=True``) carry standard P_k finite elements integrated
    over ``clip`` (their intersection with the physical domain).
    """

    vertex_ids: tuple[int, ...]
    curves: dict[int, Curve] = field(default_factory=dict)
    fem: bool = False
    clip: Polygon2D | None = None

    def __post_init__(self):
        self.vertex_ids = tuple(int(v) for v in self.vertex_ids)
        if len(self.curves) > 1:
            raise ValueError("at most one curved edge per element")

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_ids)

    def edge_key(self, i: int) -> tuple[int, int]:
        a = self.vertex_ids[i]
        b = self.vertex_ids[(i + 1) % self.n_vertices]
        return (a, b) if a < b else (b, a)

    def edge_vertices(self, i: int) -> tuple[int, int]:
        return self.vertex_ids[i], self.vertex_ids[(i + 1) % self.n_vertices]


@dataclass
class Element3D:
    """Polyhedral cell: outward-oriented faces as global vertex id loops."""

    faces: list[tuple[int, ...]]
    curved_face: int | None = None
    sphere: SpherePatch | None = None

    def __post_init__(self):
        self.faces = [tuple(int(v) for v in f) for f in self.faces]

    @property
    def vertex_ids(self) -> tuple[int, ...]:
        seen: dict[int, None] = {}
        for f in self.faces:
            for v in f:
                seen.setdefault(v, None)
        return tuple(seen)

    def face_key(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(self.faces[i]))


class Mesh:
    """Mesh with boundary entity tags ('dirichlet' | 'neumann').

    2D boundary tags are keyed by sorted vertex pairs, 3D tags by sorted face
    vertex tuples.  Curved edges/faces are only allowed on the domain boundary.
    """

    def __init__(self, dim: int, vertices, elements, boundary_tags=None):
        self.dim = int(dim)
        self.vertices = np.asarray(vertices, dtype=float)
        self.elements = list(elements)
        self.boundary_tags = dict(boundary_tags or {})

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    # -- 2D helpers ---------------------------------------------------------
    def polygon(self, e: int) -> Polygon2D:
        el = self.elements[e]
        pts = self.vertices[list(el.vertex_ids)]
        region = Polygon2D(pts, dict(el.curves))
        return region

    def integration_region(self, e: int) -> Polygon2D:
        el = self.elements[e]
        if el.fem and el.clip is not None:
            return el.clip
        return self.polygon(e)

    def edge_counts(self) -> Counter:
        counts: Counter = Counter()
        for el in self.elements:
            if el.fem and el.clip is not None:
                pass
            for i in range(el.n_vertices):
                counts[el.edge_key(i)] += 1
        return counts

    def boundary_edges(self):
        """[(element index, local edge, key)] of edges lying on the boundary."""
        counts = self.edge_counts()
        out = []
        for e, el in enumerate(self.elements):
            for i in range(el.n_vertices):
                if counts[el.edge_key(i)] == 1:
                    out.append((e, i, el.edge_key(i)))
        return out

    # -- 3D helpers ---------------------------------------------------------
    def polyhedron(self, e: int) -> Polyhedron3D:
        el = self.elements[e]
        vids = list(el.vertex_ids)
        local = {v: i for i, v in enumerate(vids)}
        faces = [[local[v] for v in f] for f in el.faces]
        return Polyhedron3D(self.vertices[vids], faces, el.curved_face, el.sphere)

    def face_counts(self) -> Counter:
        counts: Counter = Counter()
        for el in self.elements:
            for i in range(len(el.faces)):
                counts[el.face_key(i)] += 1
        return counts

    def boundary_faces(self):
        counts = self.face_counts()
        out = []
        for e, el in enumerate(self.elements):
            for i in range(len(el.faces)):
                if counts[el.face_key(i)] == 1:
                    out.append((e, i, el.face_key(i)))
        return out

    def tag_of(self, key) -> str | None:
        return self.boundary_tags.get(key)

    def mesh_size(self) -> float:
        if self.dim == 2:
            return max(self.polygon(e).diameter for e in range(self.n_elements))
        return max(self.polyhedron(e).diameter for e in range(self.n_elements))


def element_measures(region) -> tuple[float, np.ndarray, float]:
    """(measure, centroid, diameter) of a Polygon2D or Polyhedron3D.

    Curved boundaries contribute through boundary (Green / divergence theorem)
    integrals.  Degenerate regions are rejected.
    """
    measure = region.measure
    if measure <= 0:
        raise ValueError(f"degenerate element: measure {measure:.3e} <= 0")
    return measure, region.centroid, region.diameter


def domain_quadrature(region, order: int):
    """Rule exact for P_order on straight-sided regions (fan sub-triangulation)."""
    if order < 0:
        raise ValueError("quadrature order must be >= 0")
    return region.quadrature(order)


@dataclass
class ElementDiagnostics:
    element: int
    measure: float
    diameter: float
    edge_ratio: float
    star_shaped: bool
    kernel_ratio: float


@dataclass
class MeshDiagnostics:
    ok: bool
    elements: list[ElementDiagnostics]
    conformity_violations: list[str]
    tag_violations: list[str]
    min_edge_ratio: float

    def summary(self) -> str:
        status = "pass" if self.ok else "FAIL"
        lines = [f"mesh validation: {status} (min edge ratio {self.min_edge_ratio:.4g})"]
        lines += [f"  conformity: {v}" for v in self.conformity_violations]
        lines += [f"  tags: {v}" for v in self.tag_violations]
        return "\n".join(lines)


def validate_mesh(mesh: Mesh, rho_geom: float = 0.05) -> MeshDiagnostics:
    """Per-element shape report plus conformity and boundary-tag checks.

    Star-shapedness (centroid kernel heuristic) is advisory; the pass/fail
    flag covers measures, edge/face size ratios, conformity and tags.
    """
    elements = []
    conf: list[str] = []
    tagv: list[str] = []
    min_ratio = np.inf

    if mesh.dim == 2:
        directed: Counter = Counter()
        for el in mesh.elements:
            for i in range(el.n_vertices):
                directed[el.edge_vertices(i)] += 1
        counts = mesh.edge_counts()
        for key, c in counts.items():
            if c > 2:
                conf.append(f"edge {key} shared by {c} elements")
            elif c == 2:
                a, b = key
                if directed[(a, b)] != 1 or directed[(b, a)] != 1:
                    conf.append(f"edge {key} traversed twice in the same direction")
        boundary_keys = {k for k, c in counts.items() if c == 1}
        for key in boundary_keys:
            if key not in mesh.boundary_tags:
                tagv.append(f"boundary edge {key} untagged")
        for key, tag in mesh.boundary_tags.items():
            if key not in boundary_keys:
                tagv.append(f"tag on non-boundary edge {key}")
            if tag not in (DIRICHLET, NEUMANN):
                tagv.append(f"unknown tag {tag!r} on {key}")
        for e, el in enumerate(mesh.elements):
            for i in el.curves:
                if el.edge_key(i) not in boundary_keys:
                    conf.append(f"element {e}: curved edge {el.edge_key(i)} is internal")
            poly = mesh.polygon(e)
            measure = poly.measure
            h = poly.diameter
            c = poly.centroid
            ratios = [poly.edge_length(i) / h for i in range(poly.n_edges)]
            # signed inward distance from centroid to each edge support line
            dmin = np.inf
            star = True
            for i in range(poly.n_edges):
                a, b = poly.edge(i)
                t = (b - a) / np.linalg.norm(b - a)
                n = np.array([t[1], -t[0]])  # outward for CCW
                d = (c - a) @ (-n)
                dmin = min(dmin, d)
                if d <= 0:
                    star = False
            elements.append(ElementDiagnostics(e, measure, h, min(ratios), star, dmin / h))
            min_ratio = min(min_ratio, min(ratios))
    else:
        counts = mesh.face_counts()
        for key, c in counts.items():
            if c > 2:
                conf.append(f"face {key} shared by {c} elements")
        boundary_keys = {k for k, c in counts.items() if c == 1}
        for key in boundary_keys:
            if key not in mesh.boundary_tags:
                tagv.append(f"boundary face {key} untagged")
        for key, tag in mesh.boundary_tags.items():
            if key not in boundary_keys:
                tagv.append(f"tag on non-boundary face {key}")
            if tag not in (DIRICHLET, NEUMANN):
                tagv.append(f"unknown tag {tag!r} on {key}")
        for e, el in enumerate(mesh.elements):
            if el.curved_face is not None and el.face_key(el.curved_face) not in boundary_keys:
                conf.append(f"element {e}: curved face is internal")
            poly = mesh.polyhedron(e)
            measure = poly.measure
            h = poly.diameter
            sizes = []
            for i in range(poly.n_faces):
                if poly.face_is_curved(i):
                    continue
                p2 = poly.face_polygon2d(i)
                sizes.append(p2.diameter / h)
            elements.append(ElementDiagnostics(e, measure, h, min(sizes), True, 1.0))
            min_ratio = min(min_ratio, min(sizes))

    ok = (not conf and not tagv and min_ratio >= rho_geom
          and all(d.measure > 0 for d in elements))
    return MeshDiagnostics(ok, elements, conf, tagv, float(min_ratio))
