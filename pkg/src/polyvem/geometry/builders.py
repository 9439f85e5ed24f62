"""Deterministic benchmark meshes for the built-in problems and test suites.

These are desk-scale fixtures (structured quads/hexes, centroidal polygon
meshes, polar disk meshes, boundary ribbons, sphere octants), not a general
mesh generator: external meshes are ingested through the text format.
"""
from __future__ import annotations

import numpy as np

from .curves import Curve
from .mesh import DIRICHLET, NEUMANN, Element2D, Element3D, Mesh
from .polyhedron import SpherePatch
from .quadrature import polygon_centroid
from .ribbon import build_ribbon, clip_triangle


def unit_square_quads(n: int, tag: str = DIRICHLET) -> Mesh:
    xs = np.linspace(0.0, 1.0, n + 1)
    vid = lambda i, j: i * (n + 1) + j
    vertices = np.array([[xs[i], xs[j]] for i in range(n + 1) for j in range(n + 1)])
    elements = []
    for i in range(n):
        for j in range(n):
            elements.append(Element2D((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))))
    mesh = Mesh(2, vertices, elements)
    tag_boundary(mesh, lambda mid: tag)
    return mesh


def tag_boundary(mesh: Mesh, tag_fn) -> None:
    """Tag every boundary edge/face; tag_fn maps the entity midpoint to a tag."""
    if mesh.dim == 2:
        for e, i, key in mesh.boundary_edges():
            a, b = mesh.elements[e].edge_vertices(i)
            mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
            mesh.boundary_tags[key] = tag_fn(mid)
    else:
        for e, i, key in mesh.boundary_faces():
            pts = mesh.vertices[list(mesh.elements[e].faces[i])]
            mesh.boundary_tags[key] = tag_fn(pts.mean(axis=0))


class _VertexPool:
    def __init__(self):
        self.coords: list[np.ndarray] = []
        self.lookup: dict[tuple, int] = {}

    def add(self, p) -> int:
        key = tuple(np.round(np.asarray(p, dtype=float), 11))
        if key not in self.lookup:
            self.lookup[key] = len(self.coords)
            self.coords.append(np.asarray(p, dtype=float))
        return self.lookup[key]

    def array(self) -> np.ndarray:
        return np.asarray(self.coords)


def centroidal_polygon_mesh(n_cells: int = 32, seed: int = 7, lloyd_iters: int = 3,
                            tag: str = DIRICHLET) -> Mesh:
    """Lloyd-relaxed clipped Voronoi mesh of the unit square (mirror trick)."""
    from scipy.spatial import Voronoi

    rng = np.random.default_rng(seed)
    seeds = rng.uniform(0.08, 0.92, size=(n_cells, 2))
    cells = None
    for _ in range(lloyd_iters + 1):
        mirrored = [seeds]
        for axis, val in ((0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)):
            m = seeds.copy()
            m[:, axis] = 2 * val - m[:, axis]
            mirrored.append(m)
        vor = Voronoi(np.vstack(mirrored))
        cells = []
        for s in range(n_cells):
            region = vor.regions[vor.point_region[s]]
            pts = vor.vertices[region]
            ang = np.arctan2(pts[:, 1] - seeds[s, 1], pts[:, 0] - seeds[s, 0])
            pts = pts[np.argsort(ang)]
            cells.append(np.clip(pts, 0.0, 1.0))
        seeds = np.array([polygon_centroid(c) for c in cells])

    cells = _collapse_short_edges(cells, 0.12 / np.sqrt(n_cells))
    pool = _VertexPool()
    elements = [Element2D(tuple(pool.add(p) for p in cell)) for cell in cells]
    mesh = Mesh(2, pool.array(), elements)
    tag_boundary(mesh, lambda mid: tag)
    return mesh


def _collapse_short_edges(cells: list[np.ndarray], tol: float) -> list[np.ndarray]:
    """Merge vertex clusters joined by edges shorter than tol (keeps conformity)."""
    key = lambda p: tuple(np.round(p, 11))
    parent: dict[tuple, tuple] = {}

    def find(k):
        while parent.get(k, k) != k:
            k = parent[k]
        return k

    for _ in range(3):
        merged = False
        for cell in cells:
            n = len(cell)
            for i in range(n):
                a, b = key(cell[i]), key(cell[(i + 1) % n])
                ra, rb = find(a), find(b)
                if ra != rb and np.linalg.norm(np.subtract(ra, rb)) < tol:
                    parent[rb] = ra
                    merged = True
        if not merged:
            break

    def snap(k):
        p = np.array(find(k), dtype=float)
        # cluster representatives keep their boundary alignment
        p[np.abs(p) < tol / 2] = 0.0
        p[np.abs(p - 1) < tol / 2] = 1.0
        return p

    out = []
    for cell in cells:
        pts: list[np.ndarray] = []
        for p in cell:
            q = snap(key(p))
            if not pts or np.linalg.norm(q - pts[-1]) > 1e-12:
                pts.append(q)
        if len(pts) > 1 and np.linalg.norm(pts[0] - pts[-1]) <= 1e-12:
            pts.pop()
        out.append(np.asarray(pts))
    return out


def _polar_mesh(n_rings: int, n_sectors: int, theta0: float, theta1: float,
                curved: bool, closed: bool, arc_tag: str, axis_tag: str,
                radius: float = 1.0) -> Mesh:
    n_cols = n_sectors if closed else n_sectors + 1
    thetas = theta0 + (theta1 - theta0) * np.arange(n_cols) / n_sectors
    pool = _VertexPool()
    center = pool.add((0.0, 0.0))
    vid = np.zeros((n_rings + 1, n_cols), dtype=int)
    for i in range(1, n_rings + 1):
        r = radius * i / n_rings
        for j in range(n_cols):
            vid[i, j] = pool.add((r * np.cos(thetas[j]), r * np.sin(thetas[j])))
    elements = []
    for j in range(n_sectors):
        jn = (j + 1) % n_cols
        elements.append(Element2D((center, vid[1, j], vid[1, jn])))
        for i in range(2, n_rings + 1):
            el = Element2D((vid[i - 1, j], vid[i, j], vid[i, jn], vid[i - 1, jn]))
            if curved and i == n_rings:
                el.curves[1] = Curve.arc((0, 0), radius, thetas[j],
                                         thetas[j] + (theta1 - theta0) / n_sectors)
            elements.append(el)
        if curved and n_rings == 1:
            elements[-1].curves[1] = Curve.arc((0, 0), radius, thetas[j],
                                               thetas[j] + (theta1 - theta0) / n_sectors)
    mesh = Mesh(2, pool.array(), elements)

    def tagger(mid):
        # outer (possibly chord) edges sit well beyond the last ring's midpoint
        r = np.linalg.norm(mid)
        return arc_tag if r > radius * (n_rings - 0.25) / n_rings else axis_tag

    tag_boundary(mesh, tagger)
    return mesh


def quarter_disk_mesh(n_rings: int, n_sectors: int, curved: bool = True,
                      arc_tag: str = NEUMANN, axis_tag: str = DIRICHLET) -> Mesh:
    """Polar mesh of the unit quarter disk; outermost edges follow the arc."""
    if curved and n_rings == 1:
        # arcs attach to quads, keep at least one quad ring
        n_rings = 2
    return _polar_mesh(n_rings, n_sectors, 0.0, np.pi / 2, curved, False, arc_tag, axis_tag)


def disk_mesh(n_rings: int, n_sectors: int, curved: bool = True,
              tag: str = NEUMANN) -> Mesh:
    """Polar mesh of the unit disk (chord-facet polygon when curved=False)."""
    return _polar_mesh(max(n_rings, 2), n_sectors, 0.0, 2 * np.pi, curved, True, tag, tag)


def disk_ribbon_mesh(n_sectors: int, n_rings: int = 3, thickness: float | None = None) -> Mesh:
    """Unit disk covered by an interior VEM polygon mesh plus a FEM ribbon."""
    loop = Curve.arc((0, 0), 1.0, 0.0, 2 * np.pi)
    h = 2 * np.pi / n_sectors
    if thickness is None:
        thickness = h  # chord-length default keeps ribbon cells shape-regular
    rib = build_ribbon(loop, n_sectors, thickness)

    pool = _VertexPool()
    center = pool.add((0.0, 0.0))
    inner = rib.points[rib.inner_polygon]
    vid = np.zeros((n_rings + 1, n_sectors), dtype=int)
    for m in range(1, n_rings + 1):
        for j in range(n_sectors):
            vid[m, j] = pool.add(inner[j] * m / n_rings)
    elements = []
    for j in range(n_sectors):
        jn = (j + 1) % n_sectors
        elements.append(Element2D((center, vid[1, j], vid[1, jn])))
        for m in range(2, n_rings + 1):
            elements.append(Element2D((vid[m - 1, j], vid[m, j], vid[m, jn], vid[m - 1, jn])))
    ribbon_ids = [pool.add(p) for p in rib.points]
    for tri, clip in zip(rib.triangles, rib.clips):
        el = Element2D(tuple(ribbon_ids[v] for v in tri), fem=True, clip=clip)
        elements.append(el)
    mesh = Mesh(2, pool.array(), elements)
    tag_boundary(mesh, lambda mid: NEUMANN)
    return mesh


def quarter_disk_ribbon_mesh(n_sectors: int, thickness: float | None = None,
                             axis_tag: str = DIRICHLET) -> Mesh:
    """Quarter disk: fan-meshed interior polygon plus a FEM ribbon along the arc."""
    arc = Curve.arc((0, 0), 1.0, 0.0, np.pi / 2)
    h = (np.pi / 2) / n_sectors
    if thickness is None:
        thickness = h
    a = thickness / 2.0
    thetas = (np.pi / 2) * np.arange(n_sectors + 1) / n_sectors
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)

    pool = _VertexPool()
    origin = pool.add((0.0, 0.0))
    A = pool.add((1.0, 0.0))
    B = pool.add((0.0, 1.0))
    inner = [A] + [pool.add((1 - a) * dirs[j]) for j in range(1, n_sectors)] + [B]
    outer = [A] + [pool.add((1 + a) * dirs[j]) for j in range(1, n_sectors)] + [B]

    elements = []
    for j in range(n_sectors):
        elements.append(Element2D((origin, inner[j], inner[j + 1])))

    def tri_cell(ids):
        pts = pool.array()[list(ids)]
        return Element2D(tuple(ids), fem=True, clip=clip_triangle(pts, arc))

    elements.append(tri_cell((A, outer[1], inner[1])))
    for j in range(1, n_sectors - 1):
        elements.append(tri_cell((inner[j], outer[j], outer[j + 1])))
        elements.append(tri_cell((inner[j], outer[j + 1], inner[j + 1])))
    elements.append(tri_cell((inner[n_sectors - 1], outer[n_sectors - 1], B)))

    mesh = Mesh(2, pool.array(), elements)

    def tagger(mid):
        if abs(mid[0]) < 1e-12 or abs(mid[1]) < 1e-12:
            return axis_tag
        return NEUMANN

    tag_boundary(mesh, tagger)
    return mesh


def cube_mesh(n: int, tag: str = DIRICHLET) -> Mesh:
    xs = np.linspace(0.0, 1.0, n + 1)
    vid = lambda i, j, k: (i * (n + 1) + j) * (n + 1) + k
    vertices = np.array([[xs[i], xs[j], xs[k]]
                         for i in range(n + 1) for j in range(n + 1) for k in range(n + 1)])
    elements = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                c = {(di, dj, dk): vid(i + di, j + dj, k + dk)
                     for di in (0, 1) for dj in (0, 1) for dk in (0, 1)}
                faces = [
                    (c[0, 0, 0], c[0, 1, 0], c[1, 1, 0], c[1, 0, 0]),   # -z
                    (c[0, 0, 1], c[1, 0, 1], c[1, 1, 1], c[0, 1, 1]),   # +z
                    (c[0, 0, 0], c[1, 0, 0], c[1, 0, 1], c[0, 0, 1]),   # -y
                    (c[0, 1, 0], c[0, 1, 1], c[1, 1, 1], c[1, 1, 0]),   # +y
                    (c[0, 0, 0], c[0, 0, 1], c[0, 1, 1], c[0, 1, 0]),   # -x
                    (c[1, 0, 0], c[1, 1, 0], c[1, 1, 1], c[1, 0, 1]),   # +x
                ]
                elements.append(Element3D(faces))
    mesh = Mesh(3, vertices, elements)
    tag_boundary(mesh, lambda mid: tag)
    return mesh


def sphere_octant_mesh(split: int = 1, flat_tag: str = DIRICHLET,
                       curved_tag: str = NEUMANN) -> Mesh:
    """Unit sphere octant as tetra-like elements (3 flat faces + sphere patch).

    split=1: single element.  split=4: the spherical triangle is subdivided at
    the arc midpoints into 4 patches, each carried by a cone from the origin.
    """
    if split not in (1, 4):
        raise ValueError("split must be 1 or 4")
    sphere = SpherePatch((0.0, 0.0, 0.0), 1.0)
    pool = _VertexPool()
    O = pool.add((0.0, 0.0, 0.0))
    X = pool.add((1.0, 0.0, 0.0))
    Y = pool.add((0.0, 1.0, 0.0))
    Z = pool.add((0.0, 0.0, 1.0))

    def cone_element(a, b, c):
        """Tetra-like element over the (outward CCW) spherical triangle a,b,c."""
        faces = [
            (O, b, a),  # plane through O,a,b with outward normal away from c
            (O, c, b),
            (O, a, c),
            (a, b, c),  # curved patch, outward
        ]
        return Element3D(faces, curved_face=3, sphere=sphere)

    if split == 1:
        elements = [cone_element(X, Y, Z)]
    else:
        def mid(u, v):
            p = pool.array()[u] + pool.array()[v]
            return pool.add(p / np.linalg.norm(p))
        Mxy, Myz, Mzx = mid(X, Y), mid(Y, Z), mid(Z, X)
        elements = [
            cone_element(X, Mxy, Mzx),
            cone_element(Mxy, Y, Myz),
            cone_element(Mzx, Myz, Z),
            cone_element(Mxy, Myz, Mzx),
        ]
    mesh = Mesh(3, pool.array(), elements)

    def tagger(mid_pt):
        if min(abs(mid_pt)) < 1e-9:
            return flat_tag
        return curved_tag

    tag_boundary(mesh, tagger)
    return mesh
