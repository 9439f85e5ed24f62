"""Polyhedron geometry: divergence-theorem measures, face and volume rules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polygon import Polygon2D
from .quadrature import QuadratureRule, cone_rule


@dataclass(frozen=True)
class SpherePatch:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def project(self, points: np.ndarray) -> np.ndarray:
        rel = np.atleast_2d(points) - self.center
        return self.center + self.radius * rel / np.linalg.norm(rel, axis=1, keepdims=True)


def plane_frame(points: np.ndarray):
    """Deterministic orthonormal frame (origin, e1, e2, normal) of a planar point cloud.

    The normal follows the traversal orientation of ``points`` (right-hand
    rule); e1/e2 are the principal axes of the cloud with sign fixed by the
    largest-magnitude coordinate, so identical point sets give identical frames.
    """
    pts = np.asarray(points, dtype=float)
    origin = pts.mean(axis=0)
    rel = pts - origin
    # traversal normal via Newell's formula
    nrm = np.zeros(3)
    for i in range(len(pts)):
        a, b = rel[i], rel[(i + 1) % len(pts)]
        nrm += np.cross(a, b)
    nrm /= np.linalg.norm(nrm)
    _, _, vt = np.linalg.svd(rel, full_matrices=False)
    e1 = vt[0]
    i = int(np.argmax(np.abs(e1)))
    if e1[i] < 0:
        e1 = -e1
    e1 = e1 - nrm * (e1 @ nrm)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nrm, e1)
    return origin, e1, e2, nrm


def flat_triangle_rule_3d(v0, v1, v2, order: int) -> QuadratureRule:
    from .quadrature import gauss_01

    v0, v1, v2 = (np.asarray(v, dtype=float) for v in (v0, v1, v2))
    n = (order + 2) // 2 + 1
    a, wa = gauss_01(n)
    A, B = np.meshgrid(a, a, indexing="ij")
    WA, WB = np.meshgrid(wa, wa, indexing="ij")
    u = A.ravel()
    v = (B * (1 - A)).ravel()
    w = (WA * WB * (1 - A)).ravel()
    area2 = np.linalg.norm(np.cross(v1 - v0, v2 - v0))
    pts = v0 + u[:, None] * (v1 - v0) + v[:, None] * (v2 - v0)
    return QuadratureRule(pts, w * area2)


def _subdivide(tri, levels):
    tris = [tri]
    for _ in range(levels):
        nxt = []
        for a, b, c in tris:
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            nxt += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        tris = nxt
    return tris


def sphere_patch_rule(sphere: SpherePatch, chord_vertices: np.ndarray, order: int,
                      nsub: int = 2):
    """Surface rule on the sphere patch over a chord polygon of on-sphere vertices.

    Chord triangles (fanned from the chord centroid) are projected radially
    onto the sphere; valid for patches bounded by great-circle arcs.  Returns
    (rule, outward unit normals at the rule points).  The effective order is
    floored so octant-scale patches integrate smooth data to ~1e-13.
    """
    order = max(order, 12)
    verts = np.atleast_2d(np.asarray(chord_vertices, dtype=float))
    centroid = verts.mean(axis=0)
    tris = []
    if len(verts) == 3:
        tris = [(verts[0], verts[1], verts[2])]
    else:
        for i in range(len(verts)):
            tris.append((centroid, verts[i], verts[(i + 1) % len(verts)]))
    pts_all, wts_all = [], []
    for tri in tris:
        for a, b, c in _subdivide(tri, nsub):
            flat = flat_triangle_rule_3d(a, b, c, order)
            n_flat = np.cross(b - a, c - a)
            n_flat /= np.linalg.norm(n_flat)
            rel = flat.points - sphere.center
            r = np.linalg.norm(rel, axis=1)
            radial = rel @ n_flat
            if np.any(radial <= 0):
                raise ValueError("sphere patch chord triangle oriented toward the center")
            pts_all.append(sphere.center + sphere.radius * rel / r[:, None])
            wts_all.append(flat.weights * sphere.radius**2 * radial / r**3)
    pts = np.vstack(pts_all)
    wts = np.concatenate(wts_all)
    normals = (pts - sphere.center) / sphere.radius
    return QuadratureRule(pts, wts), normals


class Polyhedron3D:
    """Closed polyhedron with outward-oriented faces; at most one curved face.

    ``faces`` index into ``vertices``; the optional curved face is a sphere
    patch over its vertex loop (or a geometrically flat face when ``sphere``
    is None, exercising the curved code path on exact data).
    """

    def __init__(self, vertices, faces, curved_face: int | None = None,
                 sphere: SpherePatch | None = None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = [tuple(f) for f in faces]
        self.curved_face = curved_face
        self.sphere = sphere
        self._measure = None
        self._centroid = None
        self._frames: dict[int, tuple] = {}
        self._polys: dict[int, Polygon2D] = {}
        self._surface: dict[tuple, tuple] = {}
        self._volume: dict[int, QuadratureRule] = {}

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def face_points(self, i: int) -> np.ndarray:
        return self.vertices[list(self.faces[i])]

    def face_is_curved(self, i: int) -> bool:
        return i == self.curved_face and self.sphere is not None

    def face_frame(self, i: int):
        if i not in self._frames:
            self._frames[i] = plane_frame(self.face_points(i))
        return self._frames[i]

    def sigma_edges(self) -> set[tuple[int, int]]:
        """Edges of the curved face loop (they are arcs on every incident face)."""
        if self.curved_face is None:
            return set()
        loop = self.faces[self.curved_face]
        return {tuple(sorted((loop[k], loop[(k + 1) % len(loop)])))
                for k in range(len(loop))}

    def face_polygon2d(self, i: int, frame=None) -> Polygon2D:
        """Flat face projected into its plane frame.

        Edges shared with the sphere patch become in-plane circular arcs
        (the sphere/plane intersection circle), bulging away from the face.
        """
        if frame is None and i in self._polys:
            return self._polys[i]
        origin, e1, e2, nrm = frame if frame is not None else self.face_frame(i)
        idx = self.faces[i]
        pts = self.vertices[list(idx)]
        uv = np.stack([(pts - origin) @ e1, (pts - origin) @ e2], axis=1)
        curves: dict[int, "Curve"] = {}
        if self.sphere is not None and i != self.curved_face:
            sig = self.sigma_edges()
            d = float((self.sphere.center - origin) @ nrm)
            r2 = self.sphere.radius**2 - d * d
            if r2 > 0 and sig:
                from .curves import Curve

                c3 = self.sphere.center - d * nrm
                c_uv = np.array([(c3 - origin) @ e1, (c3 - origin) @ e2])
                r_p = np.sqrt(r2)
                n = len(idx)
                for k in range(n):
                    if tuple(sorted((idx[k], idx[(k + 1) % n]))) not in sig:
                        continue
                    va, vb = uv[k] - c_uv, uv[(k + 1) % n] - c_uv
                    a0 = np.arctan2(va[1], va[0])
                    a1 = np.arctan2(vb[1], vb[0])
                    delta = (a1 - a0 + np.pi) % (2 * np.pi) - np.pi  # minor arc
                    curves[k] = Curve.arc(c_uv, r_p, a0, a0 + delta)
        poly = Polygon2D(uv, curves)
        if frame is None:
            self._polys[i] = poly
        return poly

    def face_surface_rule(self, i: int, order: int):
        """(QuadratureRule in 3D coords, outward unit normals at points)."""
        key = (i, order)
        if key in self._surface:
            return self._surface[key]
        pts = self.face_points(i)
        if self.face_is_curved(i):
            out = sphere_patch_rule(self.sphere, pts, order)
        else:
            origin, e1, e2, nrm = self.face_frame(i)
            poly = self.face_polygon2d(i)
            rule2 = poly.quadrature(order)
            pts3 = origin + rule2.points[:, 0:1] * e1 + rule2.points[:, 1:2] * e2
            normals = np.tile(nrm, (rule2.points.shape[0], 1))
            out = (QuadratureRule(pts3, rule2.weights), normals)
        self._surface[key] = out
        return out

    def _boundary_pieces(self, order: int):
        return [self.face_surface_rule(i, order) for i in range(self.n_faces)]

    @property
    def measure(self) -> float:
        if self._measure is None:
            vol = 0.0
            for rule, normals in self._boundary_pieces(6):
                vol += np.sum(rule.weights * np.einsum("qd,qd->q", rule.points, normals)) / 3.0
            self._measure = float(vol)
        return self._measure

    @property
    def centroid(self) -> np.ndarray:
        if self._centroid is None:
            mom = np.zeros(3)
            for rule, normals in self._boundary_pieces(6):
                mom += 0.5 * np.einsum("q,qd,qd->d", rule.weights, rule.points**2, normals)
            self._centroid = mom / self.measure
        return self._centroid

    @property
    def diameter(self) -> float:
        pts = [self.vertices]
        if self.curved_face is not None and self.sphere is not None:
            rule, _ = self.face_surface_rule(self.curved_face, 2)
            pts.append(rule.points)
        pts = np.vstack(pts)
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        return float(np.sqrt(d2.max()))

    def quadrature(self, order: int) -> QuadratureRule:
        """Cone rules from the centroid over every (possibly curved) face."""
        if order in self._volume:
            return self._volume[order]
        c = self.centroid
        rules = []
        for i in range(self.n_faces):
            surf, normals = self.face_surface_rule(i, order)
            rules.append(cone_rule(c, surf, normals, order))
        rule = QuadratureRule.concat(rules)
        self._volume[order] = rule
        return rule

    def flat_faces_planar_within(self, rtol: float = 1e-10) -> bool:
        h = self.diameter
        for i in range(self.n_faces):
            if self.face_is_curved(i):
                continue
            origin, e1, e2, nrm = self.face_frame(i)
            dev = np.abs((self.face_points(i) - origin) @ nrm)
            if np.any(dev > rtol * h):
                return False
        return True
