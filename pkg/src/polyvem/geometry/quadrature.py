"""Quadrature rules on segments, arcs, polygons, curved sectors and polyhedra.

Straight-sided rules are exact for the declared polynomial order (segment
Gauss-Legendre, collapsed tensor rules on triangles/tetrahedra).  Rules that
touch a curved boundary use generously oversampled Gauss rules in the curve
parameter so the quadrature error stays well below patch-test tolerances.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .curves import Curve


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (n, d)
    weights: np.ndarray  # (n,)

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, f) -> float:
        vals = np.asarray(f(self.points), dtype=float)
        return float(self.weights @ vals)

    @staticmethod
    def concat(rules: list["QuadratureRule"]) -> "QuadratureRule":
        return QuadratureRule(np.vstack([r.points for r in rules]),
                              np.concatenate([r.weights for r in rules]))


@lru_cache(maxsize=None)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(max(n, 1))


def gauss_01(n: int):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = _leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def segment_rule(a, b, order: int) -> QuadratureRule:
    """Arc-length rule on the segment a-b, exact for P_order."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t, w = gauss_01((order + 2) // 2 + 1)
    pts = a + t[:, None] * (b - a)
    return QuadratureRule(pts, w * np.linalg.norm(b - a))


def curve_rule(curve: Curve, order: int) -> QuadratureRule:
    """Arc-length rule along a curve (weight |gamma'(t)|).

    Gauss in the parameter; sized so trigonometric integrands of the orders
    met in practice are integrated to ~1e-13.
    """
    n = max(order + 2, 12)
    t, w = gauss_01(n)
    pts = curve.point(t)
    speed = np.linalg.norm(curve.velocity(t), axis=1)
    return QuadratureRule(pts, w * speed)


def boundary_quadrature(edge_or_curve, order: int, b=None) -> QuadratureRule:
    """Rule on a straight edge (two endpoints) or a Curve."""
    if order < 0:
        raise ValueError("quadrature order must be >= 0")
    if isinstance(edge_or_curve, Curve):
        return curve_rule(edge_or_curve, order)
    return segment_rule(edge_or_curve, b, order)


@lru_cache(maxsize=None)
def _duffy_triangle_ref(n: int):
    """Collapsed tensor rule on the reference triangle (u, v >= 0, u+v <= 1)."""
    a, wa = gauss_01(n)
    A, B = np.meshgrid(a, a, indexing="ij")
    WA, WB = np.meshgrid(wa, wa, indexing="ij")
    u = A.ravel()
    v = (B * (1 - A)).ravel()
    w = (WA * WB * (1 - A)).ravel()
    return u, v, w


def triangle_rule(v0, v1, v2, order: int) -> QuadratureRule:
    """Collapsed tensor Gauss rule on a triangle, exact for P_order."""
    v0, v1, v2 = (np.asarray(v, dtype=float) for v in (v0, v1, v2))
    u, v, w = _duffy_triangle_ref((order + 2) // 2 + 1)
    area2 = _cross2(v1 - v0, v2 - v0)
    pts = v0 + u[:, None] * (v1 - v0) + v[:, None] * (v2 - v0)
    return QuadratureRule(pts, w * area2)


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def polygon_fan_rule(vertices: np.ndarray, order: int, center=None,
                     reject_negative: bool = True) -> QuadratureRule:
    """Fan sub-triangulation rule from the centroid (or a given center)."""
    vertices = np.asarray(vertices, dtype=float)
    if center is None:
        center = polygon_centroid(vertices)
    rules = []
    n = vertices.shape[0]
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        signed = _cross2(a - center, b - center)
        if reject_negative and signed <= 0:
            raise ValueError(
                f"non-star-shaped fan: sub-triangle {i} has signed measure {signed/2:.3e}"
            )
        rules.append(triangle_rule(center, a, b, order))
    return QuadratureRule.concat(rules)


def curved_sector_rule(center, curve: Curve, order: int) -> QuadratureRule:
    """Blending rule on the sector bounded by center->start, the curve, end->center.

    Transfinite map Phi(t, s) = center + s (gamma(t) - center); the Jacobian is
    signed so mildly concave sectors integrate consistently with Green's theorem.
    """
    center = np.asarray(center, dtype=float)
    nt = max(order + 2, 12)
    ns = (order + 3) // 2 + 1
    t, wt = gauss_01(nt)
    s, ws = gauss_01(ns)
    g = curve.point(t)
    dg = curve.velocity(t)
    jac_t = (g[:, 0] - center[0]) * dg[:, 1] - (g[:, 1] - center[1]) * dg[:, 0]
    pts = center + s[:, None, None] * (g - center)[None, :, :]
    wts = (s[:, None] * ws[:, None]) * (wt * jac_t)[None, :]
    return QuadratureRule(pts.reshape(-1, 2), wts.reshape(-1))


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area (positive for counterclockwise orientation)."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    cr = x * np.roll(y, -1) - np.roll(x, -1) * y
    a = 0.5 * np.sum(cr)
    cx = np.sum((x + np.roll(x, -1)) * cr) / (6 * a)
    cy = np.sum((y + np.roll(y, -1)) * cr) / (6 * a)
    return np.array([cx, cy])


@lru_cache(maxsize=None)
def _duffy_tet_ref(n: int):
    a, wa = gauss_01(n)
    A, B, C = np.meshgrid(a, a, a, indexing="ij")
    WA, WB, WC = np.meshgrid(wa, wa, wa, indexing="ij")
    u = A.ravel()
    v = (B * (1 - A)).ravel()
    w = (C * (1 - A) * (1 - B)).ravel()
    jac = ((1 - A) ** 2 * (1 - B)).ravel() * (WA * WB * WC).ravel()
    return u, v, w, jac


def tetrahedron_rule(v0, v1, v2, v3, order: int) -> QuadratureRule:
    """Collapsed tensor Gauss rule on a tetrahedron, exact for P_order."""
    v0, v1, v2, v3 = (np.asarray(v, dtype=float) for v in (v0, v1, v2, v3))
    u, v, w, jac = _duffy_tet_ref((order + 3) // 2 + 1)
    vol6 = float(np.dot(np.cross(v1 - v0, v2 - v0), v3 - v0))
    pts = v0 + u[:, None] * (v1 - v0) + v[:, None] * (v2 - v0) + w[:, None] * (v3 - v0)
    return QuadratureRule(pts, jac * vol6)


def cone_rule(apex, surface: QuadratureRule, normals: np.ndarray, order: int) -> QuadratureRule:
    """Volume rule for the cone from ``apex`` over an oriented surface patch.

    ``surface`` carries points x_q and scalar area weights; ``normals`` the
    outward unit normals at those points.  dV = t^2 (n . (x - apex)) dA dt.
    """
    apex = np.asarray(apex, dtype=float)
    nt = (order + 4) // 2 + 1
    t, wt = gauss_01(nt)
    rel = surface.points - apex
    radial = np.einsum("qd,qd->q", normals, rel)
    pts = apex + t[:, None, None] * rel[None, :, :]
    wts = (t**2 * wt)[:, None] * (surface.weights * radial)[None, :]
    return QuadratureRule(pts.reshape(-1, 3), wts.reshape(-1))
