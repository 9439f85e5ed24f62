"""2D polygon geometry with optionally curved edges (Green's theorem measures)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import Curve
from .quadrature import (
    QuadratureRule,
    curve_rule,
    curved_sector_rule,
    polygon_fan_rule,
    segment_rule,
    triangle_rule,
    _cross2,
)


@dataclass
class Polygon2D:
    """Counterclockwise polygon; edge i runs vertices[i] -> vertices[i+1].

    ``curves[i]``, when present, replaces the straight edge i by a curve whose
    endpoints coincide with the edge's vertices.  All measures are taken with
    the curved boundary (boundary line integrals via Green's theorem).
    """

    vertices: np.ndarray
    curves: dict[int, Curve] = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[0] < 2:
            raise ValueError("polygon needs at least 2 vertices")
        for i, c in self.curves.items():
            a = self.vertices[i]
            b = self.vertices[(i + 1) % self.n_vertices]
            if not c.matches_endpoints(a, b):
                raise ValueError(f"curve on edge {i} does not match edge endpoints")
        self._measure = None
        self._centroid = None
        self._rules: dict[int, "QuadratureRule"] = {}

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.n_vertices

    def edge(self, i: int):
        return self.vertices[i], self.vertices[(i + 1) % self.n_vertices]

    def edge_length(self, i: int) -> float:
        if i in self.curves:
            return self.curves[i].length()
        a, b = self.edge(i)
        return float(np.linalg.norm(b - a))

    def boundary_rules(self, order: int) -> list[QuadratureRule]:
        """Arc-length rules per edge, in traversal order."""
        rules = []
        for i in range(self.n_edges):
            if i in self.curves:
                rules.append(curve_rule(self.curves[i], order))
            else:
                a, b = self.edge(i)
                rules.append(segment_rule(a, b, order))
        return rules

    def boundary_normals(self, i: int, points: np.ndarray) -> np.ndarray:
        """Outward unit normals at boundary points of edge i (CCW traversal)."""
        if i in self.curves:
            c = self.curves[i]
            t = np.array([c.param_of_point(p) for p in np.atleast_2d(points)])
            v = c.velocity(t)
            n = np.stack([v[:, 1], -v[:, 0]], axis=1)
            return n / np.linalg.norm(n, axis=1, keepdims=True)
        a, b = self.edge(i)
        tang = (b - a) / np.linalg.norm(b - a)
        n = np.array([tang[1], -tang[0]])
        return np.tile(n, (np.atleast_2d(points).shape[0], 1))

    def _compute_measures(self) -> None:
        """Area and first moments in one boundary pass (Green's theorem)."""
        area = 0.0
        mom = np.zeros(2)
        for i in range(self.n_edges):
            rule = (curve_rule(self.curves[i], 8) if i in self.curves
                    else segment_rule(*self.edge(i), 4))
            n = self.boundary_normals(i, rule.points)
            area += float(np.sum(rule.weights * rule.points[:, 0] * n[:, 0]))
            mom += 0.5 * np.einsum("q,qd,qd->d", rule.weights, rule.points**2, n)
        self._measure = area
        self._centroid = mom / area

    @property
    def measure(self) -> float:
        if self._measure is None:
            self._compute_measures()
        return self._measure

    @property
    def centroid(self) -> np.ndarray:
        if self._centroid is None:
            self._compute_measures()
        return self._centroid

    @property
    def diameter(self) -> float:
        if not hasattr(self, "_diameter"):
            pts = [self.vertices]
            for c in self.curves.values():
                pts.append(c.point(np.linspace(0, 1, 33)))
            pts = np.vstack(pts)
            d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
            self._diameter = float(np.sqrt(d2.max()))
        return self._diameter

    def quadrature(self, order: int) -> QuadratureRule:
        """Fan rule from the centroid; curved edges use blended sector rules."""
        if order in self._rules:
            return self._rules[order]
        c = self.centroid
        rules = []
        for i in range(self.n_edges):
            if i in self.curves:
                rules.append(curved_sector_rule(c, self.curves[i], order))
            else:
                a, b = self.edge(i)
                signed = _cross2(a - c, b - c)
                if signed <= 0:
                    raise ValueError(
                        f"non-star-shaped fan: edge {i} sub-triangle has measure {signed/2:.3e}"
                    )
                rules.append(triangle_rule(c, a, b, order))
        rule = QuadratureRule.concat(rules)
        self._rules[order] = rule
        return rule

    def contains(self, points: np.ndarray, pad: float = 0.0) -> np.ndarray:
        """Winding-number test against the (curve-sampled) boundary polyline."""
        poly = []
        for i in range(self.n_edges):
            if i in self.curves:
                poly.extend(self.curves[i].point(np.linspace(0, 1, 65))[:-1])
            else:
                poly.append(self.vertices[i])
        poly = np.asarray(poly)
        pts = np.atleast_2d(points)
        a = poly
        b = np.roll(poly, -1, axis=0)
        inside = np.zeros(pts.shape[0], dtype=bool)
        for k, p in enumerate(pts):
            cond = (a[:, 1] <= p[1]) != (b[:, 1] <= p[1])
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = a[:, 0] + (p[1] - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
            inside[k] = np.count_nonzero(cond & (p[0] < xint + pad)) % 2 == 1
        return inside
