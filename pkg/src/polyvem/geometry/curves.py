"""Analytic boundary curves: circular arcs first-class, polylines as fallback."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ENDPOINT_RTOL = 1e-12


@dataclass(frozen=True)
class Curve:
    """Parametric boundary curve gamma(t), t in [0, 1].

    kind == "arc": circle of given center/radius from angle0 to angle1
    (radians, signed sweep; counterclockwise when angle1 > angle0).
    kind == "polyline": piecewise-linear fallback through sample points.
    """

    kind: str
    center: np.ndarray | None = None
    radius: float = 0.0
    angle0: float = 0.0
    angle1: float = 0.0
    points: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "arc":
            if self.radius <= 0:
                raise ValueError("arc radius must be positive")
            if self.angle1 == self.angle0:
                raise ValueError("arc sweep must be nonzero")
            object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        elif self.kind == "polyline":
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[0] < 2:
                raise ValueError("polyline needs at least two sample points")
            object.__setattr__(self, "points", pts)
        else:
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @staticmethod
    def arc(center, radius, angle0, angle1) -> "Curve":
        return Curve("arc", center=np.asarray(center, dtype=float), radius=float(radius),
                     angle0=float(angle0), angle1=float(angle1))

    @staticmethod
    def polyline(points) -> "Curve":
        return Curve("polyline", points=np.asarray(points, dtype=float))

    def point(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "arc":
            ang = self.angle0 + t * (self.angle1 - self.angle0)
            return self.center + self.radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        seg, loc = self._segment_of(t)
        p0 = self.points[seg]
        p1 = self.points[seg + 1]
        return p0 + loc[:, None] * (p1 - p0)

    def velocity(self, t) -> np.ndarray:
        """d gamma / dt (not unit)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "arc":
            sweep = self.angle1 - self.angle0
            ang = self.angle0 + t * sweep
            return self.radius * sweep * np.stack([-np.sin(ang), np.cos(ang)], axis=-1)
        seg, _ = self._segment_of(t)
        n = self.points.shape[0] - 1
        return (self.points[seg + 1] - self.points[seg]) * n

    def _segment_of(self, t):
        n = self.points.shape[0] - 1
        s = np.clip(t * n, 0.0, n - 1e-15)
        seg = np.minimum(s.astype(int), n - 1)
        return seg, s - seg

    @property
    def start(self) -> np.ndarray:
        return self.point(0.0)[0]

    @property
    def end(self) -> np.ndarray:
        return self.point(1.0)[0]

    def reversed(self) -> "Curve":
        if self.kind == "arc":
            return Curve.arc(self.center, self.radius, self.angle1, self.angle0)
        return Curve.polyline(self.points[::-1])

    def length(self) -> float:
        if self.kind == "arc":
            return self.radius * abs(self.angle1 - self.angle0)
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))

    def chord_scale(self) -> float:
        if self.kind == "arc":
            return self.radius
        return max(self.length(), 1e-300)

    def matches_endpoints(self, a, b) -> bool:
        tol = ENDPOINT_RTOL * self.chord_scale()
        # tolerance floor guards tiny radii in scaled meshes
        tol = max(tol, 1e-14)
        return (np.linalg.norm(self.start - np.asarray(a)) <= tol
                and np.linalg.norm(self.end - np.asarray(b)) <= tol)

    def subcurve(self, t0: float, t1: float) -> "Curve":
        """Restriction of the curve to [t0, t1], reparameterized over [0, 1]."""
        if self.kind == "arc":
            sweep = self.angle1 - self.angle0
            return Curve.arc(self.center, self.radius,
                             self.angle0 + t0 * sweep, self.angle0 + t1 * sweep)
        ts = np.linspace(t0, t1, max(self.points.shape[0], 8))
        return Curve.polyline(self.point(ts))

    def param_of_point(self, p) -> float:
        """Parameter of a point assumed to lie on the curve."""
        p = np.asarray(p, dtype=float)
        if self.kind == "arc":
            v = p - self.center
            ang = np.arctan2(v[1], v[0])
            sweep = self.angle1 - self.angle0
            t = (ang - self.angle0) / sweep
            # wrap into [0, 1] against 2*pi ambiguity
            t -= np.round((t - 0.5) * abs(sweep) / (2 * np.pi)) * (2 * np.pi / abs(sweep)) * np.sign(sweep) * np.sign(sweep)
            while t < -1e-9:
                t += 2 * np.pi / abs(sweep)
            while t > 1 + 1e-9:
                t -= 2 * np.pi / abs(sweep)
            return float(np.clip(t, 0.0, 1.0))
        ts = np.linspace(0, 1, 4097)
        d = np.linalg.norm(self.point(ts) - p, axis=1)
        return float(ts[np.argmin(d)])
