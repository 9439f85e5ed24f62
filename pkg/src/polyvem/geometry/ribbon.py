"""Ribbon of boundary-layer triangles around a closed curved boundary.

The ribbon quads sit astride the domain boundary (inner vertices strictly
inside, outer strictly outside); their triangles carry standard finite
elements integrated over the clipped regions Omega_T = Omega ∩ T, while the
inner polygon is meshed with virtual elements as usual.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import Curve
from .polygon import Polygon2D
from .quadrature import polygon_area


def _signed_level(loop: Curve, points: np.ndarray) -> np.ndarray:
    """Negative inside the loop, positive outside (exact for circles)."""
    pts = np.atleast_2d(points)
    if loop.kind == "arc":
        return np.linalg.norm(pts - loop.center, axis=1) - loop.radius
    poly = Polygon2D(loop.points[:-1] if np.allclose(loop.points[0], loop.points[-1])
                     else loop.points)
    inside = poly.contains(pts)
    return np.where(inside, -1.0, 1.0)


def _segment_crossings(loop: Curve, a: np.ndarray, b: np.ndarray) -> list[float]:
    """Parameters s in (0, 1) where segment a + s(b-a) crosses the loop."""
    if loop.kind == "arc":
        d = b - a
        rel = a - loop.center
        A = d @ d
        B = 2 * rel @ d
        C = rel @ rel - loop.radius**2
        disc = B * B - 4 * A * C
        if disc <= 0:
            return []
        sq = np.sqrt(disc)
        out = [(-B - sq) / (2 * A), (-B + sq) / (2 * A)]
        return sorted(s for s in out if 1e-12 < s < 1 - 1e-12)
    # polyline fallback: bisection on sign changes of the level function
    ss = np.linspace(0, 1, 65)
    lev = _signed_level(loop, a + ss[:, None] * (b - a))
    out = []
    for i in range(64):
        if lev[i] == 0 or lev[i] * lev[i + 1] >= 0:
            continue
        lo, hi = ss[i], ss[i + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _signed_level(loop, (a + mid * (b - a))[None, :])[0] * lev[i] > 0:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return out


def clip_triangle(tri: np.ndarray, loop: Curve) -> Polygon2D | None:
    """Omega_T = Omega ∩ T for a CCW triangle T astride the loop.

    Returns None when T lies entirely inside Omega; raises when the
    intersection is empty (the ribbon construction forbids that).
    """
    tri = np.asarray(tri, dtype=float)
    scale = max(np.linalg.norm(tri[1] - tri[0]), np.linalg.norm(tri[2] - tri[0]))
    tol = 1e-12 * max(scale, loop.chord_scale())

    nodes: list[np.ndarray] = []
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        nodes.append(a)
        for s in _segment_crossings(loop, a, b):
            nodes.append(a + s * (b - a))
    # drop consecutive duplicates (crossing coinciding with a vertex on the loop)
    clean: list[np.ndarray] = []
    for p in nodes:
        if not clean or np.linalg.norm(p - clean[-1]) > tol:
            clean.append(p)
    if len(clean) > 1 and np.linalg.norm(clean[0] - clean[-1]) <= tol:
        clean.pop()
    n = len(clean)

    keep = []
    for i in range(n):
        mid = 0.5 * (clean[i] + clean[(i + 1) % n])
        keep.append(_signed_level(loop, mid[None, :])[0] < -tol / scale)
    if all(keep):
        return None
    if not any(keep):
        raise ValueError("ribbon triangle does not intersect the domain")

    # rotate so kept sub-edges are contiguous: start right after the gap
    start = next(i for i in range(n) if keep[i] and not keep[i - 1])
    chain = [clean[start]]
    i = start
    while keep[i]:
        chain.append(clean[(i + 1) % n])
        i = (i + 1) % n
    t0 = loop.param_of_point(chain[-1])   # exit point
    t1 = loop.param_of_point(chain[0])    # entry point
    if t1 <= t0 + 1e-14:
        t1 += 1.0
    arc = loop.subcurve(t0, t1)
    return Polygon2D(np.asarray(chain), {len(chain) - 1: arc})


@dataclass
class Ribbon:
    """Ribbon decomposition around a closed boundary loop.

    ``points`` stacks inner then outer offset vertices; ``triangles`` index
    into it (CCW); ``clips[i]`` is Omega_T for triangle i (None = fully
    inside).  ``inner_polygon``/``outer_polygon`` are index loops (Q-tilde
    inside Omega and Pi-tilde containing it).
    """

    points: np.ndarray
    quads: list[tuple[int, int, int, int]]
    triangles: list[tuple[int, int, int]]
    clips: list[Polygon2D | None]
    inner_polygon: list[int]
    outer_polygon: list[int]
    max_boundary_gap: float


def build_ribbon(loop: Curve, n_segments: int, thickness: float) -> Ribbon:
    """Quadrilateral ribbon around a closed loop, split into clipped triangles.

    thickness is the total ribbon width; offsets are thickness/2 to each side.
    Rejects self-intersecting/inverted configurations and outer polygons that
    fail to contain the domain between their chords.
    """
    if n_segments < 3:
        raise ValueError("need at least 3 ribbon segments")
    if thickness <= 0:
        raise ValueError("ribbon thickness must be positive")
    t = np.arange(n_segments) / n_segments
    gamma = loop.point(t)
    vel = loop.velocity(t)
    tang = vel / np.linalg.norm(vel, axis=1, keepdims=True)
    n_in = np.stack([-tang[:, 1], tang[:, 0]], axis=1)  # CCW loop: interior on the left
    a = thickness / 2.0
    inner = gamma + a * n_in
    outer = gamma - a * n_in

    if polygon_area(inner) <= 0:
        raise ValueError("ribbon thickness too large: inner offset polygon inverts")
    if np.any(_signed_level(loop, inner) >= -1e-12 * loop.chord_scale()):
        raise ValueError("ribbon inner vertices not strictly inside the domain")
    if np.any(_signed_level(loop, outer) <= 1e-12 * loop.chord_scale()):
        raise ValueError("ribbon outer vertices not strictly outside the domain")
    outer_poly = Polygon2D(outer)
    dense = loop.point(np.linspace(0, 1, 8 * n_segments, endpoint=False))
    if not np.all(outer_poly.contains(dense)):
        raise ValueError(
            "outer ribbon polygon does not contain the domain; "
            "increase thickness or the number of segments"
        )

    points = np.vstack([inner, outer])
    quads, triangles, clips = [], [], []
    for j in range(n_segments):
        jn = (j + 1) % n_segments
        i0, i1 = j, jn
        o0, o1 = n_segments + j, n_segments + jn
        quad = (i0, o0, o1, i1)  # CCW: radial out, outer forward, radial in, inner back
        quads.append(quad)
        for tri in ((i0, o0, o1), (i0, o1, i1)):
            pts = points[list(tri)]
            area2 = (pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1]) - \
                    (pts[2][0] - pts[0][0]) * (pts[1][1] - pts[0][1])
            if area2 <= 0:
                raise ValueError("ribbon self-intersects: inverted triangle")
            triangles.append(tri)
            clips.append(clip_triangle(pts, loop))

    gap = float(np.max(np.abs(_signed_level(loop, points))))
    return Ribbon(points, quads, triangles, clips,
                  list(range(n_segments)),
                  list(range(n_segments, 2 * n_segments)),
                  gap)
