"""Curved-boundary-edge strategies: generators/midwife, dof-subset traces, ribbon.

A curved edge eta carries the traces of all plane polynomials of degree k,
whose dimension can silently degenerate (down to k+1 when eta is straight).
Every declared-curved edge therefore gets the full generator treatment or a
slaved trace reconstructed from the element's other dofs; rank decisions are
made with fixed relative tolerances so behavior is reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .geometry.curves import Curve
from .geometry.polygon import Polygon2D
from .geometry.quadrature import gauss_01
from .polybasis import ScaledMonomialBasis, space_dim

GENERATORS = "generators"
SUBSET = "subset"
SUBSET_MFD = "subset-mfd"
RIBBON = "ribbon"
STRATEGIES = (GENERATORS, SUBSET, SUBSET_MFD, RIBBON)

PINV_RCOND = 1e-12


def generator_count(k: int) -> int:
    """Generator slots per curved edge: dim P_k(R^2) minus the two endpoint values."""
    return (k + 1) * (k + 2) // 2 - 2


def triangle_lattice(A, B, C, k: int) -> np.ndarray:
    """P_k interpolation lattice on the triangle, ordered [A, B, apex, edges, interior]."""
    A, B, C = (np.asarray(p, dtype=float) for p in (A, B, C))
    pts = [A, B, C]
    for P, Q in ((A, B), (B, C), (C, A)):
        for i in range(1, k):
            pts.append(P + (Q - P) * i / k)
    for i in range(1, k):
        for j in range(1, k - i):
            l = k - i - j
            pts.append((i * A + j * B + l * C) / k)
    return np.asarray(pts)


@dataclass
class GeneratorSet:
    """Generating points on the auxiliary equilateral triangle of a curved edge.

    ``lattice`` starts with the two edge endpoints (shared with the element's
    vertex dofs); the remaining rows are the generator slots.  ``interp`` maps
    lattice values to coefficients in the triangle's scaled monomial basis.
    """

    curve: Curve
    k: int
    apex: np.ndarray
    lattice: np.ndarray
    basis: ScaledMonomialBasis
    interp: np.ndarray
    fit: "EndpointConstrainedFit" = field(init=False, repr=False)

    @property
    def gen_points(self) -> np.ndarray:
        return self.lattice[2:]

    @property
    def n_generators(self) -> int:
        return self.lattice.shape[0] - 2

    def trace_values(self, points: np.ndarray) -> np.ndarray:
        """Values of the midwife polynomial at physical points, as a matrix
        acting on [value(A), value(B), generator values...]."""
        return self.basis.eval(points) @ self.interp


def build_generator_set(curve: Curve, k: int) -> GeneratorSet:
    """Equilateral triangle on the chord, apex toward the curve's bulge."""
    A = curve.start
    B = curve.end
    chord = B - A
    L = np.linalg.norm(chord)
    perp = np.array([-chord[1], chord[0]]) / L
    bulge = curve.point(0.5)[0] - A
    side = np.sign(float(chord[0] * bulge[1] - chord[1] * bulge[0]))
    if side == 0:
        side = 1.0  # straight declared-curved edge: deterministic side
    apex = 0.5 * (A + B) + side * (np.sqrt(3) / 2) * L * perp
    lattice = triangle_lattice(A, B, apex, k)
    centroid = (A + B + apex) / 3
    basis = ScaledMonomialBasis(centroid, L, k, 2)
    M = basis.eval(lattice)
    interp = np.linalg.inv(M)  # standard lattice: unisolvent by construction
    gs = GeneratorSet(curve, k, apex, lattice, basis, interp)
    gs.fit = EndpointConstrainedFit(gs)
    return gs


class EndpointConstrainedFit:
    """Endpoint-interpolating, minimum-norm L2(eta) polynomial fit.

    Canonical right inverse of the midwife map: any trace on eta is sent to
    the generator values of one well-defined representative polynomial, so
    generator data with equal traces is processed identically.
    """

    def __init__(self, gs: GeneratorSet, n_fit: int | None = None):
        self.gs = gs
        k = gs.k
        n_fit = n_fit or max(4 * k + 6, 24)
        t, w = gauss_01(n_fit)
        self.points = gs.curve.point(t)
        speed = np.linalg.norm(gs.curve.velocity(t), axis=1)
        self.sqw = np.sqrt(w * speed)
        ends = np.vstack([gs.curve.start, gs.curve.end])
        A_eq = gs.basis.eval(ends)                    # (2, n)
        self.E = gs.basis.eval(self.points)           # (nf, n)
        self.P2 = np.linalg.pinv(A_eq, rcond=PINV_RCOND)
        self.Z = null_space(A_eq)
        WEZ = self.sqw[:, None] * (self.E @ self.Z)
        self.solver = np.linalg.pinv(WEZ, rcond=PINV_RCOND)

    def coeffs(self, values_on_eta: np.ndarray, vA, vB) -> np.ndarray:
        """Fit coefficients (triangle basis) from trace samples + endpoint values.

        Accepts vector or matrix-valued data (one fit per column).
        """
        V = np.asarray(values_on_eta, dtype=float)
        squeeze = V.ndim == 1
        if squeeze:
            V = V[:, None]
        ends = np.vstack([np.atleast_2d(np.asarray(vA, dtype=float)),
                          np.atleast_2d(np.asarray(vB, dtype=float))])
        cp = self.P2 @ ends
        resid = self.sqw[:, None] * (V - self.E @ cp)
        out = cp + self.Z @ (self.solver @ resid)
        return out[:, 0] if squeeze else out

    def gen_rows(self, elem_basis: ScaledMonomialBasis) -> np.ndarray:
        """Generator values of the canonical representative of each element
        basis monomial's trace: the generator block of the element's D matrix."""
        ends = np.vstack([self.gs.curve.start, self.gs.curve.end])
        targets = elem_basis.eval(self.points)        # (nf, nk)
        endvals = elem_basis.eval(ends)               # (2, nk)
        coeffs = self.coeffs(targets, endvals[0], endvals[1])
        return self.gs.basis.eval(self.gs.gen_points) @ coeffs

    def gen_values_from_callable(self, g) -> np.ndarray:
        vals = np.asarray(g(self.points), dtype=float)
        vA = float(np.asarray(g(self.gs.curve.start[None, :])).ravel()[0])
        vB = float(np.asarray(g(self.gs.curve.end[None, :])).ravel()[0])
        coeffs = self.coeffs(vals, vA, vB)
        return self.gs.basis.eval(self.gs.gen_points) @ coeffs


def constrained_lstsq(A_eq: np.ndarray, b_eq: np.ndarray,
                      A_ls: np.ndarray, b_ls: np.ndarray) -> np.ndarray:
    """min ||A_ls x - b_ls|| subject to A_eq x = b_eq (nullspace method).

    Right-hand sides may be matrices (one solve per column); the minimum-norm
    solution is selected in the rank-deficient case.
    """
    stacked = np.vstack([A_eq, A_ls])
    rank = np.linalg.matrix_rank(stacked, tol=PINV_RCOND * max(np.linalg.norm(stacked), 1))
    if rank < A_eq.shape[1]:
        raise ValueError(
            f"constrained least-squares system rank {rank} < unknowns {A_eq.shape[1]}")
    xp = np.linalg.pinv(A_eq, rcond=PINV_RCOND) @ b_eq
    Z = null_space(A_eq)
    resid = b_ls - A_ls @ xp
    z = np.linalg.pinv(A_ls @ Z, rcond=PINV_RCOND) @ resid
    return xp + Z @ z


def plain_lstsq(A: np.ndarray, b: np.ndarray, require_rank: int | None = None) -> np.ndarray:
    if require_rank is not None:
        rank = np.linalg.matrix_rank(A, tol=PINV_RCOND * max(np.linalg.norm(A), 1))
        if rank < require_rank:
            raise ValueError(f"least-squares system rank {rank} < required {require_rank}")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x


def ribbon_local_stiffness(basis: ScaledMonomialBasis, D: np.ndarray,
                           region: Polygon2D, order: int) -> np.ndarray:
    """P_k finite-element stiffness integrated over the clipped region Omega_T.

    No projection and no stabilization: the shape functions are polynomials,
    so the bilinear form is evaluated exactly on the true element.
    """
    if region.measure <= 0:
        raise ValueError("empty clipped region: ribbon triangle does not meet the domain")
    rule = region.quadrature(order)
    grads = basis.grad(rule.points)
    G = np.einsum("q,qid,qjd->ij", rule.weights, grads, grads)
    Dinv = np.linalg.inv(D)
    return Dinv.T @ G @ Dinv
