"""Computable projectors onto polynomial spaces, as dense local matrices.

Every projector maps a local dof vector to coefficients in the element's
scaled monomial basis.  They are built from a dimension-agnostic description
of what is computable on an element: boundary pieces carrying the traces of
the dof-basis functions at quadrature points, and interior moments.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polybasis import ScaledMonomialBasis, space_dim

RANK_RTOL = 1e-10


@dataclass
class BoundaryPiece:
    """One boundary face/edge: rule points, arc weights, outward normals and
    the trace matrix T with T[q, i] = (dof-basis function i)(point q)."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    trace: np.ndarray


@dataclass
class LocalSpace:
    """Computable data of one element's virtual space.

    moment_cols[j] is the local dof column holding the scaled interior moment
    against basis-function j of the degree-``moment_degree`` basis.
    """

    basis: ScaledMonomialBasis
    pieces: list[BoundaryPiece]
    moment_cols: np.ndarray
    moment_degree: int
    measure: float
    domain_points: np.ndarray
    domain_weights: np.ndarray
    n_dofs: int
    D: np.ndarray | None = None
    cache: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.basis.degree

    def stiffness_gram(self) -> np.ndarray:
        if "G" not in self.cache:
            grads = self.basis.grad(self.domain_points)
            self.cache["G"] = np.einsum("q,qid,qjd->ij", self.domain_weights, grads, grads)
        return self.cache["G"]

    def mass_gram(self, degree: int) -> np.ndarray:
        key = ("H", degree)
        if key not in self.cache:
            V = self.basis.lower(degree).eval(self.domain_points)
            self.cache[key] = V.T @ (self.domain_weights[:, None] * V)
        return self.cache[key]


def h1_projector(space: LocalSpace) -> np.ndarray:
    """Energy projector onto P_k: solves the variational system with the
    right-hand side integrated by parts (volume moments + boundary traces),
    constant fixed by matching the boundary average."""
    basis = space.basis
    nk = len(basis)
    B = np.zeros((nk, space.n_dofs))

    # volume part: -int_P v (Lap m_a), expressed through interior moment dofs
    if space.k >= 2:
        n_need = space_dim(basis.dim, space.k - 2)
        if len(space.moment_cols) < n_need:
            raise ValueError(
                f"energy projector needs interior moments up to degree {space.k - 2}")
        L = basis.laplacian_map()          # (n_{k-2}, nk)
        B[:, space.moment_cols[:n_need]] -= space.measure * L.T

    # boundary part: int_{dP} v (grad m_a . n)
    for piece in space.pieces:
        gn = np.einsum("qid,qd->qi", basis.grad(piece.points), piece.normals)
        B += (piece.weights[:, None] * gn).T @ piece.trace

    G = space.stiffness_gram().copy()
    # replace the constant row by the boundary-average matching condition
    row_poly = np.zeros(nk)
    row_dof = np.zeros(space.n_dofs)
    for piece in space.pieces:
        row_poly += piece.weights @ basis.eval(piece.points)
        row_dof += piece.weights @ piece.trace
    G[0, :] = row_poly
    B[0, :] = row_dof
    try:
        P = np.linalg.solve(G, B)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular stiffness system for the energy projector: {exc}")
    space.cache["pinabla"] = P
    return P


def grad_l2_projector(space: LocalSpace, target_degree: int | None = None) -> list[np.ndarray]:
    """L2 projection of the gradient onto [P_s]^d, one matrix per component.

    Needs interior moments up to s-1: computable from the dof layout whenever
    s <= moment_degree + 1.
    """
    basis = space.basis
    s = basis.degree - 1 if target_degree is None else target_degree
    if s > space.moment_degree + 1:
        raise ValueError(
            f"gradient projection onto degree {s} needs interior moments up to"
            f" {s - 1}, but the dof layout carries them only up to {space.moment_degree}"
        )
    low = basis.lower(s)
    H = space.mass_gram(s)
    out = []
    for c in range(basis.dim):
        # row b: int_{dP} v m_b n_c - int_P v d(m_b)/dx_c
        R = np.zeros((len(low), space.n_dofs))
        for piece in space.pieces:
            vals = low.eval(piece.points)
            R += vals.T @ ((piece.weights * piece.normals[:, c])[:, None] * piece.trace)
        if s >= 1:
            Dc = low.derivative_map(c)     # (n_{s-1}, n_s)
            R[:, space.moment_cols[:Dc.shape[0]]] -= space.measure * Dc.T
        out.append(np.linalg.solve(H, R))
    return out


def dofi_projector(D: np.ndarray) -> np.ndarray:
    """Least-squares projector matching dof vectors: argmin |D c - dofs|_2.

    Rejects elements whose dofs cannot identify P_k (rank-deficient D).
    """
    rank = np.linalg.matrix_rank(D, tol=RANK_RTOL * np.linalg.norm(D))
    if rank < D.shape[1]:
        raise ValueError(
            f"dof map is not injective on P_k: rank {rank} < {D.shape[1]};"
            " the element cannot identify polynomials from its dofs"
        )
    P, *_ = np.linalg.lstsq(D, np.eye(D.shape[0]), rcond=None)
    return P


def min_covering_lines(vertices: np.ndarray, angle_tol: float = 1e-9,
                       offset_rtol: float = 1e-9) -> int:
    """Number of distinct straight lines supporting the polygon's edges."""
    v = np.asarray(vertices, dtype=float)
    n = v.shape[0]
    h = np.sqrt(np.max(np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1)))
    lines: list[tuple[float, float]] = []
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        t = b - a
        ang = np.arctan2(t[1], t[0]) % np.pi        # undirected
        nrm = np.array([t[1], -t[0]]) / np.linalg.norm(t)
        off = a @ nrm
        found = False
        for la, lo in lines:
            dang = min(abs(ang - la), np.pi - abs(ang - la))
            if dang < angle_tol and abs(abs(off) - abs(lo)) < offset_rtol * h:
                found = True
                break
        if not found:
            lines.append((ang, off))
    return len(lines)


def serendipity_projector(space: LocalSpace, polygon_vertices: np.ndarray,
                          r: int | None = None) -> np.ndarray:
    """Boundary-dominated projector onto P_k.

    For k < S(P) (S = minimal covering line count) the boundary L2 matching
    alone identifies the projection; otherwise interior moment equations up
    to degree r (with k - S(P) <= r <= k - 2) are appended and the joint
    system solved in the least-squares sense.
    """
    basis = space.basis
    k = basis.degree
    S = min_covering_lines(polygon_vertices)

    Gb = np.zeros((len(basis), len(basis)))
    Rb = np.zeros((len(basis), space.n_dofs))
    for piece in space.pieces:
        V = basis.eval(piece.points)
        Gb += V.T @ (piece.weights[:, None] * V)
        Rb += V.T @ (piece.weights[:, None] * piece.trace)

    if k < S:
        return np.linalg.solve(Gb, Rb)

    if r is None:
        r = k - 2
    if not (k - S <= r <= k - 2):
        raise ValueError(
            f"serendipity moment degree r={r} outside the admissible range"
            f" [{k - S}, {k - 2}] for S(P)={S}"
        )
    # joint least squares: boundary matching rows plus interior moment rows
    low = basis.lower(r)
    M = space.basis.eval(space.domain_points)
    Vr = low.eval(space.domain_points)
    Gi = Vr.T @ (space.domain_weights[:, None] * M)     # (n_r, nk)
    Ri = np.zeros((len(low), space.n_dofs))
    n_need = len(low)
    if n_need > len(space.moment_cols):
        raise ValueError("interior moments insufficient for the requested r")
    Ri[:, space.moment_cols[:n_need]] = space.measure * np.eye(n_need)

    A = np.vstack([Gb, Gi])
    Rhs = np.vstack([Rb, Ri])
    rank = np.linalg.matrix_rank(A, tol=RANK_RTOL * np.linalg.norm(A))
    if rank < len(basis):
        raise ValueError("serendipity normal system is rank deficient")
    P, *_ = np.linalg.lstsq(A, Rhs, rcond=None)
    return P


@dataclass
class ProjectorMatrices:
    """Bundle of the projectors of one element (dof vectors -> P_k coefficients)."""

    pinabla: np.ndarray
    grad_l2: list[np.ndarray]
    dofi: np.ndarray | None
    serendipity: np.ndarray | None
    D: np.ndarray


def projector_bundle(space: LocalSpace, polygon_vertices: np.ndarray | None = None,
                     with_dofi: bool = True, with_serendipity: bool = False,
                     r: int | None = None) -> ProjectorMatrices:
    pin = h1_projector(space)
    grads = grad_l2_projector(space)
    dofi = dofi_projector(space.D) if with_dofi and space.D is not None else None
    ser = None
    if with_serendipity and polygon_vertices is not None:
        ser = serendipity_projector(space, polygon_vertices, r=r)
    return ProjectorMatrices(pin, grads, dofi, ser, space.D)
