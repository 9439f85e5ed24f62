"""Scaled monomial bases on segments, polygons and polyhedra.

The single polynomial representation used everywhere in the library:
m_alpha(x) = ((x - x_c) / h)^alpha with |alpha| <= degree, enumerated in
graded lexicographic order (total degree ascending, exponent tuples in
descending lexicographic order within each degree), so that in 2D the
sequence starts 1, x, y, x^2, xy, y^2, ...
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def multi_indices(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices with |alpha| <= degree, graded-lex ordered."""
    if degree < 0:
        return ()
    out: list[tuple[int, ...]] = []
    for total in range(degree + 1):
        out.extend(_indices_of_degree(dim, total))
    return tuple(out)


def _indices_of_degree(dim: int, total: int) -> list[tuple[int, ...]]:
    if dim == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _indices_of_degree(dim - 1, total - first):
            out.append((first,) + rest)
    return out


def space_dim(dim: int, degree: int) -> int:
    """dim P_degree(R^dim); 0 for degree < 0 (P_{-1} = {0})."""
    if degree < 0:
        return 0
    n = 1
    for i in range(1, dim + 1):
        n = n * (degree + i) // i
    return n


@dataclass(frozen=True)
class ScaledMonomialBasis:
    """Monomials ((x - centroid)/diameter)^alpha, |alpha| <= degree."""

    centroid: np.ndarray
    diameter: float
    degree: int
    dim: int
    exponents: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.degree < 0:
            exps = np.zeros((0, self.dim), dtype=int)
        else:
            exps = np.array(multi_indices(self.dim, self.degree), dtype=int)
        object.__setattr__(self, "centroid", np.asarray(self.centroid, dtype=float))
        object.__setattr__(self, "exponents", exps)

    def __len__(self) -> int:
        return self.exponents.shape[0]

    def index_of(self, alpha: tuple[int, ...]) -> int:
        return multi_indices(self.dim, self.degree).index(tuple(alpha))

    def _scaled(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - self.centroid) / self.diameter

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Value matrix, shape (n_points, n_basis)."""
        xi = self._scaled(points)
        npts = xi.shape[0]
        # power tables per coordinate: pw[d][:, p] = xi_d^p
        pw = [np.vander(xi[:, d], self.degree + 1, increasing=True) for d in range(self.dim)]
        out = np.ones((npts, len(self)))
        for j, alpha in enumerate(self.exponents):
            v = np.ones(npts)
            for d in range(self.dim):
                if alpha[d]:
                    v = v * pw[d][:, alpha[d]]
            out[:, j] = v
        return out

    def grad(self, points: np.ndarray) -> np.ndarray:
        """Gradient tensor, shape (n_points, n_basis, dim)."""
        xi = self._scaled(points)
        npts = xi.shape[0]
        pw = [np.vander(xi[:, d], self.degree + 1, increasing=True) for d in range(self.dim)]
        out = np.zeros((npts, len(self), self.dim))
        for j, alpha in enumerate(self.exponents):
            for d in range(self.dim):
                if alpha[d] == 0:
                    continue
                v = np.full(npts, alpha[d] / self.diameter)
                for e in range(self.dim):
                    p = alpha[e] - (1 if e == d else 0)
                    if p:
                        v = v * pw[e][:, p]
                out[:, j, d] = v
        return out

    def lower(self, degree: int) -> "ScaledMonomialBasis":
        """Basis of lower degree on the same element frame."""
        return ScaledMonomialBasis(self.centroid, self.diameter, degree, self.dim)

    def derivative_map(self, axis: int) -> np.ndarray:
        """Exact coefficient map of d/dx_axis into the degree-1 lower basis.

        Returns M with shape (dim P_{s-1}, n_basis): coefficients of the
        derivative of each basis function in the lower basis.
        """
        lower = multi_indices(self.dim, self.degree - 1)
        lookup = {a: i for i, a in enumerate(lower)}
        M = np.zeros((len(lower), len(self)))
        for j, alpha in enumerate(self.exponents):
            a = alpha[axis]
            if a == 0:
                continue
            tgt = tuple(alpha - np.eye(self.dim, dtype=int)[axis])
            M[lookup[tgt], j] = a / self.diameter
        return M

    def laplacian_map(self) -> np.ndarray:
        """Exact coefficient map of the Laplacian into the degree-2 lower basis."""
        lower = multi_indices(self.dim, self.degree - 2)
        lookup = {a: i for i, a in enumerate(lower)}
        M = np.zeros((len(lower), len(self)))
        for j, alpha in enumerate(self.exponents):
            for d in range(self.dim):
                a = alpha[d]
                if a < 2:
                    continue
                tgt = list(alpha)
                tgt[d] -= 2
                M[lookup[tuple(tgt)], j] += a * (a - 1) / self.diameter**2
        return M


def gram_matrix(basis: ScaledMonomialBasis, points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """L2 Gram matrix of the basis under a quadrature rule."""
    V = basis.eval(points)
    return V.T @ (weights[:, None] * V)


def orthonormalize(gram: np.ndarray, cond_limit: float = 1e14) -> np.ndarray:
    """Triangular change of basis C with m~_i = sum_j C[i, j] m_j orthonormal.

    Cholesky of the Gram matrix; rejects elements whose Gram condition
    number exceeds ``cond_limit`` (too distorted for this degree).
    """
    if np.linalg.cond(gram) > cond_limit:
        raise ValueError(
            f"Gram matrix condition {np.linalg.cond(gram):.3e} beyond {cond_limit:.1e};"
            " element too distorted for this polynomial degree"
        )
    L = np.linalg.cholesky(gram)
    return np.linalg.inv(L)


def l2_project_from_moments(moments: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Coefficients of the L2 projection given moments int_P v m_j.

    ``moments`` must match the full basis behind ``gram``; the result is the
    unique minimizer of ||v - p||_{L2}, idempotent on polynomials.
    """
    moments = np.asarray(moments, dtype=float)
    if moments.shape[0] != gram.shape[0]:
        raise ValueError(
            f"moment vector length {moments.shape[0]} does not match basis size {gram.shape[0]}"
        )
    return np.linalg.solve(gram, moments)
