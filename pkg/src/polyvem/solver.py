"""Sparse symmetric linear solves: diagonal-preconditioned CG and dense Cholesky."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class SolverError(RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass
class LinearSystem:
    """Symmetric system with a set of constrained dofs (values to eliminate)."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constraints: dict[int, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.rhs.shape[0]

    def constrained(self) -> tuple[sp.csr_matrix, np.ndarray]:
        """Symmetric elimination: fixed dofs become identity rows/columns."""
        A = self.matrix.tocsc(copy=True)
        b = self.rhs.copy()
        if self.constraints:
            idx = np.fromiter(self.constraints.keys(), dtype=int)
            vals = np.fromiter(self.constraints.values(), dtype=float)
            b -= A[:, idx] @ vals
            mask = np.ones(self.n, dtype=bool)
            mask[idx] = False
            A = A.tolil()
            A[idx, :] = 0.0
            A[:, idx] = 0.0
            for i in idx:
                A[i, i] = 1.0
            b[idx] = vals
            A = A.tocsr()
        else:
            A = A.tocsr()
        return A, b


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    history: list[float]


def solve(system: LinearSystem, method: str = "cg", tol: float = 1e-12,
          max_iter: int | None = None) -> tuple[np.ndarray, SolveReport]:
    """Solve the constrained system; verifies the final residual."""
    A, b = system.constrained()
    if method == "dense":
        if system.n > 2000:
            raise SolverError(f"dense solver limited to 2000 dofs, got {system.n}")
        x, report = _dense_solve(A.toarray(), b)
    elif method == "cg":
        x, report = _cg(A, b, tol=tol, max_iter=max_iter or max(20 * system.n, 1000))
    else:
        raise ValueError(f"unknown solver method {method!r}")

    scale = np.linalg.norm(b) or 1.0
    resid = np.linalg.norm(A @ x - b) / scale
    if resid > 10 * max(tol, 1e-12):
        raise SolverError(f"post-solve residual {resid:.3e} exceeds 10*tol", report.history)
    report.residual = resid
    return x, report


def _dense_solve(A: np.ndarray, b: np.ndarray):
    from scipy.linalg import cho_factor, cho_solve

    try:
        c = cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dense factorization failed (matrix not SPD): {exc}")
    x = cho_solve(c, b)
    return x, SolveReport("dense", 0, 0.0, [])


def _cg(A: sp.csr_matrix, b: np.ndarray, tol: float, max_iter: int):
    """Jacobi-preconditioned conjugate gradients with curvature detection."""
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise SolverError("non-SPD system: nonpositive diagonal entry")
    Minv = 1.0 / diag
    x = np.zeros_like(b)
    r = b - A @ x
    z = Minv * r
    p = z.copy()
    rz = r @ z
    bnorm = np.linalg.norm(b) or 1.0
    history = [np.linalg.norm(r) / bnorm]
    if history[-1] <= tol:
        return x, SolveReport("cg", 0, history[-1], history)
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverError(f"negative curvature at iteration {it}: matrix not SPD",
                              history)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        history.append(np.linalg.norm(r) / bnorm)
        if history[-1] <= tol:
            return x, SolveReport("cg", it, history[-1], history)
        z = Minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG did not converge in {max_iter} iterations (residual {history[-1]:.3e})",
        history)
