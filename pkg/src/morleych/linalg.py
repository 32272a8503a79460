"""Direct sparse solves with residual checks."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    """Singular or inaccurate linear solve."""


def linear_solve(op, rhs, rtol: float = 1e-12, refine: int = 2) -> np.ndarray:
    """Solve ``op @ x = rhs`` by sparse LU with iterative refinement.

    Raises :class:`SolverError` if the factorization is singular or the
    relative residual stays above ``rtol``.
    """
    A = sps.csc_matrix(op)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise SolverError(f"shape mismatch: {A.shape} vs {b.shape}")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    x = lu.solve(b)
    res = np.linalg.norm(b - A @ x) / bnorm
    for _ in range(refine):
        if res <= rtol:
            break
        x = x + lu.solve(b - A @ x)
        res = np.linalg.norm(b - A @ x) / bnorm
    if not np.isfinite(res) or res > rtol:
        raise SolverError(f"relative residual {res:.3e} exceeds {rtol:.1e}")
    return x


def solve_constrained(op, rhs, free: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Solve on the ``free`` index set; other entries of the result are zero."""
    op = sps.csr_matrix(op)
    A = op[free][:, free]
    x = np.zeros(op.shape[0])
    x[free] = linear_solve(A, np.asarray(rhs)[free], rtol=rtol)
    return x
