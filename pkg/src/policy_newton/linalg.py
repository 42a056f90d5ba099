"""Smallest-eigenpair helpers shared by the oracle and the cubic solver."""

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .exceptions import InvalidInput, NotSymmetric

DENSE_EIG_LIMIT = 2000


def min_eigenvalue(matrix) -> tuple:
    """Smallest eigenvalue and a unit eigenvector of a symmetric matrix."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {M.shape}")
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > 1e-8:
        raise NotSymmetric(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    M = 0.5 * (M + M.T)
    if M.shape[0] <= DENSE_EIG_LIMIT:
        w, V = np.linalg.eigh(M)
        return float(w[0]), V[:, 0]
    return min_eigenvalue_iterative(lambda v: M @ v, M.shape[0])


def min_eigenvalue_iterative(matvec, dim: int, tol: float = 1e-6, seed: int = 0) -> tuple:
    """Smallest eigenpair of a symmetric operator known only through products.

    Uses ARPACK's implicitly restarted Lanczos; tiny problems fall back to
    assembling the operator column by column.
    """
    if dim < 3:
        M = np.column_stack([matvec(e) for e in np.eye(dim)])
        w, V = np.linalg.eigh(0.5 * (M + M.T))
        return float(w[0]), V[:, 0]
    op = LinearOperator((dim, dim), matvec=matvec, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(dim)
    w, V = eigsh(op, k=1, which="SA", tol=tol, v0=v0)
    return float(w[0]), V[:, 0]
