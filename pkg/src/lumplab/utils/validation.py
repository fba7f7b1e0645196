"""Validation of matrix inputs for the estimator wrappers."""

import numpy as np

from ..errors import DimensionError


def check_symmetric_matrix(M, tol=1e-12):
    """Return ``M`` as a float array after checking it is square and symmetric.

    Symmetry is tested relative to the largest entry.
    """
    M = np.asarray(M.to_dense() if hasattr(M, "to_dense") else M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite values")
    scale = max(np.max(np.abs(M)), 1.0)
    if np.max(np.abs(M - M.T)) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def check_block_dims(dims, n):
    dims = tuple(int(d) for d in dims)
    if len(dims) not in (2, 3) or any(d < 1 for d in dims) or int(np.prod(dims)) != n:
        raise DimensionError(f"block dims {dims} do not factor dimension {n}")
    return dims


def check_rows(X, n):
    """2-d float array with ``n`` columns (a 1-d input is one row)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n:
        raise DimensionError(f"expected rows of length {n}, got shape {X.shape}")
    return X
