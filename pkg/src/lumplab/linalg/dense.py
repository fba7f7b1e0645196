"""Dense symmetric eigendecomposition, SVD and Cholesky."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, DimensionError, NotPositiveDefinite
from . import _kernels

DEFAULT_TOL = 1e-12
JACOBI_MAX_N = 64
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigResult:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""

    values: np.ndarray
    vectors: np.ndarray
    orthogonality: float

    def __iter__(self):
        return iter((self.values, self.vectors))


@dataclass(frozen=True)
class SvdResult:
    """Singular triplets sorted by non-increasing singular value."""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def truncate(self, k):
        """Best rank-``k`` approximation as a dense matrix."""
        u = self.left_vectors[:, :k]
        return (u * self.singular_values[:k]) @ self.right_vectors[:, :k].T


def _as_square(a, name="A"):
    a = np.asarray(getattr(a, "data", a), dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionError(f"{name} must have n >= 1")
    return a


def sym_eig(a, tol=DEFAULT_TOL, method=None):
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    a : array_like or SymMatrix
        Symmetric matrix; only its symmetric part is used.
    tol : float
        Relative stopping tolerance of the Jacobi sweeps.
    method : {None, "jacobi", "ql"}
        Force an algorithm.  By default cyclic Jacobi is used up to
        n = 64 and Householder tridiagonalization with implicit-shift QL
        above.

    Returns
    -------
    EigResult
        Ascending eigenvalues, eigenvectors as columns.

    Raises
    ------
    ConvergenceError
        If the iteration cap is reached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = _as_square(a)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    if n == 1:
        return EigResult(a[0].copy(), np.ones((1, 1)), 0.0)
    if method is None:
        method = "jacobi" if n <= JACOBI_MAX_N else "ql"
    if method == "jacobi":
        w, vt, sweeps, off = _kernels.jacobi_eig(a, tol, JACOBI_MAX_SWEEPS)
        if sweeps < 0:
            raise ConvergenceError("Jacobi sweep cap reached", off)
    elif method == "ql":
        d, e, qt = _kernels.householder_tridiag(a)
        w, vt, status, res = _kernels.tql_implicit(d, e, qt, 50 * n)
        if status < 0:
            raise ConvergenceError("QL iteration cap reached", res)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = vt[order].T.copy()
    ortho = float(np.linalg.norm(v.T @ v - np.eye(n)))
    return EigResult(w, v, ortho)


def eigvalsh(a, tol=DEFAULT_TOL):
    return sym_eig(a, tol).values


def svd(a, tol=DEFAULT_TOL, max_sweeps=100):
    """Thin SVD by one-sided Jacobi.

    Returns an :class:`SvdResult` with ``min(m, n)`` triplets.  Left vectors
    belonging to zero singular values are left as zero columns.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(getattr(a, "data", a), dtype=float)
    if a.ndim != 2:
        raise DimensionError("svd expects a 2-d array")
    m, n = a.shape
    transposed = m < n
    if transposed:
        a = a.T
        m, n = n, m
    sigma, ut, vt, sweeps = _kernels.jacobi_svd(np.ascontiguousarray(a.T), tol, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError("one-sided Jacobi sweep cap reached")
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    u = ut[order].T.copy()
    v = vt[order].T.copy()
    if transposed:
        u, v = v, u
    return SvdResult(sigma, u, v)


def cholesky(a, what="matrix"):
    """Lower Cholesky factor ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefinite
        Carrying the index of the first non-positive pivot.
    """
    a = _as_square(a)
    low, piv, val = _kernels.cholesky(np.ascontiguousarray(a))
    if piv >= 0:
        raise NotPositiveDefinite(piv, val, what)
    return low


def is_positive_definite(a):
    try:
        cholesky(a)
    except NotPositiveDefinite:
        return False
    return True


def solve_lower(low, b):
    b = np.asarray(b, dtype=float)
    vec = b.ndim == 1
    x = _kernels.solve_lower(low, np.ascontiguousarray(b.reshape(b.shape[0], -1)))
    return x[:, 0] if vec else x


def solve_lower_t(low, b):
    b = np.asarray(b, dtype=float)
    vec = b.ndim == 1
    x = _kernels.solve_upper_t(low, np.ascontiguousarray(b.reshape(b.shape[0], -1)))
    return x[:, 0] if vec else x


def cho_solve(low, b):
    """Solve ``L L^T x = b`` given the Cholesky factor."""
    return solve_lower_t(low, solve_lower(low, b))
