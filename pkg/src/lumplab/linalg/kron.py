"""Kronecker-product materialization and factor-wise solves.

Index convention: for ``U (n1 x n1)`` and ``V (n2 x n2)`` the entry
``(U x V)[i * n2 + j, k * n2 + l] = U[i, k] V[j, l]``, i.e. ``np.kron``.
"""

import numpy as np

from ..errors import DimensionError
from .operators import MATERIALIZE_CAP, KronOperator, SymMatrix, kron_all


def _expand(kop, cap):
    if kop.n > cap:
        raise DimensionError(f"refusing to materialize dimension {kop.n} > cap {cap}")
    full = np.zeros((kop.n, kop.n))
    for t in kop.terms:
        full += t.weight * kron_all(t.factors)
    return full


def kron_materialize(kop, cap=MATERIALIZE_CAP):
    """Dense ``sum_i w_i (U_i x V_i [x W_i])``.

    Returns a :class:`SymMatrix` when the expansion is exactly symmetric
    (always the case for symmetric factors) and the plain entrywise
    expansion as an ndarray otherwise, so nothing is averaged away.

    Raises :class:`DimensionError` if the total dimension exceeds ``cap``.
    """
    full = _expand(kop, cap)
    if np.array_equal(full, full.T):
        return SymMatrix(full)
    return full


def _solver(f):
    if hasattr(f, "solve"):
        return f
    return SymMatrix(f)


def kron_solve(kop, rhs):
    """Solve a single-term Kronecker system through factor solves only.

    ``(U x V) x = r`` is rewritten as ``U X V^T = R`` with ``R`` the
    row-major reshape of ``r``; each factor is applied along its own axis.
    """
    if not isinstance(kop, KronOperator):
        raise TypeError("kron_solve expects a KronOperator")
    if kop.rank != 1:
        raise DimensionError("kron_solve needs a single-term KronOperator")
    term = kop.terms[0]
    if term.weight <= 0:
        raise ValueError("zero-weight Kronecker term is singular")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != kop.n:
        raise DimensionError(f"rhs has length {rhs.shape[0]}, expected {kop.n}")
    extra = rhs.shape[1:]
    y = rhs.reshape(kop.dims + extra)
    for axis, f in enumerate(term.factors):
        solver = _solver(f)
        moved = np.moveaxis(y, axis, 0)
        shape = moved.shape
        sol = solver.solve(np.ascontiguousarray(moved.reshape(shape[0], -1)))
        y = np.moveaxis(np.asarray(sol).reshape(shape), 0, axis)
    return (y / term.weight).reshape(rhs.shape)
