"""Banded Cholesky and Thomas solves for :class:`BandedSPD` operators."""

import numpy as np

from ..errors import DimensionError, NotPositiveDefinite
from . import _kernels
from .operators import BandedSPD


def _rhs(p, rhs):
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != p.n:
        raise DimensionError(f"rhs has length {rhs.shape[0]}, expected {p.n}")
    return rhs


def banded_cholesky_solve(p, rhs, return_flops=False):
    """Solve ``P x = rhs`` through the cached band Cholesky factor.

    Work is O(n b^2) for the factorization and O(n b) per solve.  With
    ``return_flops`` the floating point operation count of the
    factorization plus this solve is returned as well.  ``rhs`` may be a
    vector or an (n, k) block.
    """
    if not isinstance(p, BandedSPD):
        p = BandedSPD.from_dense(p)
    rhs = _rhs(p, rhs)
    lb = p.factor
    if rhs.ndim == 1:
        x, flops = _kernels.banded_solve(lb, np.ascontiguousarray(rhs))
    else:
        cols = [_kernels.banded_solve(lb, np.ascontiguousarray(rhs[:, j])) for j in range(rhs.shape[1])]
        x = np.column_stack([c[0] for c in cols])
        flops = sum(c[1] for c in cols)
    if return_flops:
        return x, p.factor_flops + flops
    return x


def thomas_solve(p, rhs, return_flops=False):
    """Tridiagonal SPD solve in O(n) with the Thomas algorithm."""
    if not isinstance(p, BandedSPD):
        p = BandedSPD.from_dense(p, bandwidth=1, check=False)
    if p.bandwidth > 1:
        raise DimensionError(f"Thomas algorithm needs bandwidth <= 1, got {p.bandwidth}")
    rhs = _rhs(p, rhs)
    diag = np.ascontiguousarray(p.bands[0])
    off = np.ascontiguousarray(p.bands[1]) if p.bandwidth == 1 else np.zeros(p.n)
    if rhs.ndim == 1:
        x, piv, val, flops = _kernels.thomas(diag, off, np.ascontiguousarray(rhs))
        if piv >= 0:
            raise NotPositiveDefinite(piv, val, "tridiagonal matrix")
    else:
        cols = []
        flops = 0
        for j in range(rhs.shape[1]):
            xj, piv, val, fj = _kernels.thomas(diag, off, np.ascontiguousarray(rhs[:, j]))
            if piv >= 0:
                raise NotPositiveDefinite(piv, val, "tridiagonal matrix")
            cols.append(xj)
            flops += fj
        x = np.column_stack(cols)
    return (x, flops) if return_flops else x
