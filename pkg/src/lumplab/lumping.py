"""Row-sum lumping and the banded and Kronecker lumped-mass families.

For a symmetric ``B`` and band index ``i >= 1`` the splitting
``B = D_i + R_i`` keeps in ``D_i`` every diagonal with offset ``< i``;
the family member ``P_i = D_i + L(R_i)`` then has bandwidth ``i - 1``,
with ``P_1 = L(B)`` and ``P_n = B``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotPositiveDefinite
from .linalg import BandedSPD, KronOperator, SymMatrix


def _dense(b):
    if hasattr(b, "to_dense"):
        return np.asarray(b.to_dense(), dtype=float)
    return np.asarray(b, dtype=float)


def lump_diagonal(b):
    """``d_i = sum_j |b_ij|``."""
    b = _dense(b)
    return np.abs(b).sum(axis=1)


def lump(b):
    """Row-sum lumped matrix ``L(B) = diag(sum_j |b_ij|)``.

    Zero rows give zero diagonal entries; definiteness is left to the
    caller.
    """
    return SymMatrix(np.diag(lump_diagonal(b)))


@dataclass(frozen=True)
class BandSplit:
    """``B = D + R`` with ``D`` holding all diagonals of offset ``< i``."""

    i: int
    D: np.ndarray
    R: np.ndarray


def _offsets(n):
    idx = np.arange(n)
    return np.abs(idx[:, None] - idx[None, :])


def band_split(b, i):
    b = _dense(b)
    n = b.shape[0]
    if not 1 <= i <= n:
        raise DimensionError(f"band index must lie in [1, {n}], got {i}")
    inside = _offsets(n) < i
    d = np.where(inside, b, 0.0)
    r = np.where(inside, 0.0, b)
    return BandSplit(int(i), d, r)


@dataclass(frozen=True)
class LumpedFamilyMember:
    """``P_i`` stored as a packed band matrix of bandwidth ``i - 1``."""

    i: int
    P: BandedSPD

    @property
    def n(self):
        return self.P.n

    @property
    def shape(self):
        return self.P.shape

    @property
    def bandwidth(self):
        return self.P.bandwidth

    def to_dense(self):
        return self.P.to_dense()

    def matvec(self, x):
        return self.P.matvec(x)

    def solve(self, rhs):
        return self.P.solve(rhs)


def pi_dense(b, i):
    """Dense ``P_i = D_i + L(R_i)`` without the definiteness check."""
    split = band_split(b, i)
    return split.D + np.diag(lump_diagonal(split.R))


def make_Pi(b, i):
    """Banded lumped-mass member ``P_i`` of an SPD matrix ``B``.

    Raises
    ------
    NotPositiveDefinite
        If ``B`` has a zero row or ``P_i`` fails to factor, which cannot
        happen for SPD ``B``.
    """
    b = _dense(b)
    n = b.shape[0]
    i = min(int(i), n) if i >= 1 else i
    p = pi_dense(b, i)
    diag = np.diag(p)
    if np.any(diag <= 0.0):
        k = int(np.flatnonzero(diag <= 0.0)[0])
        raise NotPositiveDefinite(k, diag[k], "lumped matrix (zero row in source)")
    return LumpedFamilyMember(i, BandedSPD.from_dense(p, bandwidth=i - 1))


def make_Pij(factors, indices):
    """Single-term Kronecker operator ``P_{1,i} x P_{2,j} [x P_{3,k}]``."""
    factors = list(factors)
    if isinstance(indices, int):
        indices = [indices] * len(factors)
    indices = list(indices)
    if len(factors) not in (2, 3) or len(indices) != len(factors):
        raise DimensionError("need 2 or 3 factors with one band index each")
    members = [make_Pi(f, i).P for f, i in zip(factors, indices)]
    return KronOperator.single(*members)


def make_Pii(factors, i):
    """``P_ii`` (or ``P_iii``): equal band index in every direction."""
    return make_Pij(factors, [i] * len(list(factors)))


def vector_pde_wrap(p, d):
    """Block-diagonal ``I_d x P`` for a ``d``-component vector field."""
    if d not in (2, 3):
        raise DimensionError("vector_pde_wrap needs d in {2, 3}")
    if isinstance(p, LumpedFamilyMember):
        p = p.P
    elif not hasattr(p, "solve"):
        p = SymMatrix(p)
    return KronOperator.single(np.eye(d), p)
