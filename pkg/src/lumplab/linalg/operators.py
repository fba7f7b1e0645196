"""Matrix containers: dense symmetric, banded SPD and Kronecker sums.

All three expose the same small protocol used by the rest of the package:
``n``, ``to_dense()``, ``matvec(x)`` and ``solve(rhs)``.  Instances are
treated as immutable; factorizations are computed lazily and cached.
"""

from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np

from ..errors import DimensionError, NotPositiveDefinite
from . import _kernels
from .dense import cho_solve, cholesky

MATERIALIZE_CAP = 20000


class SymMatrix:
    """Dense symmetric matrix; the input is symmetrized by averaging."""

    def __init__(self, data):
        a = np.array(getattr(data, "data", data), dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionError(f"SymMatrix needs a non-empty square array, got {a.shape}")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self.data = a

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def to_dense(self):
        return self.data.copy()

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def matvec(self, x):
        return self.data @ x

    @cached_property
    def cholesky_factor(self):
        return cholesky(self.data)

    def solve(self, rhs):
        return cho_solve(self.cholesky_factor, rhs)

    def bandwidth(self, tol=0.0):
        return matrix_bandwidth(self.data, tol)

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def matrix_bandwidth(a, tol=0.0):
    """Largest ``|i - j|`` with ``|a[i, j]| > tol``."""
    a = np.asarray(getattr(a, "data", a))
    i, j = np.nonzero(np.abs(a) > tol)
    return int(np.max(np.abs(i - j))) if i.size else 0


class BandedSPD:
    """Symmetric positive-definite band matrix in packed upper storage.

    ``bands[d, i]`` holds ``A[i, i + d]`` for ``d = 0..b``; unused tail
    entries of each super-diagonal are zero.

    Parameters
    ----------
    bands : ndarray, shape (b + 1, n)
    check : bool
        Factorize on construction and raise if not positive definite.
    """

    def __init__(self, bands, check=True):
        bands = np.array(bands, dtype=float)
        if bands.ndim != 2 or bands.shape[1] < 1:
            raise DimensionError("bands must be a (b + 1, n) array")
        n = bands.shape[1]
        for d in range(1, bands.shape[0]):
            bands[d, max(n - d, 0):] = 0.0
        bands.setflags(write=False)
        self.bands = bands
        self.factor_flops = 0
        if check:
            self.factor  # noqa: B018

    @classmethod
    def from_dense(cls, a, bandwidth=None, check=True):
        a = np.asarray(getattr(a, "data", a), dtype=float)
        n = a.shape[0]
        if bandwidth is None:
            bandwidth = matrix_bandwidth(a)
        b = min(int(bandwidth), n - 1)
        sym = 0.5 * (a + a.T)
        outside = np.abs(np.triu(sym, b + 1))
        if outside.size and outside.max() > 0.0:
            raise DimensionError(f"matrix has entries outside bandwidth {b}")
        bands = np.zeros((b + 1, n))
        for d in range(b + 1):
            bands[d, : n - d] = np.diagonal(sym, d)
        return cls(bands, check=check)

    @property
    def n(self):
        return self.bands.shape[1]

    @property
    def bandwidth(self):
        return self.bands.shape[0] - 1

    @property
    def shape(self):
        return (self.n, self.n)

    def to_dense(self):
        n = self.n
        a = np.zeros((n, n))
        for d in range(self.bandwidth + 1):
            idx = np.arange(n - d)
            a[idx, idx + d] = self.bands[d, : n - d]
            a[idx + d, idx] = self.bands[d, : n - d]
        return a

    def diagonal(self):
        return self.bands[0].copy()

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        y = self.bands[0] * x
        n = self.n
        for d in range(1, self.bandwidth + 1):
            band = self.bands[d, : n - d]
            y[: n - d] += band * x[d:]
            y[d:] += band * x[: n - d]
        return y

    @cached_property
    def factor(self):
        lb, piv, val, flops = _kernels.banded_cholesky(np.ascontiguousarray(self.bands))
        if piv >= 0:
            raise NotPositiveDefinite(piv, val, "banded matrix")
        object.__setattr__(self, "factor_flops", int(flops))
        return lb

    @property
    def is_positive_definite(self):
        try:
            self.factor  # noqa: B018
        except NotPositiveDefinite:
            return False
        return True

    def solve(self, rhs):
        from .banded import banded_cholesky_solve

        return banded_cholesky_solve(self, rhs)

    def __repr__(self):
        return f"BandedSPD(n={self.n}, bandwidth={self.bandwidth})"


def _dense(f):
    return f.to_dense() if hasattr(f, "to_dense") else np.asarray(f, dtype=float)


@dataclass(frozen=True)
class KronTerm:
    weight: float
    factors: tuple


@dataclass(frozen=True)
class KronOperator:
    """Weighted sum of Kronecker products ``sum_i w_i (U_i x V_i [x W_i])``.

    Factors may be ndarrays, :class:`SymMatrix` or :class:`BandedSPD`.
    Terms are kept in non-increasing weight order.
    """

    terms: tuple
    dims: tuple = field(init=False)

    def __post_init__(self):
        terms = tuple(
            t if isinstance(t, KronTerm) else KronTerm(float(t[0]), tuple(t[1])) for t in self.terms
        )
        if not terms:
            raise DimensionError("KronOperator needs at least one term")
        dims = None
        for t in terms:
            if len(t.factors) not in (2, 3):
                raise DimensionError("Kronecker terms need 2 or 3 factors")
            if t.weight < 0:
                raise ValueError("Kronecker weights must be non-negative")
            d = tuple(_factor_n(f) for f in t.factors)
            if dims is None:
                dims = d
            elif d != dims:
                raise DimensionError(f"inconsistent factor dimensions {d} vs {dims}")
        terms = tuple(sorted(terms, key=lambda t: -t.weight))
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def single(cls, *factors, weight=1.0):
        return cls((KronTerm(float(weight), tuple(factors)),))

    @property
    def n(self):
        return int(np.prod(self.dims))

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def rank(self):
        return len(self.terms)

    def to_dense(self, cap=MATERIALIZE_CAP):
        from .kron import _expand

        return _expand(self, cap)

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.n)
        for t in self.terms:
            y = x.reshape(self.dims)
            for axis, f in enumerate(t.factors):
                y = np.moveaxis(np.tensordot(_dense(f), y, axes=([1], [axis])), 0, axis)
            out += t.weight * y.reshape(-1)
        return out

    def solve(self, rhs):
        from .kron import kron_solve

        return kron_solve(self, rhs)


def _factor_n(f):
    if hasattr(f, "n"):
        return int(f.n)
    f = np.asarray(f)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise DimensionError("Kronecker factors must be square")
    return f.shape[0]


def kron_all(mats):
    return reduce(np.kron, [_dense(m) for m in mats])
