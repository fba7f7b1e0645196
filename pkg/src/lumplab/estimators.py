"""Scikit-learn style wrappers around the mass preconditioners.

Each estimator is fitted on a mass matrix ``M`` and learns an operator
``preconditioner_``.  ``transform(X)`` applies the inverse of that
operator to every row of ``X`` (one right-hand side per sample) and
``inverse_transform(X)`` applies the operator itself.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .lumping import make_Pi, make_Pij
from .nkp import nkp_preconditioner, nkp_rank1, two_level_preconditioner
from .utils.validation import check_block_dims, check_rows, check_symmetric_matrix


class _PreconditionerMixin(TransformerMixin):
    def transform(self, X):
        check_is_fitted(self, "preconditioner_")
        X = check_rows(X, self.n_features_in_)
        return np.asarray(self.preconditioner_.solve(X.T)).T

    def inverse_transform(self, X):
        check_is_fitted(self, "preconditioner_")
        X = check_rows(X, self.n_features_in_)
        dense = self.preconditioner_.to_dense()
        return X @ dense.T

    def to_dense(self):
        check_is_fitted(self, "preconditioner_")
        return self.preconditioner_.to_dense()


class BandedLumpedMass(_PreconditionerMixin, BaseEstimator):
    """Banded lumped mass ``P_i = D_i + L(R_i)``.

    Parameters
    ----------
    band : int, default=1
        Band index ``i``; ``P_1`` is the row-sum lumped matrix.
    """

    def __init__(self, band=1):
        self.band = band

    def fit(self, M, y=None):
        M = check_symmetric_matrix(M)
        if int(self.band) < 1:
            raise ValueError("band must be >= 1")
        self.preconditioner_ = make_Pi(M, int(self.band))
        self.n_features_in_ = M.shape[0]
        return self


class KroneckerLumpedMass(_PreconditionerMixin, BaseEstimator):
    """``P_{1,i} x P_{2,j}`` built from exact Kronecker factors of ``M``.

    The factors are recovered with a rank-one nearest Kronecker product,
    so ``M`` should be (numerically) separable; use
    :class:`LumpedNearestKronecker` otherwise.

    Parameters
    ----------
    block_dims : tuple of int
    bands : tuple of int, default=(1, 1)
    """

    def __init__(self, block_dims, bands=(1, 1)):
        self.block_dims = block_dims
        self.bands = bands

    def fit(self, M, y=None):
        M = check_symmetric_matrix(M)
        dims = check_block_dims(self.block_dims, M.shape[0])
        res = nkp_rank1(M, dims)
        self.kronecker_error_ = res.error
        self.preconditioner_ = make_Pij([0.5 * (f + f.T) for f in res.factors], list(self.bands))
        self.n_features_in_ = M.shape[0]
        return self


class NearestKroneckerProduct(_PreconditionerMixin, BaseEstimator):
    """Rank-one nearest Kronecker product ``M~ = B x C``.

    Attributes
    ----------
    singular_values_ : ndarray
        Singular values of the rearranged matrix.
    kronecker_rank_ : int
    error_ : float
        ``||M - M~||_F``.
    """

    def __init__(self, block_dims):
        self.block_dims = block_dims

    def fit(self, M, y=None):
        M = check_symmetric_matrix(M)
        dims = check_block_dims(self.block_dims, M.shape[0])
        res = nkp_rank1(M, dims)
        self.singular_values_ = res.singular_values
        self.kronecker_rank_ = res.rank
        self.error_ = res.error
        self.preconditioner_ = nkp_preconditioner(M, dims)
        self.n_features_in_ = M.shape[0]
        return self


class LumpedNearestKronecker(_PreconditionerMixin, BaseEstimator):
    """Two-level preconditioner: nearest Kronecker product, then ``P_ii``.

    Parameters
    ----------
    block_dims : tuple of int
    band : int, default=1
    """

    def __init__(self, block_dims, band=1):
        self.block_dims = block_dims
        self.band = band

    def fit(self, M, y=None):
        M = check_symmetric_matrix(M)
        dims = check_block_dims(self.block_dims, M.shape[0])
        self.preconditioner_ = two_level_preconditioner(M, dims, int(self.band))
        self.n_features_in_ = M.shape[0]
        return self
