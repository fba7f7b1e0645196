"""Dense, banded and Kronecker linear-algebra kernels."""

from .banded import banded_cholesky_solve, thomas_solve
from .dense import (
    EigResult,
    SvdResult,
    cho_solve,
    cholesky,
    eigvalsh,
    is_positive_definite,
    svd,
    sym_eig,
)
from .io import read_dense_csv, read_matrix_market, write_dense_csv, write_matrix_market
from .kron import kron_materialize, kron_solve
from .operators import BandedSPD, KronOperator, KronTerm, SymMatrix, kron_all, matrix_bandwidth

__all__ = [
    "BandedSPD",
    "EigResult",
    "KronOperator",
    "KronTerm",
    "SvdResult",
    "SymMatrix",
    "banded_cholesky_solve",
    "cho_solve",
    "cholesky",
    "eigvalsh",
    "is_positive_definite",
    "kron_all",
    "kron_materialize",
    "kron_solve",
    "matrix_bandwidth",
    "read_dense_csv",
    "read_matrix_market",
    "svd",
    "sym_eig",
    "thomas_solve",
    "write_dense_csv",
    "write_matrix_market",
]
