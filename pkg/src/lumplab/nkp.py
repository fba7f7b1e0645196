"""Nearest Kronecker product approximation of structured matrices.

The rearrangement ``R`` maps ``B x C`` (``np.kron`` layout, ``B`` of size
``n1``) to the rank-one matrix ``vec(B) vec(C)^T`` with column-major
``vec``; the best Kronecker approximations of ``M`` in the Frobenius norm
are therefore truncated SVDs of ``R(M)``.  In three dimensions ``R`` gives
a third-order tensor and the rank-one fit is computed with higher-order
power iteration started from a truncated HOSVD.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DimensionError, NotPositiveDefinite
from .linalg import KronOperator, KronTerm, SymMatrix, kron_all, svd, sym_eig
from .lumping import make_Pii
from .pencil import Pencil, gen_eig

RANK_TOL = 1e-14
HOPM_MAX_SWEEPS = 200
HOPM_TOL = 1e-12


def _dense(a):
    if hasattr(a, "to_dense"):
        return np.asarray(a.to_dense(), dtype=float)
    return np.asarray(a, dtype=float)


def _check_dims(m, dims):
    dims = tuple(int(d) for d in dims)
    if len(dims) not in (2, 3) or any(d < 1 for d in dims):
        raise DimensionError(f"block dims must be 2 or 3 positive integers, got {dims}")
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != int(np.prod(dims)):
        raise DimensionError(f"matrix of shape {m.shape} does not match block dims {dims}")
    return dims


@dataclass(frozen=True)
class Rearranged:
    """``R(M)``: matrix (2D) or third-order tensor (3D).

    ``rows`` and ``cols`` index the rows and columns of the 2D
    rearrangement that contain at least one nonzero entry.
    """

    dims: tuple
    data: np.ndarray
    rows: np.ndarray = None
    cols: np.ndarray = None

    @property
    def block(self):
        return self.data[np.ix_(self.rows, self.cols)]

    def inverse(self):
        return unrearrange(self.data, self.dims)


def rearrange(m, dims):
    """Rearranged matrix ``R(M)`` for block dims ``(n1, n2)`` or ``(n1, n2, n3)``.

    Row ``a + b n1`` and column ``c + d n2`` of the 2D rearrangement hold
    ``M[a n2 + c, b n2 + d]``.
    """
    m = _dense(m)
    dims = _check_dims(m, dims)
    if len(dims) == 2:
        n1, n2 = dims
        r = m.reshape(n1, n2, n1, n2).transpose(2, 0, 3, 1).reshape(n1 * n1, n2 * n2)
        nz = r != 0.0
        return Rearranged(dims, r, np.flatnonzero(nz.any(axis=1)), np.flatnonzero(nz.any(axis=0)))
    n1, n2, n3 = dims
    t = m.reshape(n1, n2, n3, n1, n2, n3).transpose(3, 0, 4, 1, 5, 2).reshape(n1 * n1, n2 * n2, n3 * n3)
    return Rearranged(dims, t)


def unrearrange(r, dims):
    """Inverse of :func:`rearrange`."""
    dims = tuple(int(d) for d in dims)
    r = np.asarray(r, dtype=float)
    if len(dims) == 2:
        n1, n2 = dims
        return r.reshape(n1, n1, n2, n2).transpose(1, 3, 0, 2).reshape(n1 * n2, n1 * n2)
    n1, n2, n3 = dims
    n = n1 * n2 * n3
    return r.reshape(n1, n1, n2, n2, n3, n3).transpose(1, 3, 5, 0, 2, 4).reshape(n, n)


def _unvec(v, n):
    return v.reshape(n, n, order="F")


def kronecker_rank(singular_values, tol=RANK_TOL):
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


@dataclass(frozen=True)
class NkpResult:
    """Kronecker factors with their fit diagnostics.

    Attributes
    ----------
    factors : tuple of ndarray
    singular_values : ndarray
        Singular values of the dense block of ``R(M)`` (2D); in 3D the
        single weight of the rank-one tensor fit.
    error : float
        ``||M - B x C [x D]||_F``, computed from the materialized product.
    tail : float
        ``sqrt(sum_{i>=2} sigma_i^2)`` (2D) or the final HOPM residual.
    rank : int
        Number of singular values above ``RANK_TOL * sigma_1``.
    history : list of float
        HOPM residual after each sweep (3D only).
    converged : bool
    """

    factors: tuple
    singular_values: np.ndarray
    error: float
    tail: float
    rank: int
    history: list = field(default_factory=list)
    converged: bool = True

    def operator(self):
        return KronOperator.single(*self.factors)

    def to_dict(self):
        return {
            "singular_values": [float(s) for s in self.singular_values],
            "error": self.error,
            "tail": self.tail,
            "rank": self.rank,
            "history": [float(h) for h in self.history],
            "converged": self.converged,
            "factor_dims": [int(f.shape[0]) for f in self.factors],
        }


def _svd_rearranged(m, dims):
    r = rearrange(m, dims)
    res = svd(r.block)
    k = res.singular_values.size
    u = np.zeros((r.data.shape[0], k))
    v = np.zeros((r.data.shape[1], k))
    u[r.rows] = res.left_vectors
    v[r.cols] = res.right_vectors
    return res.singular_values, u, v


def _oriented(u, v, n1):
    # make trace(B) >= 0; flipping both keeps the product
    if np.trace(_unvec(u, n1)) < 0:
        return -u, -v
    return u, v


def nkp_rank1(m, dims):
    """Nearest Kronecker product ``B x C`` of ``M`` in the Frobenius norm.

    Parameters
    ----------
    m : array_like or SymMatrix
    dims : (int, int)
        Sizes ``n1`` of ``B`` and ``n2`` of ``C``.

    Returns
    -------
    NkpResult
    """
    m = _dense(m)
    dims = _check_dims(m, dims)
    if len(dims) != 2:
        return nkp_rank1_3d(m, dims)
    n1, n2 = dims
    s, u, v = _svd_rearranged(m, dims)
    u1, v1 = _oriented(u[:, 0], v[:, 0], n1)
    scale = np.sqrt(s[0])
    b = scale * _unvec(u1, n1)
    c = scale * _unvec(v1, n2)
    error = float(np.linalg.norm(m - np.kron(b, c)))
    tail = float(np.sqrt(np.sum(s[1:] ** 2)))
    return NkpResult((b, c), s, error, tail, kronecker_rank(s))


def nkp_rank_r(m, dims, r):
    """Best Kronecker-rank-``r`` approximation as a :class:`KronOperator`.

    Term ``i`` has weight ``sigma_i`` and unit-Frobenius factors
    ``U_i = unvec(u_i)``, ``V_i = unvec(v_i)``.
    """
    m = _dense(m)
    dims = _check_dims(m, dims)
    if len(dims) != 2:
        raise DimensionError("nkp_rank_r supports two factors")
    s, u, v = _svd_rearranged(m, dims)
    r = int(r)
    if not 1 <= r <= s.size:
        raise DimensionError(f"r must lie in [1, {s.size}], got {r}")
    terms = []
    for i in range(r):
        ui, vi = _oriented(u[:, i], v[:, i], dims[0])
        terms.append(KronTerm(float(s[i]), (_unvec(ui, dims[0]), _unvec(vi, dims[1]))))
    return KronOperator(tuple(terms))


def _mode_unfold(t, mode):
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1)


def _leading_left_vector(a):
    gram = a @ a.T
    w, vecs = sym_eig(gram)
    return vecs[:, -1]


def nkp_rank1_3d(m, dims, tol=HOPM_TOL, max_sweeps=HOPM_MAX_SWEEPS):
    """Rank-one fit ``B x C x D`` of a three-factor Kronecker structure.

    Starts from the leading mode singular vectors (truncated HOSVD) and
    runs higher-order power iteration until the relative change of the
    residual drops below ``tol``.  Reaching ``max_sweeps`` returns the best
    iterate with ``converged=False`` and a warning.
    """
    m = _dense(m)
    dims = _check_dims(m, dims)
    if len(dims) != 3:
        raise DimensionError("nkp_rank1_3d needs three block dims")
    t = rearrange(m, dims).data
    norm2 = float(np.sum(t * t))
    x, y, z = (_leading_left_vector(_mode_unfold(t, k)) for k in range(3))

    def fit(x, y, z):
        sig = float(np.einsum("abc,a,b,c->", t, x, y, z))
        return sig, float(np.sqrt(max(norm2 - sig * sig, 0.0)))

    sigma, res = fit(x, y, z)
    history = [res]
    converged = False
    for _ in range(max_sweeps):
        x = np.einsum("abc,b,c->a", t, y, z)
        x /= np.linalg.norm(x)
        y = np.einsum("abc,a,c->b", t, x, z)
        y /= np.linalg.norm(y)
        z = np.einsum("abc,a,b->c", t, x, y)
        z /= np.linalg.norm(z)
        sigma, new = fit(x, y, z)
        history.append(new)
        change = abs(history[-2] - new)
        if change <= tol * max(np.sqrt(norm2), 1e-300):
            converged = True
            break
    if not converged:
        warnings.warn("higher-order power iteration hit its sweep cap", RuntimeWarning, stacklevel=2)
    if sigma < 0:
        sigma, z = -sigma, -z
    n1, n2, n3 = dims
    b, c, d = _unvec(x, n1), _unvec(y, n2), _unvec(z, n3)
    if np.trace(b) < 0:
        b, d = -b, -d
    if np.trace(c) < 0:
        c, d = -c, -d
    scale = sigma ** (1.0 / 3.0)
    factors = (scale * b, scale * c, scale * d)
    error = float(np.linalg.norm(m - kron_all(factors)))
    return NkpResult(factors, np.array([sigma]), error, history[-1], 1, history, converged)


def spd_factor(f, scale, rtol=1e-12):
    """Symmetrize a Kronecker factor and check definiteness.

    Eigenvalues down to ``-rtol * scale`` count as roundoff and are
    accepted unchanged; anything more negative is an error.
    """
    f = 0.5 * (f + f.T)
    w = sym_eig(f).values
    if w[0] < -rtol * scale:
        raise NotPositiveDefinite(0, w[0], "Kronecker factor")
    return SymMatrix(f)


def nkp_preconditioner(m, dims):
    """``M~ = B x C`` with symmetrized SPD factors as a :class:`KronOperator`."""
    res = nkp_rank1(m, dims)
    scale = res.singular_values[0]
    return KronOperator.single(*(spd_factor(f, scale) for f in res.factors))


def two_level_preconditioner(m, dims, i):
    """Lumped NKP ``P~_ii``: band index ``i`` applied to each NKP factor."""
    mt = nkp_preconditioner(m, dims)
    return make_Pii(mt.terms[0].factors, i)


@dataclass(frozen=True)
class CondBound:
    """Condition-number bound for a rank-one Kronecker preconditioner."""

    delta: float
    bound: float
    kappa: float
    factor_spreads: list

    @property
    def applicable(self):
        return self.delta < 1.0

    def holds(self, atol=1e-8):
        return (not self.applicable) or self.kappa <= self.bound + atol

    def to_dict(self):
        return {
            "delta": self.delta,
            "bound": self.bound if self.applicable else None,
            "kappa": self.kappa,
            "applicable": self.applicable,
            "factor_spreads": self.factor_spreads,
        }


def _spread(f, f1):
    w = gen_eig(Pencil(_dense(f), _dense(f1))).values
    return float(max(abs(w[0]), abs(w[-1])))


def cond_bound(kop, m=None):
    """Bound ``kappa(M~^-1/2 M M~^-1/2) <= (1 + delta) / (1 - delta)``.

    ``M~ = sigma_1 U_1 x V_1`` is the leading term of ``kop``.

    Parameters
    ----------
    kop : KronOperator
        ``M = sum_i sigma_i U_i x V_i`` with symmetric factors and SPD
        ``U_1``, ``V_1``.
    m : array_like, optional
        Matrix used for the attained condition number; defaults to the
        materialized ``kop``.

    Returns
    -------
    CondBound
        ``bound`` is ``inf`` when ``delta >= 1``.
    """
    if not isinstance(kop, KronOperator) or len(kop.dims) != 2:
        raise DimensionError("cond_bound expects a two-factor KronOperator")
    lead = kop.terms[0]
    u1, v1 = (_dense(f) for f in lead.factors)
    sig1 = lead.weight
    delta = 0.0
    spreads = []
    for t in kop.terms[1:]:
        su = _spread(t.factors[0], u1)
        sv = _spread(t.factors[1], v1)
        spreads.append([t.weight / sig1, su, sv])
        delta += (t.weight / sig1) * su * sv
    full = _dense(m) if m is not None else kop.to_dense()
    mt = sig1 * np.kron(u1, v1)
    w = gen_eig(Pencil(full, mt)).values
    kappa = float(w[-1] / w[0])
    bound = (1.0 + delta) / (1.0 - delta) if delta < 1.0 else float("inf")
    return CondBound(float(delta), float(bound), kappa, spreads)


def hoffman_wielandt_check(m, mt):
    """``sum_i (lam_i(M) - lam_i(M~))^2`` and ``||M - M~||_F^2``."""
    m = _dense(m)
    mt = _dense(mt)
    if m.shape != mt.shape:
        raise DimensionError("matrices must have equal shape")
    lhs = float(np.sum((sym_eig(m).values - sym_eig(mt).values) ** 2))
    rhs = float(np.linalg.norm(0.5 * (m + m.T) - 0.5 * (mt + mt.T)) ** 2)
    return lhs, rhs


def spectral_equivalence_scan(build, meshes, rank=1):
    """Extreme eigenvalues of ``(M, M~)`` over a sequence of meshes.

    Parameters
    ----------
    build : callable
        ``build(m)`` returns a 2D :class:`DiscreteModel` for ``m`` subdivisions.
    meshes : iterable of int
    rank : int
        Kronecker rank of ``M~``.

    Returns
    -------
    list of dict
        Keys ``m``, ``h``, ``lam_min``, ``lam_max`` and ``error`` (``None``
        unless ``M~`` was not definite on that mesh).
    """
    rows = []
    for mesh in meshes:
        model = build(mesh)
        row = {"m": int(mesh), "h": 1.0 / mesh, "lam_min": float("nan"), "lam_max": float("nan"), "error": None}
        try:
            if rank == 1:
                mt = nkp_preconditioner(model.M, model.dims).to_dense()
            else:
                mt = nkp_rank_r(model.M, model.dims, rank).to_dense()
            w = gen_eig(Pencil(model.M, mt)).values
            row["lam_min"], row["lam_max"] = float(w[0]), float(w[-1])
        except (NotPositiveDefinite, ConvergenceError) as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows
