"""Symmetric-definite matrix pencils and eigenvalue perturbation bounds.

The central routine is :func:`gen_eig`, which reduces ``A u = lam B u``
to a standard problem through the Cholesky factor of ``B``.  The
``*_bounds`` functions evaluate classical inequalities between the
spectra of related pencils and return :class:`BoundReport` objects whose
``holds()`` method is the actual check.
"""

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NotPositiveDefinite, SingularPencil
from .linalg.dense import (
    DEFAULT_TOL,
    cholesky,
    solve_lower,
    solve_lower_t,
    svd,
    sym_eig,
)

EIG_RTOL = 1e-9


def _dense(a):
    if hasattr(a, "to_dense"):
        return np.asarray(a.to_dense(), dtype=float)
    return np.asarray(a, dtype=float)


@dataclass(frozen=True)
class Pencil:
    """Symmetric pencil ``(A, B)``; both operands are symmetrized."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = _dense(self.A)
        b = _dense(self.B)
        if a.ndim != 2 or a.shape != b.shape or a.shape[0] != a.shape[1]:
            raise DimensionError(f"pencil operands must be square and equal-sized: {a.shape}, {b.shape}")
        object.__setattr__(self, "A", 0.5 * (a + a.T))
        object.__setattr__(self, "B", 0.5 * (b + b.T))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def B_definite(self):
        try:
            cholesky(self.B)
        except NotPositiveDefinite:
            return False
        return True


@dataclass(frozen=True)
class GenEigResult:
    """Ascending generalized eigenvalues with B-orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        return iter((self.values, self.vectors))


def is_singular_pencil(a, b, tol=1e-12):
    """True when ``A`` and ``B`` share a near-null vector.

    Uses the smallest singular value of the stacked ``[A; B]`` relative to
    its largest.
    """
    a = _dense(a)
    b = _dense(b)
    s = svd(np.vstack([a, b])).singular_values
    if s[0] == 0.0:
        return True
    return s[-1] <= tol * s[0]


def gen_eig(p, tol=DEFAULT_TOL):
    """Solve the symmetric-definite problem ``A u = lam B u``.

    Parameters
    ----------
    p : Pencil
    tol : float
        Passed to the standard eigensolver.

    Returns
    -------
    GenEigResult

    Raises
    ------
    SingularPencil
        ``A`` and ``B`` share a null vector.
    NotPositiveDefinite
        ``B`` is not positive definite.
    """
    if not isinstance(p, Pencil):
        p = Pencil(*p)
    try:
        low = cholesky(p.B, what="B")
    except NotPositiveDefinite:
        if is_singular_pencil(p.A, p.B):
            raise SingularPencil("A and B share a null vector; the pencil is singular") from None
        raise
    x = solve_lower(low, p.A)
    c = solve_lower(low, np.ascontiguousarray(x.T))
    res = sym_eig(c, tol)
    vectors = solve_lower_t(low, res.vectors)
    return GenEigResult(res.values, vectors)


def gen_eigvals(a, b, tol=DEFAULT_TOL, relative=False):
    """Generalized eigenvalues of ``(A, B)`` in ascending order.

    With ``relative=True`` both ``A`` and ``B`` must be SPD.  The lower
    half of the spectrum is then taken from the reciprocals of the
    reversed pencil ``(B, A)``, which resolves small eigenvalues to full
    relative precision instead of to ``eps * lam_max``.
    """
    direct = gen_eig(Pencil(a, b), tol).values
    if not relative:
        return direct
    recip = gen_eig(Pencil(b, a), tol).values
    if recip[0] <= 0:
        raise NotPositiveDefinite(0, recip[0], "A")
    recip = 1.0 / recip[::-1]
    split = math.sqrt(recip[0] * direct[-1])
    return np.where(direct < split, recip, direct)


def smallest_eigenvalue(a, b, tol=DEFAULT_TOL):
    """``lam_1(A, B)`` to full relative accuracy for SPD ``A`` and ``B``."""
    return 1.0 / gen_eig(Pencil(b, a), tol).values[-1]


class Ordering(str, enum.Enum):
    """Outcome of a Loewner comparison between ``X`` and ``Y``."""

    X_GE_Y = "X>=Y"
    Y_GE_X = "Y>=X"
    INDEFINITE = "indefinite"
    EQUAL = "equal"


def loewner_compare(x, y, tol=1e-10):
    """Classify ``X - Y`` in the Loewner order.

    ``EQUAL`` when ``||X - Y||_F <= tol * max(||X||_F, 1)``; otherwise the
    eigenvalues of the difference are compared against the band
    ``+- tol * ||X - Y||_F``.
    """
    x = _dense(x)
    y = _dense(y)
    if x.shape != y.shape:
        raise DimensionError("loewner_compare needs equal shapes")
    d = x - y
    dn = np.linalg.norm(d)
    if dn <= tol * max(np.linalg.norm(x), 1.0):
        return Ordering.EQUAL
    w = sym_eig(d).values
    band = tol * dn
    if w[0] >= -band:
        return Ordering.X_GE_Y
    if w[-1] <= band:
        return Ordering.Y_GE_X
    return Ordering.INDEFINITE


@dataclass(frozen=True)
class BoundSeries:
    """One inequality ``lower[k] <= value[k] <= upper[k]`` over ``k``."""

    name: str
    k: np.ndarray
    value: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def violations(self, rtol=1e-10, atol=0.0):
        slack_lo = rtol * np.abs(self.lower) + atol
        slack_hi = rtol * np.abs(self.upper) + atol
        bad = (self.value < self.lower - slack_lo) | (self.value > self.upper + slack_hi)
        return np.flatnonzero(bad)

    def holds(self, rtol=1e-10, atol=0.0):
        return self.violations(rtol, atol).size == 0


@dataclass(frozen=True)
class BoundReport:
    """Collection of bound series computed for one set of pencils."""

    series: tuple
    info: dict = field(default_factory=dict)

    def __getitem__(self, name):
        for s in self.series:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def names(self):
        return [s.name for s in self.series]

    def holds(self, rtol=1e-10, atol=0.0):
        return all(s.holds(rtol, atol) for s in self.series)

    def rows(self):
        for s in self.series:
            for k, v, lo, hi in zip(s.k, s.value, s.lower, s.upper):
                yield int(k), float(v), float(lo), float(hi), s.name

    def to_csv(self, header_comment=None):
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "lambda", "lower", "upper", "bound_name"])
        for k, v, lo, hi, name in self.rows():
            w.writerow([k, repr(v), repr(lo), repr(hi), name])
        return buf.getvalue()

    def to_dict(self):
        return {
            "info": {k: _jsonable(v) for k, v in self.info.items()},
            "series": [
                {
                    "bound_name": s.name,
                    "k": s.k.tolist(),
                    "lambda": s.value.tolist(),
                    "lower": s.lower.tolist(),
                    "upper": s.upper.tolist(),
                }
                for s in self.series
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


def _ks(n):
    return np.arange(1, n + 1)


def sandwich_bounds(a, b, c, tol=DEFAULT_TOL):
    """Bound ``lam_k(A, B)`` through an intermediate SPD matrix ``C``.

    Series ``"sandwich_ac"``: ``lam_k(A,C) lam_1(C,B) <= lam_k(A,B) <= lam_k(A,C) lam_n(C,B)``.
    Series ``"sandwich_cb"``: ``lam_1(A,C) lam_k(C,B) <= lam_k(A,B) <= lam_n(A,C) lam_k(C,B)``.
    """
    ab = gen_eig(Pencil(a, b), tol).values
    ac = gen_eig(Pencil(a, c), tol).values
    cb = gen_eig(Pencil(c, b), tol).values
    k = _ks(ab.size)
    return BoundReport(
        (
            BoundSeries("sandwich_ac", k, ab, ac * cb[0], ac * cb[-1]),
            BoundSeries("sandwich_cb", k, ab, ac[0] * cb, ac[-1] * cb),
        ),
        {"lam_AB": ab, "lam_AC": ac, "lam_CB": cb},
    )


def ratio_bounds(k_mat, m, mt, tol=DEFAULT_TOL, relative=True):
    """Envelope of ``lam_k(K, Mt) / lam_k(K, M)`` by ``lam_1(M, Mt)`` and ``lam_n(M, Mt)``."""
    exact = gen_eigvals(k_mat, m, tol, relative=relative)
    approx = gen_eigvals(k_mat, mt, tol, relative=relative)
    env = gen_eig(Pencil(m, mt), tol).values
    ratio = approx / exact
    n = ratio.size
    return BoundReport(
        (BoundSeries("ratio", _ks(n), ratio, np.full(n, env[0]), np.full(n, env[-1])),),
        {"lam_K_M": exact, "lam_K_Mt": approx, "lam_min_M_Mt": env[0], "lam_max_M_Mt": env[-1]},
    )


def bauer_fike_bounds(p, pt, tol=DEFAULT_TOL):
    """Residual bounds between the spectra of ``(A, B)`` and ``(A+E, B+F)``.

    Series ``"bauer_fike"``: ``min_j |lt_j - l_i| <= (||E u_i|| + |l_i| ||F u_i||) / (||u_i|| lam_1(Bt))``.
    Series ``"bauer_fike_swapped"``: same with the roles of the two pencils swapped.
    Series ``"crawford"``: ``|lt_i - l_i| <= (||E||_2 + |l_i| ||F||_2) / lam_1(Bt)``.
    """
    if not isinstance(p, Pencil):
        p = Pencil(*p)
    if not isinstance(pt, Pencil):
        pt = Pencil(*pt)
    if p.n != pt.n:
        raise DimensionError("pencils must have equal dimension")
    e = pt.A - p.A
    f = pt.B - p.B
    lam, u = gen_eig(p, tol)
    lamt, ut = gen_eig(pt, tol)
    b_min = sym_eig(p.B).values[0]
    bt_min = sym_eig(pt.B).values[0]
    if b_min <= 0 or bt_min <= 0:
        raise NotPositiveDefinite(0, min(b_min, bt_min), "B")
    n = p.n
    unorm = np.linalg.norm(u, axis=0)
    utnorm = np.linalg.norm(ut, axis=0)
    dist_a = np.min(np.abs(lamt[None, :] - lam[:, None]), axis=1)
    up_a = (np.linalg.norm(e @ u, axis=0) + np.abs(lam) * np.linalg.norm(f @ u, axis=0)) / unorm / bt_min
    dist_b = np.min(np.abs(lam[None, :] - lamt[:, None]), axis=1)
    up_b = (np.linalg.norm(e @ ut, axis=0) + np.abs(lamt) * np.linalg.norm(f @ ut, axis=0)) / utnorm / b_min
    e2 = _spectral_norm(e)
    f2 = _spectral_norm(f)
    up_c = (e2 + np.abs(lam) * f2) / bt_min
    zero = np.zeros(n)
    k = _ks(n)
    return BoundReport(
        (
            BoundSeries("bauer_fike", k, dist_a, zero, up_a),
            BoundSeries("bauer_fike_swapped", k, dist_b, zero, up_b),
            BoundSeries("crawford", k, np.abs(lamt - lam), zero, up_c),
        ),
        {"lam": lam, "lam_tilde": lamt, "lam_1_B": b_min, "lam_1_Bt": bt_min},
    )


def _spectral_norm(a):
    if not np.any(a):
        return 0.0
    w = sym_eig(0.5 * (a + a.T)).values
    return float(max(abs(w[0]), abs(w[-1])))


def eigenangles(values):
    """``theta_i = arccot(lam_i)`` taken in ``(0, pi)``."""
    values = np.asarray(values, dtype=float)
    return np.arctan2(1.0, values)


def critical_dt(k_mat, m_like, tol=DEFAULT_TOL):
    """Central-difference stability limit ``2 / sqrt(lam_max(K, M))``."""
    lam = gen_eig(Pencil(k_mat, m_like), tol).values[-1]
    if lam <= 0:
        raise NotPositiveDefinite(0, lam, "K")
    return 2.0 / math.sqrt(lam)
