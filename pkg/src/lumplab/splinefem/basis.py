"""B-spline spaces on [0, 1] with open uniform knots and maximal smoothness."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import DimensionError


@dataclass(frozen=True)
class SplineSpace:
    """Degree-``p`` spline space on ``m`` uniform elements, C^(p-1) smooth.

    Parameters
    ----------
    degree : int
        Polynomial degree p >= 0.
    subdivisions : int
        Number of elements m >= 1.
    """

    degree: int
    subdivisions: int

    def __post_init__(self):
        if self.degree < 0 or self.subdivisions < 1:
            raise DimensionError("need degree >= 0 and subdivisions >= 1")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "subdivisions", int(self.subdivisions))

    @property
    def n(self):
        return self.subdivisions + self.degree

    @cached_property
    def breaks(self):
        return np.linspace(0.0, 1.0, self.subdivisions + 1)

    @cached_property
    def knots(self):
        p = self.degree
        return np.concatenate([np.zeros(p), self.breaks, np.ones(p)])

    def element_of(self, x, side="right"):
        """Element index containing ``x``; ``side`` picks the element at a break."""
        x = np.asarray(x, dtype=float)
        m = self.subdivisions
        if side == "right":
            e = np.floor(x * m).astype(int)
        else:
            e = np.ceil(x * m).astype(int) - 1
        return np.clip(e, 0, m - 1)

    def local_basis(self, x, elements):
        """Values and first derivatives of the ``p + 1`` active functions.

        Cox-de Boor recursion vectorized over points.  Returns arrays of
        shape ``(len(x), p + 1)``; column ``r`` belongs to function
        ``elements + r``.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        elements = np.broadcast_to(np.asarray(elements, dtype=int), x.shape)
        p = self.degree
        t = self.knots
        span = elements + p
        npt = x.size
        vals = np.ones((npt, 1))
        left = np.zeros((npt, p + 1))
        right = np.zeros((npt, p + 1))
        prev = vals
        for j in range(1, p + 1):
            left[:, j] = x - t[span + 1 - j]
            right[:, j] = t[span + j] - x
            prev = vals
            new = np.zeros((npt, j + 1))
            saved = np.zeros(npt)
            for r in range(j):
                temp = prev[:, r] / (right[:, r + 1] + left[:, j - r])
                new[:, r] = saved + right[:, r + 1] * temp
                saved = left[:, j - r] * temp
            new[:, j] = saved
            vals = new
        # exact values are nonnegative; drop roundoff of order 1e-47
        vals = np.maximum(vals, 0.0)
        if p == 0:
            return vals, np.zeros_like(vals)
        # derivative from the degree p-1 functions
        ders = np.zeros((npt, p + 1))
        for r in range(p + 1):
            i = span - p + r
            if r > 0:
                ders[:, r] += p * prev[:, r - 1] / (t[i + p] - t[i])
            if r < p:
                ders[:, r] -= p * prev[:, r] / (t[i + p + 1] - t[i + 1])
        return vals, ders

    def collocation(self, x, side="right"):
        """Dense ``(len(x), n)`` matrices of basis values and derivatives."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("spline evaluation points must lie in [0, 1]")
        e = self.element_of(x, side)
        vals, ders = self.local_basis(x, e)
        b = np.zeros((x.size, self.n))
        d = np.zeros((x.size, self.n))
        rows = np.arange(x.size)[:, None]
        cols = e[:, None] + np.arange(self.degree + 1)[None, :]
        b[rows, cols] = vals
        d[rows, cols] = ders
        return b, d

    def quadrature(self, points_per_element=None):
        """Gauss-Legendre nodes and weights, ``p + 1`` per element by default."""
        q = self.degree + 1 if points_per_element is None else int(points_per_element)
        xg, wg = np.polynomial.legendre.leggauss(q)
        a = self.breaks[:-1, None]
        h = np.diff(self.breaks)[:, None]
        x = (a + 0.5 * h * (xg[None, :] + 1.0)).ravel()
        w = (0.5 * h * wg[None, :]).ravel()
        return x, w

    def quadrature_basis(self, points_per_element=None):
        """Quadrature nodes, weights and basis matrices at the nodes."""
        x, w = self.quadrature(points_per_element)
        q = x.size // self.subdivisions
        e = np.repeat(np.arange(self.subdivisions), q)
        vals, ders = self.local_basis(x, e)
        b = np.zeros((x.size, self.n))
        d = np.zeros((x.size, self.n))
        rows = np.arange(x.size)[:, None]
        cols = e[:, None] + np.arange(self.degree + 1)[None, :]
        b[rows, cols] = vals
        d[rows, cols] = ders
        return x, w, b, d

    def greville(self):
        p = self.degree
        if p == 0:
            return 0.5 * (self.breaks[:-1] + self.breaks[1:])
        t = self.knots
        return np.array([t[i + 1 : i + p + 1].mean() for i in range(self.n)])


def bspline_eval(space, x, side="right"):
    """All basis values and first derivatives at one point ``x``.

    Parameters
    ----------
    space : SplineSpace
    x : float
        Parametric coordinate in [0, 1].
    side : {"right", "left"}
        Which element to evaluate in when ``x`` is a break point.

    Returns
    -------
    values, derivatives : ndarray, shape (n,)
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x = {x} outside [0, 1]")
    b, d = space.collocation(np.array([x]), side)
    return b[0], d[0]
