"""Galerkin assembly of B-spline mass and stiffness matrices.

Degrees of freedom of tensor-product spaces are numbered with the last
direction fastest, ``(i, j) -> i * n2 + j``, so that a separable mass
matrix equals ``np.kron(M1, M2)`` with ``M1`` acting in the first
parametric direction.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DimensionError, NumericalError
from ..linalg import SymMatrix, kron_all
from .basis import SplineSpace
from .density import density as make_density
from .geometry import check_jacobian, geometry as make_geometry

BC_TYPES = ("dirichlet", "neumann")


def _normalize_bc(bc, dim):
    if bc is None:
        bc = "dirichlet"
    if isinstance(bc, str):
        bc = (bc, bc)
    bc = tuple(bc)
    if len(bc) == 2 and all(isinstance(b, str) for b in bc):
        bc = (bc,) * dim
    if len(bc) != dim:
        raise ConfigError(f"need boundary conditions for {dim} directions, got {bc!r}")
    out = []
    for pair in bc:
        pair = tuple(str(b).lower() for b in pair)
        if len(pair) != 2 or any(b not in BC_TYPES for b in pair):
            raise ConfigError(f"boundary conditions must be pairs from {BC_TYPES}, got {pair!r}")
        out.append(pair)
    return tuple(out)


def _free_indices(n, pair):
    lo = 1 if pair[0] == "dirichlet" else 0
    hi = n - 1 if pair[1] == "dirichlet" else n
    if hi - lo < 1:
        raise DimensionError("no free degrees of freedom left after Dirichlet elimination")
    return np.arange(lo, hi)


def _normalize_spaces(spaces, dim):
    if isinstance(spaces, SplineSpace):
        spaces = (spaces,) * dim
    spaces = tuple(spaces)
    if len(spaces) != dim or not all(isinstance(s, SplineSpace) for s in spaces):
        raise ConfigError(f"need {dim} SplineSpace objects")
    return spaces


@dataclass(frozen=True)
class DiscreteModel:
    """Assembled Galerkin model restricted to its free degrees of freedom.

    Iterating over a model yields ``(M, K)``.
    """

    spaces: tuple
    geometry: object
    density: object
    bcs: tuple
    M: SymMatrix
    K: SymMatrix
    free_axes: tuple
    mass_factors: tuple = None
    stiffness_factors: tuple = None
    info: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.M, self.K))

    @property
    def dim(self):
        return len(self.spaces)

    @property
    def n(self):
        return self.M.n

    @property
    def dims(self):
        """Free DOF count per direction."""
        return tuple(len(f) for f in self.free_axes)

    @property
    def full_dims(self):
        return tuple(s.n for s in self.spaces)

    @property
    def kronecker(self):
        return self.mass_factors is not None

    @property
    def free(self):
        grids = np.meshgrid(*self.free_axes, indexing="ij")
        return np.ravel_multi_index([g.ravel() for g in grids], self.full_dims)

    def full_coefficients(self, coeffs):
        """Pad free-DOF coefficients with zeros on the Dirichlet boundary."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != self.n:
            raise DimensionError(f"expected {self.n} coefficients, got {coeffs.shape[-1]}")
        full = np.zeros(coeffs.shape[:-1] + (int(np.prod(self.full_dims)),))
        full[..., self.free] = coeffs
        return full

    def quadrature(self, extra=0):
        """Tensor quadrature data: per-axis bases, physical points and weights."""
        axes = [s.quadrature_basis(s.degree + 1 + extra) for s in self.spaces]
        coords, jac = self.geometry.evaluate(*[a[0] for a in axes])
        det = jac[..., 0, 0] if self.dim == 1 else np.linalg.det(jac)
        w = axes[0][1]
        for a in axes[1:]:
            w = np.multiply.outer(w, a[1])
        return axes, coords, jac, w * np.abs(det)

    def evaluate(self, coeffs, *points):
        """Evaluate the discrete field at parametric grid points."""
        full = self.full_coefficients(coeffs).reshape(self.full_dims)
        mats = [s.collocation(p)[0] for s, p in zip(self.spaces, points)]
        return _apply_axes(full, mats)

    def summary(self):
        return {
            "dim": self.dim,
            "degrees": [s.degree for s in self.spaces],
            "subdivisions": [s.subdivisions for s in self.spaces],
            "geometry": self.geometry.id,
            "density": self.density.id,
            "boundary_conditions": [list(b) for b in self.bcs],
            "free_dofs": self.n,
            "kronecker": self.kronecker,
        }

    def export(self, directory):
        """Write ``M.mtx``, ``K.mtx`` and ``model.json`` into ``directory``."""
        from ..linalg.io import write_matrix_market, atomic_write_text

        os.makedirs(directory, exist_ok=True)
        write_matrix_market(os.path.join(directory, "M.mtx"), self.M)
        write_matrix_market(os.path.join(directory, "K.mtx"), self.K)
        atomic_write_text(
            os.path.join(directory, "model.json"), json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"
        )


def _apply_axes(tensor, mats):
    out = tensor
    for axis, m in enumerate(mats):
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [axis])), 0, axis)
    return out


def _gram(ba, bb, w):
    return (ba * w[:, None]).T @ bb


def _tensor_form(xa, xb, ya, yb, w):
    """``sum_ab xa[a,i] xb[a,k] ya[b,j] yb[b,l] w[a,b]`` as an (ij, kl) matrix."""
    t = np.einsum("ai,ak,ab->ikb", xa, xb, w, optimize=True)
    m4 = np.einsum("ikb,bj,bl->ijkl", t, ya, yb, optimize=True)
    nx, ny = xa.shape[1], ya.shape[1]
    return m4.reshape(nx * ny, nx * ny)


def _restrict(a, idx):
    return a[np.ix_(idx, idx)]


def assemble_1d(space, density=None, geometry="unit_interval", bc="dirichlet", quad_points=None):
    """Mass and stiffness matrices of a 1D B-spline space.

    Parameters
    ----------
    space : SplineSpace
    density : density spec, optional
        See :func:`lumplab.splinefem.density.density`.
    geometry : str or GeometryMap
        Only ``"unit_interval"`` is catalogued in 1D.
    bc : str or (str, str)
        Boundary condition at x = 0 and x = 1.
    quad_points : int, optional
        Gauss points per element, ``p + 1`` by default.

    Returns
    -------
    DiscreteModel
        Unpacks as ``M, K``.
    """
    geo = make_geometry(geometry)
    if geo.dim != 1:
        raise ConfigError(f"geometry {geo.id!r} is not one-dimensional")
    rho = make_density(density)
    (pair,) = _normalize_bc(bc, 1)
    if quad_points is not None and quad_points < space.degree + 1:
        raise ConfigError("need at least p + 1 quadrature points per element")
    x, w, b, d = space.quadrature_basis(quad_points)
    (xp,), jac = geo.evaluate(x)
    det = jac[:, 0, 0]
    check_jacobian(det)
    r = rho(xp)
    if np.any(r <= 0):
        raise NumericalError("density must be positive at every quadrature point")
    free = _free_indices(space.n, pair)
    m_full = _gram(b, b, w * r * np.abs(det))
    k_full = _gram(d, d, w / np.abs(det))
    m = SymMatrix(_restrict(m_full, free))
    k = SymMatrix(_restrict(k_full, free))
    return DiscreteModel(
        (space,),
        geo,
        rho,
        (pair,),
        m,
        k,
        (free,),
        mass_factors=(m,),
        stiffness_factors=(k,),
        info={"mass_total": float(m_full.sum())},
    )


def assemble_2d(spaces, density=None, geometry="unit_square", bc="dirichlet", quad_points=None):
    """Mass and stiffness matrices on a mapped tensor-product spline space.

    The Kronecker flag (``model.kronecker``) is set when both the geometry
    and the density declare a separable structure; the per-direction mass
    factors are then stored in ``model.mass_factors``.
    """
    geo = make_geometry(geometry)
    if geo.dim != 2:
        raise ConfigError(f"geometry {geo.id!r} is not two-dimensional")
    rho = make_density(density)
    spaces = _normalize_spaces(spaces, 2)
    bcs = _normalize_bc(bc, 2)
    axes = []
    for s in spaces:
        q = quad_points
        if q is not None and q < s.degree + 1:
            raise ConfigError("need at least p + 1 quadrature points per element")
        axes.append(s.quadrature_basis(q))
    (x, wx, bx, dx), (y, wy, by, dy) = axes
    (px, py), jac = geo.evaluate(x, y)
    det = np.linalg.det(jac)
    check_jacobian(det)
    r = rho(px, py)
    if np.any(r <= 0):
        raise NumericalError("density must be positive at every quadrature point")
    wq = np.outer(wx, wy)
    adet = np.abs(det)
    m_full = _tensor_form(bx, bx, by, by, wq * r * adet)

    # metric G = J^-1 J^-T |det J|
    inv = np.linalg.inv(jac)
    g = np.einsum("...ik,...jk->...ij", inv, inv) * adet[..., None, None]
    k_full = _tensor_form(dx, dx, by, by, wq * g[..., 0, 0])
    k_full += _tensor_form(bx, bx, dy, dy, wq * g[..., 1, 1])
    cross = _tensor_form(dx, bx, by, dy, wq * g[..., 0, 1])
    k_full += cross + cross.T

    free_axes = tuple(_free_indices(s.n, pair) for s, pair in zip(spaces, bcs))
    grids = np.meshgrid(*free_axes, indexing="ij")
    free = np.ravel_multi_index([gg.ravel() for gg in grids], (spaces[0].n, spaces[1].n))
    m = SymMatrix(_restrict(m_full, free))
    k = SymMatrix(_restrict(k_full, free))

    factors = None
    if geo.separable and rho.separable:
        fx, fy = geo.det_factors
        m1 = rho.constant * _gram(bx, bx, wx * fx(x))
        m2 = _gram(by, by, wy * fy(y))
        factors = (SymMatrix(_restrict(m1, free_axes[0])), SymMatrix(_restrict(m2, free_axes[1])))
    return DiscreteModel(
        spaces,
        geo,
        rho,
        bcs,
        m,
        k,
        free_axes,
        mass_factors=factors,
        info={"mass_total": float(m_full.sum()), "det_min": float(det.min())},
    )


def assemble_3d(spaces, density=None, bc="dirichlet", materialize=True):
    """Separable unit-cube assembly from per-direction 1D factors.

    Only constant densities are supported.  ``M = M1 x M2 x M3`` and
    ``K = K1 x M2 x M3 + M1 x K2 x M3 + M1 x M2 x K3``; the full matrices
    are materialized only when ``materialize`` is true.
    """
    rho = make_density(density)
    if not rho.separable:
        raise ConfigError("3D assembly supports constant densities only")
    spaces = _normalize_spaces(spaces, 3)
    bcs = _normalize_bc(bc, 3)
    parts = [assemble_1d(s, None, "unit_interval", pair) for s, pair in zip(spaces, bcs)]
    ms = [p.M for p in parts]
    ks = [p.K for p in parts]
    ms[0] = SymMatrix(rho.constant * ms[0].data)
    m = k = None
    if materialize:
        m = SymMatrix(kron_all(ms))
        k = SymMatrix(
            kron_all([ks[0], parts[1].M, parts[2].M])
            + kron_all([parts[0].M, ks[1], parts[2].M])
            + kron_all([parts[0].M, parts[1].M, ks[2]])
        )
    geo = _unit_cube()
    return DiscreteModel(
        spaces,
        geo,
        rho,
        bcs,
        m,
        k,
        tuple(p.free_axes[0] for p in parts),
        mass_factors=tuple(ms),
        stiffness_factors=tuple(ks),
        info={"mass_total": float(rho.constant)},
    )


def _unit_cube():
    from .geometry import GeometryMap

    def ev(x, y, z):
        g = np.meshgrid(x, y, z, indexing="ij")
        jac = np.zeros(g[0].shape + (3, 3))
        for a in range(3):
            jac[..., a, a] = 1.0
        return tuple(g), jac

    one = lambda t: np.ones_like(t)  # noqa: E731
    return GeometryMap("unit_cube", 3, ev, (one, one, one))


def _field_at_quadrature(model, coeffs, axes):
    full = model.full_coefficients(coeffs).reshape(model.full_dims)
    return _apply_axes(full, [a[2] for a in axes])


def l2_error(model, coeffs, exact, extra_points=2):
    """L2 norm of ``u_h - u`` over the physical domain.

    Parameters
    ----------
    model : DiscreteModel
    coeffs : ndarray, shape (n,)
        Coefficients of the free DOFs (Dirichlet DOFs are zero).
    exact : callable
        ``exact(x)`` in 1D, ``exact(x, y)`` in 2D, physical coordinates.
    """
    axes, coords, _, w = model.quadrature(extra_points)
    uh = _field_at_quadrature(model, coeffs, axes)
    u = np.broadcast_to(np.asarray(exact(*coords), dtype=float), uh.shape)
    return float(np.sqrt(np.sum(w * (uh - u) ** 2)))


def load_vector(model, func, extra_points=2):
    """``b_i = int f B_i dx`` on the free DOFs."""
    axes, coords, _, w = model.quadrature(extra_points)
    vals = w * np.broadcast_to(np.asarray(func(*coords), dtype=float), w.shape)
    full = _apply_axes(vals, [a[2].T for a in axes]).ravel()
    return full[model.free]


def l2_projection(model, func, extra_points=2):
    """Coefficients of the L2 projection of ``func`` onto the free DOFs.

    Uses the unweighted (density-free) mass matrix.
    """
    axes, coords, _, w = model.quadrature(extra_points)
    mats = [a[2] for a in axes]
    if model.dim == 1:
        gram = _gram(mats[0], mats[0], w)
    elif model.dim == 2:
        gram = _tensor_form(mats[0], mats[0], mats[1], mats[1], w)
    else:
        raise DimensionError("l2_projection supports 1D and 2D models")
    gram = SymMatrix(_restrict(gram, model.free))
    return gram.solve(load_vector(model, func, extra_points))


def mass_total(model):
    """``int rho |det J| dxi`` evaluated with the assembly quadrature."""
    return model.info["mass_total"]


def eigenvalue_error(model, coeffs, mass_like, problem, extra_points=6):
    """``lam~ - lam`` for the Rayleigh quotient of ``coeffs`` without cancellation.

    For the field ``w`` of ``coeffs`` scaled to unit L2 norm and the exact
    normalized eigenfunction ``u`` (eigenvalue ``lam``),

        x'Kx - lam x'Px = a(w-u, w-u) - lam m(w-u, w-u) + lam x'(M-P)x,

    so the discretization error is obtained from integrals of the small
    difference ``w - u`` instead of from the difference of two nearly equal
    eigenvalues.  Valid for unit-density models on the parametric domain
    whose assembly quadrature is exact.

    Parameters
    ----------
    model : DiscreteModel
    coeffs : ndarray
        Approximate eigenvector of ``(K, P)``.
    mass_like : array_like or operator
        The matrix ``P`` defining the quotient ``x'Kx / x'Px``.
    problem : str
        Reference problem id, see :func:`exact_eigenfrequency`.

    Returns
    -------
    float
    """
    from .exact import eigenfunction, exact_eigenfrequency

    if model.geometry.id not in ("unit_interval", "unit_square") or not model.density.separable:
        raise ConfigError("eigenvalue_error needs a unit-density model on the unit interval or square")
    lam = exact_eigenfrequency(problem) ** 2
    u, grad = eigenfunction(problem)
    x = np.asarray(coeffs, dtype=float)
    m = model.M.data / model.density.constant
    x = x / np.sqrt(x @ m @ x)
    axes, coords, _, w = model.quadrature(extra_points)
    full = model.full_coefficients(x).reshape(model.full_dims)
    wh = _apply_axes(full, [a[2] for a in axes])
    ue = u(*coords)
    if np.sum(w * wh * ue) < 0:
        x, full, wh = -x, -full, -wh
    diff = wh - ue
    grads = grad(*coords)
    a_err = 0.0
    for axis in range(model.dim):
        mats = [a[3] if k == axis else a[2] for k, a in enumerate(axes)]
        a_err += np.sum(w * (_apply_axes(full, mats) - grads[axis]) ** 2)
    m_err = np.sum(w * diff**2)
    p = mass_like.to_dense() if hasattr(mass_like, "to_dense") else np.asarray(mass_like, dtype=float)
    p = p / model.density.constant
    gap = x @ ((m - p) @ x)
    return float((a_err - lam * m_err + lam * gap) / (x @ p @ x))
