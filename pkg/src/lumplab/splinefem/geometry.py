"""Geometry maps from the parametric square to the physical domain.

Maps are evaluated on tensor grids of parametric points and return the
physical coordinates and the Jacobian ``J[..., a, b] = dF_a / dxi_b``.
Maps whose Jacobian determinant factors as ``f(xi) g(eta)`` advertise
this through :attr:`GeometryMap.det_factors` so that the mass matrix can
be assembled directly as a Kronecker product.
"""

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from ..errors import ConfigError, NumericalError
from .basis import SplineSpace

CATALOGUE = ("unit_interval", "unit_square", "quarter_annulus", "stretched_square", "reentrant_corner")


@dataclass(frozen=True)
class GeometryMap:
    """Smooth map ``F`` of the unit square (or interval) with its Jacobian.

    Attributes
    ----------
    id : str
    dim : int
    det_factors : tuple of callables or None
        One 1D function per direction whose product is ``|det J_F|``.
    """

    id: str
    dim: int
    _evaluate: object
    det_factors: tuple = None

    def evaluate(self, *axes):
        """Physical coordinates and Jacobians on the grid spanned by ``axes``."""
        axes = [np.atleast_1d(np.asarray(a, dtype=float)) for a in axes]
        if len(axes) != self.dim:
            raise ValueError(f"{self.id} expects {self.dim} coordinate arrays")
        return self._evaluate(*axes)

    def det(self, *axes):
        _, jac = self.evaluate(*axes)
        if self.dim == 1:
            return jac[..., 0, 0]
        return np.linalg.det(jac)

    @property
    def separable(self):
        return self.det_factors is not None


def _unit_interval(x):
    return (x,), np.ones(x.shape + (1, 1))


def _unit_square(x, y):
    gx, gy = np.meshgrid(x, y, indexing="ij")
    jac = np.zeros(gx.shape + (2, 2))
    jac[..., 0, 0] = 1.0
    jac[..., 1, 1] = 1.0
    return (gx, gy), jac


def _quarter_annulus(x, y):
    r, s = np.meshgrid(1.0 + x, y, indexing="ij")
    th = 0.5 * np.pi * s
    c, sn = np.cos(th), np.sin(th)
    jac = np.empty(r.shape + (2, 2))
    jac[..., 0, 0] = c
    jac[..., 0, 1] = -0.5 * np.pi * r * sn
    jac[..., 1, 0] = sn
    jac[..., 1, 1] = 0.5 * np.pi * r * c
    return (r * c, r * sn), jac


@dataclass(frozen=True)
class ControlNet:
    """Tensor-product B-spline map given by a control net."""

    spaces: tuple
    points: np.ndarray

    def __call__(self, x, y):
        bx, dx = self.spaces[0].collocation(x)
        by, dy = self.spaces[1].collocation(y)
        px = self.points[..., 0]
        py = self.points[..., 1]
        jac = np.empty((x.size, y.size, 2, 2))
        jac[..., 0, 0] = dx @ px @ by.T
        jac[..., 0, 1] = bx @ px @ dy.T
        jac[..., 1, 0] = dx @ py @ by.T
        jac[..., 1, 1] = bx @ py @ dy.T
        return (bx @ px @ by.T, bx @ py @ by.T), jac


def load_control_net(source):
    """Build a :class:`ControlNet` from a JSON file path, string or dict."""
    if isinstance(source, dict):
        data = source
    else:
        with open(source) as fh:
            data = json.load(fh)
    try:
        deg = data["degree"]
        sub = data["subdivisions"]
        pts = np.asarray(data["control_points"], dtype=float)
    except KeyError as exc:
        raise ConfigError(f"control net is missing {exc}") from None
    spaces = (SplineSpace(deg[0], sub[0]), SplineSpace(deg[1], sub[1]))
    if pts.shape != (spaces[0].n, spaces[1].n, 2):
        raise ConfigError(f"control net has shape {pts.shape}, expected {(spaces[0].n, spaces[1].n, 2)}")
    return ControlNet(spaces, pts)


@lru_cache(maxsize=None)
def _packaged_net(name):
    text = resources.files("lumplab.splinefem").joinpath("data", f"{name}.json").read_text()
    return load_control_net(json.loads(text))


def geometry(gid):
    """Look up a catalogue geometry by id."""
    if isinstance(gid, GeometryMap):
        return gid
    if gid == "unit_interval":
        return GeometryMap(gid, 1, _unit_interval, (lambda x: np.ones_like(x),))
    if gid == "unit_square":
        one = lambda x: np.ones_like(x)  # noqa: E731
        return GeometryMap(gid, 2, _unit_square, (one, one))
    if gid == "quarter_annulus":
        return GeometryMap(
            gid, 2, _quarter_annulus, (lambda x: 0.5 * np.pi * (1.0 + x), lambda y: np.ones_like(y))
        )
    if gid in ("stretched_square", "reentrant_corner"):
        return GeometryMap(gid, 2, _packaged_net(gid))
    raise ConfigError(f"unknown geometry {gid!r}; known: {', '.join(CATALOGUE)}")


def from_control_net(source, gid="custom"):
    return GeometryMap(gid, 2, load_control_net(source))


def check_jacobian(det):
    """Raise if the Jacobian determinant vanishes or changes sign."""
    det = np.asarray(det)
    if not np.all(np.isfinite(det)) or np.min(np.abs(det)) <= 1e-14 * max(np.max(np.abs(det)), 1.0):
        raise NumericalError("singular geometry map: det J_F vanishes at a quadrature point")
    if np.min(det) < 0 < np.max(det):
        raise NumericalError("geometry map folds over: det J_F changes sign")
