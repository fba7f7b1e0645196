"""Tensor-product B-spline Galerkin discretization of the wave equation."""

from .assembly import (
    DiscreteModel,
    assemble_1d,
    assemble_2d,
    assemble_3d,
    l2_error,
    l2_projection,
    load_vector,
    mass_total,
)
from .basis import SplineSpace, bspline_eval
from .density import Density, density
from .exact import PROBLEM_BCS, AnnulusWave, StandingWave1D, exact_eigenfrequency
from .geometry import CATALOGUE, GeometryMap, from_control_net, geometry

__all__ = [
    "CATALOGUE",
    "PROBLEM_BCS",
    "AnnulusWave",
    "Density",
    "DiscreteModel",
    "GeometryMap",
    "SplineSpace",
    "StandingWave1D",
    "assemble_1d",
    "assemble_2d",
    "assemble_3d",
    "bspline_eval",
    "density",
    "exact_eigenfrequency",
    "from_control_net",
    "geometry",
    "l2_error",
    "l2_projection",
    "load_vector",
    "mass_total",
]
