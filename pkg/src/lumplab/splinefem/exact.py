"""Reference eigenfrequencies and manufactured solutions."""

import math

import numpy as np

from ..errors import ConfigError

EIGENFREQUENCIES = {
    "laplace_1d_mixed": math.pi / 2.0,
    "laplace_2d_mixed": math.pi / math.sqrt(2.0),
    "laplace_1d_dirichlet": math.pi,
}

# boundary conditions matching each reference problem
PROBLEM_BCS = {
    "laplace_1d_mixed": ("dirichlet", "neumann"),
    "laplace_2d_mixed": (("dirichlet", "neumann"), ("dirichlet", "neumann")),
    "laplace_1d_dirichlet": ("dirichlet", "dirichlet"),
}


def exact_eigenfrequency(problem):
    """Smallest eigenfrequency of the named Laplace problem."""
    try:
        return EIGENFREQUENCIES[problem]
    except KeyError:
        raise ConfigError(f"unknown problem {problem!r}; known: {', '.join(EIGENFREQUENCIES)}") from None


class StandingWave1D:
    """``u(x, t) = sin(k pi x) cos(k pi t)`` for the unit-speed string."""

    def __init__(self, k=4):
        self.k = k

    def __call__(self, x, t):
        return np.sin(self.k * np.pi * x) * np.cos(self.k * np.pi * t)

    def initial_displacement(self, x):
        return np.sin(self.k * np.pi * x)


class AnnulusWave:
    """``u = (r2 - 1)(r2 - 4) sin x sin y sin(2 pi t)`` with ``r2 = x^2 + y^2``.

    Vanishes on the boundary of the quarter annulus with radii 1 and 2.
    """

    omega = 2.0 * np.pi

    @staticmethod
    def shape(x, y):
        r2 = x * x + y * y
        return (r2 - 1.0) * (r2 - 4.0) * np.sin(x) * np.sin(y)

    @staticmethod
    def laplacian(x, y):
        r2 = x * x + y * y
        s = np.sin(x) * np.sin(y)
        q = r2 * r2 - 5.0 * r2 + 4.0
        grad = 2.0 * x * np.cos(x) * np.sin(y) + 2.0 * y * np.sin(x) * np.cos(y)
        return (16.0 * r2 - 20.0) * s + 2.0 * (2.0 * r2 - 5.0) * grad - 2.0 * q * s

    def __call__(self, x, y, t):
        return self.shape(x, y) * np.sin(self.omega * t)

    def forcing_shape(self, x, y):
        """``f / sin(2 pi t)`` for ``u_tt - lap u = f``."""
        return -self.omega**2 * self.shape(x, y) - self.laplacian(x, y)

    def initial_velocity(self, x, y):
        return self.omega * self.shape(x, y)


def eigenfunction(problem):
    """L2-normalized first eigenfunction and its gradient.

    Returns callables ``u(*x)`` and ``grad(*x)`` (a tuple of components).
    """
    h = 0.5 * np.pi
    if problem == "laplace_1d_mixed":
        c = math.sqrt(2.0)
        return (lambda x: c * np.sin(h * x)), (lambda x: (c * h * np.cos(h * x),))
    if problem == "laplace_1d_dirichlet":
        c = math.sqrt(2.0)
        return (lambda x: c * np.sin(np.pi * x)), (lambda x: (c * np.pi * np.cos(np.pi * x),))
    if problem == "laplace_2d_mixed":
        return (
            lambda x, y: 2.0 * np.sin(h * x) * np.sin(h * y),
            lambda x, y: (2.0 * h * np.cos(h * x) * np.sin(h * y), 2.0 * h * np.sin(h * x) * np.cos(h * y)),
        )
    raise ConfigError(f"unknown problem {problem!r}")
