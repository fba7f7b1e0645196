"""Density catalogue.

A density is resolved to a :class:`Density` holding a vectorized callable
of the physical coordinates and, when known, whether it is a product of
per-coordinate factors (only constants are declared separable here).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class Density:
    id: str
    func: object
    constant: float = None

    def __call__(self, *coords):
        vals = np.asarray(self.func(*coords), dtype=float)
        return np.broadcast_to(vals, np.shape(coords[0])).copy()

    @property
    def separable(self):
        return self.constant is not None


def _sin_xy(x, y):
    return np.abs(np.sin(x * y)) + x + y + 1.0


def density(spec=None):
    """Resolve ``spec`` to a :class:`Density`.

    Parameters
    ----------
    spec : None, float, str, dict, callable or Density
        ``None`` or a number gives a constant; ``"constant"`` is 1;
        ``"sin_xy"`` is ``|sin(xy)| + x + y + 1``; a dict may carry
        ``{"id": "constant", "value": c}``; callables are used as is
        (treated as non-separable).
    """
    if isinstance(spec, Density):
        return spec
    if spec is None:
        spec = 1.0
    if isinstance(spec, dict):
        sid = spec.get("id", "constant")
        if sid == "constant":
            spec = float(spec.get("value", 1.0))
        else:
            spec = sid
    if isinstance(spec, (int, float)):
        c = float(spec)
        if c <= 0:
            raise ConfigError("density must be positive")
        return Density("constant", lambda *xs: c, c)
    if spec == "constant":
        return Density("constant", lambda *xs: 1.0, 1.0)
    if spec == "sin_xy":
        return Density("sin_xy", _sin_xy)
    if callable(spec):
        return Density(getattr(spec, "__name__", "custom"), spec)
    raise ConfigError(f"unknown density {spec!r}")
