"""Newmark time integration of ``M u'' + K u = f`` with mass substitution.

``M_like`` may be any operator exposing ``solve`` (dense
:class:`~lumplab.linalg.SymMatrix`, :class:`~lumplab.linalg.BandedSPD`,
single-term :class:`~lumplab.linalg.KronOperator`, lumped family members)
or a plain array.  The same operator is used for the initial acceleration
and inside the time loop.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, Unstable
from .linalg import SymMatrix
from .pencil import critical_dt

BLOWUP = 1e8


@dataclass(frozen=True)
class NewmarkConfig:
    """Newmark parameters with a step size that hits ``T`` exactly."""

    beta: float
    gamma: float
    dt: float
    N: int
    T: float

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0 and 0.0 <= self.gamma <= 1.0):
            raise ConfigError("Newmark parameters must lie in [0, 1]")
        if self.N < 1 or self.dt <= 0 or self.T <= 0:
            raise ConfigError("need N >= 1, dt > 0 and T > 0")
        if abs(self.dt * self.N - self.T) > 1e-12 * self.T:
            raise ConfigError("dt * N must equal T")

    @classmethod
    def from_step(cls, T, dt, beta=0.0, gamma=0.5):
        """``N = ceil(T / dt)``, then ``dt = T / N``."""
        if T <= 0 or dt <= 0:
            raise ConfigError("T and dt must be positive")
        n = max(1, math.ceil(T / dt - 1e-9))
        return cls(float(beta), float(gamma), T / n, n, float(T))

    @property
    def explicit(self):
        return self.beta == 0.0

    @property
    def unconditionally_stable(self):
        return self.beta >= 0.5 * self.gamma >= 0.25


@dataclass(frozen=True)
class Trajectory:
    """States at ``t_s = s * dt`` for ``s = 0..N``; arrays have shape (N + 1, n)."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    config: NewmarkConfig

    @property
    def n(self):
        return self.u.shape[1]

    @property
    def steps(self):
        return self.config.N

    def nearest(self, time):
        return int(np.argmin(np.abs(self.t - time)))

    def to_csv(self, dofs=None, header_comment=None):
        """``t`` followed by displacement columns ``u[dof]``."""
        dofs = range(self.n) if dofs is None else list(dofs)
        lines = []
        if header_comment:
            lines.append(f"# {header_comment}")
        lines.append(",".join(["t"] + [f"u{d}" for d in dofs]))
        for s in range(self.t.size):
            vals = [repr(float(self.t[s]))] + [repr(float(self.u[s, d])) for d in dofs]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    def to_bytes(self):
        """Binary dump: ``<q n``, ``<q states`` then ``u, v, a`` per state as ``<f8``."""
        states = self.t.size
        body = np.stack([self.u, self.v, self.a], axis=1).astype("<f8")
        return struct.pack("<qq", self.n, states) + body.tobytes()

    @staticmethod
    def read_bytes(data):
        n, states = struct.unpack_from("<qq", data)
        arr = np.frombuffer(data, dtype="<f8", offset=16).reshape(states, 3, n)
        return arr[:, 0], arr[:, 1], arr[:, 2]


def _solver(m):
    if hasattr(m, "solve"):
        return m
    return SymMatrix(m)


def _dense(a):
    if hasattr(a, "to_dense"):
        return np.asarray(a.to_dense(), dtype=float)
    return np.asarray(a, dtype=float)


def _matvec(k):
    if hasattr(k, "matvec"):
        return k.matvec
    k = np.asarray(k, dtype=float)
    return lambda x: k @ x


def newmark(m_like, k, f, u0, v0, cfg):
    """Newmark-beta integration.

    Parameters
    ----------
    m_like : operator
        Mass matrix or its substitute.
    k : array_like or SymMatrix
        Stiffness matrix.
    f : callable or None
        ``f(t)`` returns the load vector; ``None`` means no load.
    u0, v0 : ndarray
        Initial displacement and velocity.
    cfg : NewmarkConfig

    Returns
    -------
    Trajectory

    Raises
    ------
    Unstable
        When the displacement becomes non-finite or exceeds
        ``1e8 * (|u0|_inf + dt |v0|_inf + 1)``.
    """
    u = np.array(u0, dtype=float, copy=True).ravel()
    v = np.array(v0, dtype=float, copy=True).ravel()
    n = u.size
    if v.size != n:
        raise DimensionError("u0 and v0 must have equal length")
    kv = _matvec(k)
    beta, gamma, dt = cfg.beta, cfg.gamma, cfg.dt
    if f is None:
        zero = np.zeros(n)
        load = lambda t: zero  # noqa: E731
    else:
        load = f
    if cfg.explicit:
        lhs = _solver(m_like)
    else:
        lhs = SymMatrix(_dense(m_like) + beta * dt * dt * _dense(k))
    mass = _solver(m_like)
    a = np.asarray(mass.solve(np.asarray(load(0.0), dtype=float) - kv(u)), dtype=float).ravel()
    limit = BLOWUP * (np.max(np.abs(u), initial=0.0) + dt * np.max(np.abs(v), initial=0.0) + 1.0)
    steps = cfg.N
    us = np.empty((steps + 1, n))
    vs = np.empty((steps + 1, n))
    as_ = np.empty((steps + 1, n))
    us[0], vs[0], as_[0] = u, v, a
    for s in range(steps):
        t1 = (s + 1) * dt
        ut = u + dt * v + 0.5 * dt * dt * (1.0 - 2.0 * beta) * a
        vt = v + (1.0 - gamma) * dt * a
        a = np.asarray(lhs.solve(np.asarray(load(t1), dtype=float) - kv(ut)), dtype=float).ravel()
        v = vt + gamma * dt * a
        u = ut + beta * dt * dt * a
        umax = np.max(np.abs(u))
        if not np.isfinite(umax) or umax > limit:
            raise Unstable(s + 1)
        us[s + 1], vs[s + 1], as_[s + 1] = u, v, a
    times = np.arange(steps + 1) * dt
    times[-1] = cfg.T
    return Trajectory(times, us, vs, as_, cfg)


def central_difference(m_like, k, f, u0, v0, T, safety=1.0, dt=None):
    """Central differences (``beta = 0``, ``gamma = 1/2``).

    The step is ``safety * 2 / sqrt(lam_max(K, M_like))`` unless ``dt`` is
    given, then rounded down so that ``N = ceil(T / dt)`` steps reach ``T``.
    """
    if dt is None:
        if safety <= 0:
            raise ConfigError("safety factor must be positive")
        dt = safety * critical_dt(k, m_like)
    cfg = NewmarkConfig.from_step(T, dt, 0.0, 0.5)
    return newmark(m_like, k, f, u0, v0, cfg)


def transient_l2_series(model, traj, exact, sample_times):
    """L2 error of the trajectory against ``exact(*x, t)`` at sample times.

    Each sample uses the stored step nearest to the requested time.

    Returns
    -------
    ndarray, shape (len(sample_times), 2)
        Columns: actual step time and L2 error.
    """
    from .splinefem import l2_error

    if traj.n != model.n:
        raise DimensionError(f"trajectory has {traj.n} DOFs, model has {model.n}")
    out = []
    for ts in sample_times:
        s = traj.nearest(ts)
        t = float(traj.t[s])
        err = l2_error(model, traj.u[s], lambda *x, _t=t: exact(*x, _t))
        out.append((t, err))
    return np.array(out)
