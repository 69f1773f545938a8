"""Reproducible pathwise simulation of the stochastic logistic equation."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ModelParams

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
from . import _pykernels

__all__ = [
    "EPS_ABS",
    "Scheme",
    "SimGrid",
    "NoiseStream",
    "Path",
    "backend",
    "set_backend",
    "wiener_increments",
    "wiener_increment_block",
    "step_euler_maruyama",
    "step_milstein",
    "integrate",
    "simulate_path",
    "reference_path",
    "reference_states",
]

EPS_ABS = 1e-8
MAX_SEED = 2**64

_backend = _compiled if _compiled is not None else _pykernels


def backend() -> str:
    """Name of the active integration backend: ``"cython"`` or ``"python"``."""
    return "cython" if _backend is _compiled else "python"


def set_backend(name: str) -> None:
    global _backend
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled extension is not available; reinstall to build it")
        _backend = _compiled
    elif name == "python":
        _backend = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")


class Scheme(str, enum.Enum):
    EULER_MARUYAMA = "euler_maruyama"
    MILSTEIN = "milstein"
    REFERENCE = "reference"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        aliases = {"em": cls.EULER_MARUYAMA, "euler-maruyama": cls.EULER_MARUYAMA}
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class SimGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if isinstance(self.n_steps, bool) or int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_horizon(cls, t_end: float, dt: float) -> "SimGrid":
        n = round(t_end / dt)
        if n < 1 or abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
            raise ValueError(f"t_end={t_end} is not a whole number of steps dt={dt}")
        return cls(dt, n)

    @property
    def T(self) -> float:
        return self.dt * self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1, dtype=np.float64)

    def index_of(self, t: float) -> int:
        """Grid index of time ``t``; ``t`` must lie on the grid."""
        k = round(t / self.dt)
        if k < 0 or k > self.n_steps or abs(k * self.dt - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"time {t} is not on the grid (dt={self.dt}, T={self.T})")
        return k


@dataclass(frozen=True)
class NoiseStream:
    """Identifies the Brownian increments of one path.

    The stream is keyed by ``(master_seed, path_index)`` through
    ``SeedSequence`` spawn keys feeding a Philox counter generator, so a
    path's noise does not depend on which other paths run or in what order.
    """

    master_seed: int
    path_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < MAX_SEED:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.path_index < 0:
            raise ValueError(f"path_index must be non-negative, got {self.path_index}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.path_index),))
        return np.random.Generator(np.random.Philox(ss))


def wiener_increments(stream: NoiseStream, grid: SimGrid) -> np.ndarray:
    """``n_steps`` i.i.d. N(0, dt) increments for this stream.

    Streams are prefix-stable: a longer grid with the same ``dt`` extends the
    sequence of a shorter one.
    """
    z = stream.generator().standard_normal(grid.n_steps)
    return z * math.sqrt(grid.dt)


def wiener_increment_block(master_seed: int, path_indices, grid: SimGrid) -> np.ndarray:
    """Stack of :func:`wiener_increments` rows, one per path index."""
    path_indices = list(path_indices)
    out = np.empty((len(path_indices), grid.n_steps), dtype=np.float64)
    for row, idx in enumerate(path_indices):
        out[row] = wiener_increments(NoiseStream(master_seed, idx), grid)
    return out


def step_euler_maruyama(x: float, p: ModelParams, dt: float, dW: float, eps_abs: float = EPS_ABS) -> float:
    if x <= 0.0:
        return 0.0
    xn = x + (p.a * x - p.b * x * x) * dt + p.sigma * x * dW
    return 0.0 if xn <= eps_abs else xn


def step_milstein(x: float, p: ModelParams, dt: float, dW: float, eps_abs: float = EPS_ABS) -> float:
    if x <= 0.0:
        return 0.0
    xn = x + (p.a * x - p.b * x * x) * dt + p.sigma * x * dW
    xn = xn + (0.5 * p.sigma * p.sigma) * x * (dW * dW - dt)
    return 0.0 if xn <= eps_abs else xn


def integrate(p: ModelParams, x0, dW, dt: float, scheme, eps_abs: float = EPS_ABS):
    """Integrate a block of paths with the active backend.

    ``x0`` is a scalar or one value per row of ``dW``. Returns
    ``(states, absorbed_step, overshoot)``; ``absorbed_step`` is -1 for
    paths that never reach ``eps_abs`` and ``overshoot`` flags paths whose
    absorbing step went below zero before clamping.
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.REFERENCE:
        raise ValueError("the reference solution is not a stepping scheme; use reference_path")
    dW = np.ascontiguousarray(dW, dtype=np.float64)
    if dW.ndim != 2:
        raise ValueError("dW must be a 2-d array (paths x steps)")
    x0 = np.array(np.broadcast_to(np.asarray(x0, dtype=np.float64), (dW.shape[0],)))
    if np.any(x0 < 0):
        raise ValueError("initial states must be non-negative")
    half_s2 = 0.5 * p.sigma * p.sigma
    return _backend.integrate_block(
        x0, dW, p.a, p.b, p.sigma, float(dt), scheme is Scheme.MILSTEIN, half_s2, float(eps_abs)
    )


@dataclass
class Path:
    times: np.ndarray
    states: np.ndarray
    scheme: Scheme
    master_seed: int
    path_index: int
    absorbed_at: Optional[float] = None
    # absorbing step undershot zero and was clamped; dt may be too coarse
    overshoot: bool = False

    @property
    def x0(self) -> float:
        return float(self.states[0])


def simulate_path(
    p: ModelParams,
    x0: float,
    grid: SimGrid,
    scheme=Scheme.MILSTEIN,
    stream: Optional[NoiseStream] = None,
    eps_abs: float = EPS_ABS,
) -> Path:
    if not x0 > 0:
        raise ValueError(f"x0 must be positive, got {x0}")
    stream = stream if stream is not None else NoiseStream(42, 0)
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.REFERENCE:
        return reference_path(p, x0, grid, stream)
    dW = wiener_increments(stream, grid)[None, :]
    states, absorbed, overshoot = integrate(p, x0, dW, grid.dt, scheme, eps_abs)
    k = int(absorbed[0])
    return Path(
        times=grid.times,
        states=states[0],
        scheme=scheme,
        master_seed=stream.master_seed,
        path_index=stream.path_index,
        absorbed_at=None if k < 0 else k * grid.dt,
        overshoot=bool(overshoot[0]),
    )


def reference_states(p: ModelParams, x0, dW, dt: float) -> np.ndarray:
    """Pathwise closed-form solution on the grid of the increments ``dW``.

    With ``E(t) = exp((a - sigma^2/2) t + sigma w(t))`` the solution is
    ``x0 E(t) / (1 + b x0 int_0^t E ds)``; the time integral uses the
    trapezoid rule. Works row-wise on 2-d ``dW``.
    """
    dW = np.asarray(dW, dtype=np.float64)
    squeeze = dW.ndim == 1
    dW = np.atleast_2d(dW)
    n = dW.shape[1]
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1, 1)
    t = dt * np.arange(n + 1)
    w = np.zeros((dW.shape[0], n + 1))
    np.cumsum(dW, axis=1, out=w[:, 1:])
    E = np.exp((p.a - 0.5 * p.sigma_sq) * t + p.sigma * w)
    integral = np.zeros_like(E)
    np.cumsum(0.5 * dt * (E[:, 1:] + E[:, :-1]), axis=1, out=integral[:, 1:])
    x = x0 * E / (1.0 + p.b * x0 * integral)
    return x[0] if squeeze else x


def reference_path(p: ModelParams, x0: float, fine_grid: SimGrid, stream: NoiseStream, dW=None) -> Path:
    """Closed-form path on ``fine_grid`` driven by ``stream``.

    ``dW`` may be passed to reuse already drawn increments; its length must
    match the grid.
    """
    if not x0 > 0:
        raise ValueError(f"x0 must be positive, got {x0}")
    if dW is None:
        dW = wiener_increments(stream, fine_grid)
    dW = np.asarray(dW, dtype=np.float64)
    if dW.shape != (fine_grid.n_steps,):
        raise ValueError(f"increment length {dW.shape} does not match grid with {fine_grid.n_steps} steps")
    return Path(
        times=fine_grid.times,
        states=reference_states(p, x0, dW, fine_grid.dt),
        scheme=Scheme.REFERENCE,
        master_seed=stream.master_seed,
        path_index=stream.path_index,
    )
