"""Closed-form analysis of the logistic equation with multiplicative white noise.

The model is the Ito equation

    dx = (a x - b x^2) dt + sigma x dw,

with carrying capacity ``x* = a/b``. Everything here is a pure function of
its inputs and accepts scalars or numpy arrays for the state ``x``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "Regime",
    "Band",
    "drift",
    "diffusion",
    "carrying_capacity",
    "classify_regime",
    "band_endpoints",
    "volterra_v",
    "generator_Lv",
    "generator_Lv_direct",
    "khasminskii_V",
    "generator_LV",
    "khasminskii_generator",
    "stationary_mean",
]


@dataclass(frozen=True)
class ModelParams:
    """Growth rate ``a``, crowding coefficient ``b`` and noise intensity ``sigma``."""

    a: float
    b: float
    sigma: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "sigma"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.a <= 0:
            raise ValueError(f"growth rate a must be positive, got {self.a}")
        if self.b <= 0:
            raise ValueError(f"crowding coefficient b must be positive, got {self.b}")

    @property
    def xstar(self) -> float:
        return self.a / self.b

    @property
    def sigma_sq(self) -> float:
        return self.sigma * self.sigma


class Regime(str, enum.Enum):
    DETERMINISTIC = "Deterministic"
    PERSISTENT_BAND = "PersistentBand"
    CRITICAL = "Critical"
    EXTINCTION = "Extinction"


@dataclass(frozen=True)
class Band:
    """Closed interval ``[x1, x2]`` on which the Volterra generator is non-negative."""

    x1: float
    x2: float

    def contains(self, x):
        return (x >= self.x1) & (x <= self.x2)


def _positive(x, what="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"{what} must be strictly positive")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def drift(x, p: ModelParams):
    x = np.asarray(x, dtype=float)
    return _out(p.a * x - p.b * x * x)


def diffusion(x, p: ModelParams):
    x = np.asarray(x, dtype=float)
    return _out(p.sigma * x)


def carrying_capacity(p: ModelParams) -> float:
    return p.a / p.b


def classify_regime(p: ModelParams) -> Regime:
    """Regime of ``p``; ``sigma^2`` is compared with ``2a`` exactly, without tolerance."""
    s2 = p.sigma_sq
    two_a = 2.0 * p.a
    if p.sigma == 0.0:
        return Regime.DETERMINISTIC
    if s2 < two_a:
        return Regime.PERSISTENT_BAND
    if s2 == two_a:
        return Regime.CRITICAL
    return Regime.EXTINCTION


def band_endpoints(p: ModelParams) -> Band:
    """Zeros of the Volterra generator.

    ``x2 = x*(1 + |sigma|/sqrt(2a))`` always. ``x1`` is the mirror point when
    ``sigma^2 < 2a`` and is set to 0 otherwise.
    """
    xstar = p.xstar
    rel = abs(p.sigma) / math.sqrt(2.0 * p.a)
    x2 = xstar * (1.0 + rel)
    if p.sigma_sq < 2.0 * p.a:
        x1 = xstar * (1.0 - rel)
    else:
        x1 = 0.0
    return Band(x1, x2)


def volterra_v(x, xstar: float):
    """``v(x) = x/x* - ln(x/x*) - 1``, defined for ``x > 0``."""
    if not xstar > 0:
        raise ValueError(f"xstar must be positive, got {xstar}")
    r = _positive(x) / xstar
    return _out(r - np.log(r) - 1.0)


def generator_Lv(x, p: ModelParams):
    """Generator of the equation applied to the Volterra function.

    Simplified form ``-(b/x*)(x - x*)^2 + sigma^2/2``.
    """
    x = _positive(x)
    xstar = p.xstar
    return _out(-(p.b / xstar) * (x - xstar) ** 2 + 0.5 * p.sigma_sq)


def generator_Lv_direct(x, p: ModelParams):
    """Same generator from ``v' f + v'' g^2 / 2`` with ``v' = 1/x* - 1/x``, ``v'' = 1/x^2``.

    Kept independent of :func:`generator_Lv` so one can check the other.
    """
    x = _positive(x)
    dv = 1.0 / p.xstar - 1.0 / x
    d2v = 1.0 / (x * x)
    f = p.a * x - p.b * x * x
    g = p.sigma * x
    return _out(dv * f + 0.5 * d2v * g * g)


def _khasminskii_exponent(a: float, sigma: float) -> float:
    if sigma == 0.0:
        raise ValueError("Khasminskii function needs sigma != 0")
    return 1.0 - 2.0 * a / (sigma * sigma)


def khasminskii_V(x, p: ModelParams):
    """``V(x) = |x|^(1 - 2a/sigma^2)``."""
    q = _khasminskii_exponent(p.a, p.sigma)
    x = np.asarray(x, dtype=float)
    if q < 0 and np.any(x == 0):
        raise ValueError("V is singular at x = 0 when sigma^2 < 2a")
    return _out(np.abs(x) ** q)


def khasminskii_generator(x, a: float, b: float, sigma: float):
    """``LV(x) = -(1 - 2a/sigma^2) b |x|^(2 - 2a/sigma^2)`` for ``x > 0``.

    Takes raw coefficients so that ``b = 0`` (pure geometric Brownian
    motion) can be evaluated; :class:`ModelParams` forbids it.
    """
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if b < 0:
        raise ValueError(f"b must be non-negative, got {b}")
    q = _khasminskii_exponent(a, sigma)
    x = _positive(x)
    return _out(-q * b * np.abs(x) ** (1.0 + q))


def generator_LV(x, p: ModelParams):
    return khasminskii_generator(x, p.a, p.b, p.sigma)


def stationary_mean(p: ModelParams) -> float:
    """Mean of the stationary Gamma law, ``(2a - sigma^2) / (2b)``.

    The stationary density is proportional to
    ``x^(2a/sigma^2 - 2) exp(-2 b x / sigma^2)``. It is normalisable only in
    the persistent regime.
    """
    if classify_regime(p) is not Regime.PERSISTENT_BAND:
        raise ValueError(f"no stationary law on (0, inf) in regime {classify_regime(p).value}")
    return (2.0 * p.a - p.sigma_sq) / (2.0 * p.b)
