"""Stochastic logistic growth: band endpoints, Lyapunov generators and Monte-Carlo checks."""
from .model import (
    Band,
    ModelParams,
    Regime,
    band_endpoints,
    carrying_capacity,
    classify_regime,
    diffusion,
    drift,
    generator_Lv,
    generator_LV,
    khasminskii_V,
    stationary_mean,
    volterra_v,
)
from .engine import NoiseStream, Path, Scheme, SimGrid, backend, simulate_path, reference_path

__version__ = "0.1.0"
