"""Property suites behind ``stochlogistic verify``.

Each suite returns a list of check dicts with the measured value, the
tolerance it was held to, and a pass flag.
"""
from __future__ import annotations

import numpy as np

from .engine import SimGrid
from .ensemble import EnsembleConfig, dynkin_residual, run_ensemble, strong_convergence_study
from .figures import FIGURES
from .model import (
    ModelParams,
    band_endpoints,
    generator_Lv,
    generator_Lv_direct,
    generator_LV,
    khasminskii_generator,
    stationary_mean,
)

FIG1 = ModelParams(1.5, 1.0, 0.25)
FIG5 = ModelParams(1.0, 1.0, 2.45)
CONVERGENCE_DTS = [2.0**-k for k in range(6, 11)]


def _check(suite, name, value, tolerance, passed, **extra):
    d = {"suite": suite, "name": name, "value": value, "tolerance": tolerance, "passed": bool(passed)}
    d.update(extra)
    return d


def sign_grids(p: ModelParams, n=1000, delta=1e-6, eps=1e-6):
    """Inside and outside grids for the Volterra generator sign check."""
    band = band_endpoints(p)
    inside = np.linspace(band.x1 * (1 + delta), band.x2 * (1 - delta), n)
    below = np.linspace(eps, band.x1 * (1 - delta), n) if band.x1 > 0 else np.empty(0)
    above = np.linspace(band.x2 * (1 + delta), 10 * band.x2, n)
    return inside, below, above


def suite_signs():
    checks = []
    for fid in (1, 2, 3, 4):
        p = FIGURES[fid].params
        inside, below, above = sign_grids(p)
        lv_in = generator_Lv(inside, p)
        lv_out = generator_Lv(np.concatenate([below, above]), p)
        checks.append(_check("signs", f"fig{fid}: Lv > 0 inside (x1, x2)", float(lv_in.min()), 0.0, lv_in.min() > 0))
        checks.append(_check("signs", f"fig{fid}: Lv < 0 outside [x1, x2]", float(lv_out.max()), 0.0, lv_out.max() < 0))
        peak = generator_Lv(p.xstar, p)
        err = abs(peak - 0.5 * p.sigma_sq)
        checks.append(_check("signs", f"fig{fid}: Lv(x*) = sigma^2/2", err, 1e-12, err <= 1e-12))
    for p in (FIG1, FIGURES[3].params):
        x = np.geomspace(1e-3 * p.xstar, 1e3 * p.xstar, 10_000)
        simple, direct = generator_Lv(x, p), generator_Lv_direct(x, p)
        rel = float(np.max(np.abs(simple - direct) / np.maximum(np.abs(direct), np.finfo(float).tiny)))
        checks.append(_check("signs", f"a={p.a}, sigma={p.sigma}: Lv simplified vs v'f + v''g^2/2", rel, 1e-10,
                             rel <= 1e-10))
    x = np.linspace(1e-3, 10 * FIG5.xstar, 2000)
    lv5 = generator_LV(x, FIG5)
    checks.append(_check("signs", "fig5: LV <= 0 (stabilisation by noise)", float(lv5.max()), 0.0, lv5.max() <= 0))
    x = np.linspace(1e-3, 10 * FIG1.xstar, 2000)
    lv1 = generator_LV(x, FIG1)
    checks.append(_check("signs", "fig1: LV >= 0 (origin unstable)", float(lv1.min()), 0.0, lv1.min() >= 0))
    zero_b = np.abs(khasminskii_generator(x, 1.0, 0.0, 2.45)).max()
    checks.append(_check("signs", "LV == 0 for b = 0", float(zero_b), 0.0, zero_b == 0))
    crit = np.abs(khasminskii_generator(x, 2.0, 1.0, 2.0)).max()
    checks.append(_check("signs", "LV == 0 for sigma^2 = 2a", float(crit), 0.0, crit == 0))
    return checks


def suite_dynkin(n_paths=10_000, seed=42, dt=1e-3, checkpoints=(0.5, 1.0, 2.0), workers=1):
    grid = SimGrid.from_horizon(max(checkpoints), dt)
    cfg = EnsembleConfig(FIG1, 2.3, grid, n_paths, master_seed=seed)
    checks = []
    for d in dynkin_residual(cfg, checkpoints, workers=workers):
        tol = 3 * d.se_v + 0.05 * FIG1.sigma_sq * d.t
        checks.append(_check("dynkin", f"|residual| at t={d.t}", abs(d.residual), tol, abs(d.residual) <= tol,
                             se_v=d.se_v, se_residual=d.se_residual, n_survivors=d.n_survivors))
    return checks


def suite_convergence(n_paths=200, seed=42, x0=2.3):
    checks = []
    for scheme, lo, hi in (("euler_maruyama", 0.3, 0.7), ("milstein", 0.8, 1.2)):
        res = strong_convergence_study(FIG1, x0, scheme, CONVERGENCE_DTS, n_paths, seed)
        checks.append(_check("convergence", f"{scheme} strong order", res.slope, [lo, hi], lo <= res.slope <= hi,
                             dts=res.dts, rms_errors=res.rms_errors))
    return checks


def suite_stationary(n_paths=1000, seed=42, t_end=50.0, burn_in=25.0, dt=1e-3, workers=1):
    cfg = EnsembleConfig(FIG1, 2.3, SimGrid.from_horizon(t_end, dt), n_paths, master_seed=seed, burn_in=burn_in)
    stats = run_ensemble(cfg, workers=workers)
    predicted = stationary_mean(FIG1)
    rel = abs(stats.time_avg_state - predicted) / predicted
    return [
        _check("stationary", "paths with time average inside (x1, x2)", stats.time_avg_in_band_fraction, 0.99,
               stats.time_avg_in_band_fraction >= 0.99),
        _check("stationary", "relative error of ensemble time average vs Gamma mean", rel, 0.02, rel <= 0.02,
               time_avg_state=stats.time_avg_state, predicted=predicted),
    ]


def suite_extinction(n_paths=1000, seed=42, dt=1e-3, threshold=1e-6, workers=1):
    frac = {}
    for p, x0, label in ((FIG5, 1.75, "fig5"), (FIG1, 2.3, "fig1")):
        for t_end in (50.0, 100.0):
            cfg = EnsembleConfig(p, x0, SimGrid.from_horizon(t_end, dt), n_paths, master_seed=seed,
                                 extinction_threshold=threshold)
            frac[label, t_end] = run_ensemble(cfg, workers=workers).extinct_fraction
    return [
        _check("extinction", "fig5 extinct fraction by T=50", frac["fig5", 50.0], 0.95, frac["fig5", 50.0] >= 0.95),
        _check("extinction", "fig5 extinct fraction T=100 >= T=50", frac["fig5", 100.0], frac["fig5", 50.0],
               frac["fig5", 100.0] >= frac["fig5", 50.0]),
        _check("extinction", "fig1 extinct fraction (persistence control)",
               max(frac["fig1", 50.0], frac["fig1", 100.0]), 0.0,
               frac["fig1", 50.0] == 0 and frac["fig1", 100.0] == 0),
    ]


SUITES = {
    "signs": suite_signs,
    "dynkin": suite_dynkin,
    "convergence": suite_convergence,
    "stationary": suite_stationary,
    "extinction": suite_extinction,
}
