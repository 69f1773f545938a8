"""Monte-Carlo ensembles and the statistics used to check the analytic claims.

Paths are processed in fixed blocks of :data:`BLOCK_SIZE` consecutive path
indices. Blocks may run on several threads, but partial results are always
reduced in block order. Output is therefore identical for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .engine import EPS_ABS, Path, Scheme, SimGrid, integrate, reference_states, wiener_increment_block
from .model import Band, ModelParams, Regime, band_endpoints, classify_regime, stationary_mean

__all__ = [
    "BLOCK_SIZE",
    "MIN_SURVIVORS",
    "EnsembleConfig",
    "EnsembleStats",
    "DynkinCheck",
    "ConvergenceResult",
    "InsufficientPathsError",
    "AbsorptionError",
    "run_ensemble",
    "band_occupancy",
    "extinction_stats",
    "dynkin_residual",
    "stationary_mean_check",
    "strong_convergence_study",
    "strong_convergence_order",
]

BLOCK_SIZE = 64
MIN_SURVIVORS = 100


class InsufficientPathsError(RuntimeError):
    pass


class AbsorptionError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnsembleConfig:
    params: ModelParams
    x0: float
    grid: SimGrid
    n_paths: int
    master_seed: int = 42
    scheme: Scheme = Scheme.MILSTEIN
    burn_in: Optional[float] = None
    extinction_threshold: float = 1e-6
    eps_abs: float = EPS_ABS

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.scheme is Scheme.REFERENCE:
            raise ValueError("ensembles need a stepping scheme")
        if not self.x0 > 0:
            raise ValueError(f"x0 must be positive, got {self.x0}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError(f"n_paths must be a positive integer, got {self.n_paths}")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", 0.5 * self.grid.T)
        if not 0 <= self.burn_in < self.grid.T:
            raise ValueError(f"burn_in must lie in [0, T={self.grid.T}), got {self.burn_in}")
        if not self.eps_abs > 0:
            raise ValueError("eps_abs must be positive")
        if self.extinction_threshold < self.eps_abs:
            raise ValueError(
                f"extinction_threshold {self.extinction_threshold} is below the absorption level {self.eps_abs}"
            )

    @property
    def band(self) -> Band:
        return band_endpoints(self.params)


@dataclass
class DynkinCheck:
    """Ensemble estimate of ``E v(x(t)) - v(x0) - int_0^t E Lv(x(s)) ds``."""

    t: float
    residual: float
    se_v: float  # standard error of the mean of v(x(t))
    se_residual: float  # standard error of the per-path residual
    n_survivors: int
    n_excluded: int


@dataclass
class EnsembleStats:
    config: EnsembleConfig
    times: np.ndarray
    mean_traj: np.ndarray
    var_traj: np.ndarray
    mean_v_traj: np.ndarray
    se_v_traj: np.ndarray
    survivors_traj: np.ndarray
    band_occupancy: float
    occupancy_per_path: np.ndarray
    extinct_fraction: float
    first_passage_times: np.ndarray
    time_avg_state: float
    time_avg_per_path: np.ndarray
    time_avg_in_band_fraction: float
    overshoot_fraction: float
    dynkin: list = field(default_factory=list)

    @property
    def n_paths(self) -> int:
        return self.config.n_paths

    @property
    def se_traj(self) -> np.ndarray:
        return np.sqrt(self.var_traj / self.n_paths)

    @property
    def dynkin_residuals(self) -> np.ndarray:
        return np.array([d.residual for d in self.dynkin])


def _burn_in_index(grid: SimGrid, burn_in: float) -> int:
    return min(grid.n_steps, int(math.ceil(burn_in / grid.dt - 1e-9)))


def _first_passage_index(states: np.ndarray, threshold: float) -> np.ndarray:
    """Earliest grid index with state <= threshold, or -1."""
    hit = states <= threshold
    idx = hit.argmax(axis=1)
    idx[~hit.any(axis=1)] = -1
    return idx


def _volterra_rows(states, xstar):
    """v(x) on positive states, NaN where the path is absorbed."""
    pos = states > 0
    r = np.where(pos, states, xstar) / xstar
    v = r - np.log(r) - 1.0
    return np.where(pos, v, np.nan), pos


def _block(cfg: EnsembleConfig, start: int, stop: int, checkpoint_idx: Sequence[int]) -> dict:
    p, grid = cfg.params, cfg.grid
    dW = wiener_increment_block(cfg.master_seed, range(start, stop), grid)
    states, absorbed, overshoot = integrate(p, cfg.x0, dW, grid.dt, cfg.scheme, cfg.eps_abs)
    del dW
    n = stop - start

    # shift by the first path so identical paths give an exact mean and zero M2
    shift = states[0]
    mean = shift + (states - shift).sum(axis=0) / n
    m2 = ((states - mean) ** 2).sum(axis=0)

    xstar = p.xstar
    v, pos = _volterra_rows(states, xstar)
    v0 = np.where(pos, v, 0.0)
    v_count = pos.sum(axis=0)
    v_sum = v0.sum(axis=0)
    v_sumsq = (v0 * v0).sum(axis=0)

    band = cfg.band
    k0 = _burn_in_index(grid, cfg.burn_in)
    tail = states[:, k0:]
    occupancy = band.contains(tail).mean(axis=1)
    time_avg = tail.mean(axis=1)
    fpi = _first_passage_index(states, cfg.extinction_threshold)

    ncp = len(checkpoint_idx)
    dyn_v = np.full((n, ncp), np.nan)
    dyn_int = np.full((n, ncp), np.nan)
    if ncp:
        # Lv on positive states; cumulative trapezoid along each path
        lv = -(p.b / xstar) * (np.where(pos, states, xstar) - xstar) ** 2 + 0.5 * p.sigma_sq
        cum = np.zeros_like(lv)
        np.cumsum(0.5 * grid.dt * (lv[:, 1:] + lv[:, :-1]), axis=1, out=cum[:, 1:])
        for j, k in enumerate(checkpoint_idx):
            alive = pos[:, k]
            dyn_v[alive, j] = v[alive, k]
            dyn_int[alive, j] = cum[alive, k]

    return dict(
        n=n, mean=mean, m2=m2, v_count=v_count, v_sum=v_sum, v_sumsq=v_sumsq,
        occupancy=occupancy, time_avg=time_avg, fpi=fpi, absorbed=absorbed,
        overshoot=overshoot, dyn_v=dyn_v, dyn_int=dyn_int,
    )


def _reduce(parts):
    n = 0
    mean = m2 = None
    v_count = v_sum = v_sumsq = None
    for part in parts:
        nb = part["n"]
        if n == 0:
            n, mean, m2 = nb, part["mean"], part["m2"]
            v_count, v_sum, v_sumsq = part["v_count"], part["v_sum"], part["v_sumsq"]
            continue
        # pairwise (Chan et al.) update, applied in block order
        tot = n + nb
        delta = part["mean"] - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + part["m2"] + delta * delta * (n * nb / tot)
        n = tot
        v_count = v_count + part["v_count"]
        v_sum = v_sum + part["v_sum"]
        v_sumsq = v_sumsq + part["v_sumsq"]
    cat = {
        key: np.concatenate([pt[key] for pt in parts])
        for key in ("occupancy", "time_avg", "fpi", "absorbed", "overshoot", "dyn_v", "dyn_int")
    }
    return n, mean, m2, v_count, v_sum, v_sumsq, cat


def _dynkin_checks(cfg, checkpoints, dyn_v, dyn_int):
    v0 = cfg.x0 / cfg.params.xstar - math.log(cfg.x0 / cfg.params.xstar) - 1.0
    out = []
    for j, t in enumerate(checkpoints):
        alive = ~np.isnan(dyn_v[:, j])
        ns = int(alive.sum())
        if ns == 0:
            out.append(DynkinCheck(float(t), math.nan, math.nan, math.nan, 0, cfg.n_paths))
            continue
        vt = dyn_v[alive, j]
        per_path = vt - v0 - dyn_int[alive, j]
        if ns > 1:
            se_v = float(vt.std(ddof=1) / math.sqrt(ns))
            se_r = float(per_path.std(ddof=1) / math.sqrt(ns))
        else:
            se_v = se_r = math.nan
        residual = float(per_path.mean())
        out.append(DynkinCheck(float(t), residual, se_v, se_r, ns, cfg.n_paths - ns))
    return out


def run_ensemble(cfg: EnsembleConfig, checkpoints: Sequence[float] = (), workers: int = 1) -> EnsembleStats:
    """Simulate paths ``0 .. n_paths-1`` and aggregate their statistics.

    ``checkpoints`` are grid times at which Dynkin residuals are evaluated.
    ``workers`` sets the thread count and does not affect the result.
    """
    grid = cfg.grid
    cp_idx = [grid.index_of(t) for t in checkpoints]
    bounds = [(s, min(s + BLOCK_SIZE, cfg.n_paths)) for s in range(0, cfg.n_paths, BLOCK_SIZE)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _block(cfg, b[0], b[1], cp_idx), bounds))
    else:
        parts = [_block(cfg, s, e, cp_idx) for s, e in bounds]

    n, mean, m2, v_count, v_sum, v_sumsq, cat = _reduce(parts)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_v = np.where(v_count > 0, v_sum / np.maximum(v_count, 1), np.nan)
        var_v = np.where(v_count > 1, (v_sumsq - v_count * mean_v**2) / np.maximum(v_count - 1, 1), np.nan)
        se_v = np.sqrt(np.maximum(var_v, 0.0) / np.maximum(v_count, 1))

    fpi = cat["fpi"]
    band = cfg.band
    time_avg = cat["time_avg"]
    return EnsembleStats(
        config=cfg,
        times=grid.times,
        mean_traj=mean,
        var_traj=np.maximum(m2 / n, 0.0),
        mean_v_traj=mean_v,
        se_v_traj=np.where(v_count > 1, se_v, np.nan),
        survivors_traj=v_count,
        band_occupancy=float(cat["occupancy"].mean()),
        occupancy_per_path=cat["occupancy"],
        extinct_fraction=float((fpi >= 0).mean()),
        first_passage_times=fpi[fpi >= 0] * grid.dt,
        time_avg_state=float(time_avg.mean()),
        time_avg_per_path=time_avg,
        time_avg_in_band_fraction=float(((time_avg > band.x1) & (time_avg < band.x2)).mean()),
        overshoot_fraction=float(cat["overshoot"].mean()),
        dynkin=_dynkin_checks(cfg, checkpoints, cat["dyn_v"], cat["dyn_int"]),
    )


def band_occupancy(path: Path, band: Band, burn_in: float) -> float:
    """Fraction of grid points with ``t >= burn_in`` whose state is in ``[x1, x2]``.

    Absorbed states (0) are inside when ``x1 == 0``.
    """
    horizon = float(path.times[-1])
    if not burn_in < horizon:
        raise ValueError(f"burn_in {burn_in} must be below the path horizon {horizon}")
    mask = path.times >= burn_in - 1e-12
    return float(band.contains(path.states[mask]).mean())


def extinction_stats(paths: Sequence[Path], threshold: float):
    """``(extinct_fraction, first_passage_times)`` for a collection of paths."""
    if not threshold >= EPS_ABS:
        raise ValueError(f"threshold must be at least {EPS_ABS}")
    if not paths:
        return 0.0, []
    times = []
    for path in paths:
        hit = np.flatnonzero(path.states <= threshold)
        if hit.size:
            times.append(float(path.times[hit[0]]))
    return len(times) / len(paths), times


def dynkin_residual(
    cfg: EnsembleConfig,
    checkpoints: Sequence[float],
    min_survivors: int = MIN_SURVIVORS,
    workers: int = 1,
) -> list:
    """Dynkin identity residual at each checkpoint, over paths alive at that time.

    Raises :class:`InsufficientPathsError` when fewer than ``min_survivors``
    paths are still positive at some checkpoint.
    """
    stats = run_ensemble(cfg, checkpoints, workers=workers)
    for check in stats.dynkin:
        if check.n_survivors < min_survivors:
            raise InsufficientPathsError(
                f"only {check.n_survivors} surviving paths at t={check.t} (need {min_survivors})"
            )
    return stats.dynkin


def stationary_mean_check(cfg: EnsembleConfig, workers: int = 1):
    """Long-run time average of the state next to the stationary Gamma mean."""
    regime = classify_regime(cfg.params)
    if regime is not Regime.PERSISTENT_BAND:
        raise ValueError(f"stationary mean is only defined in the persistent regime, not {regime.value}")
    stats = run_ensemble(cfg, workers=workers)
    return stats.time_avg_state, stationary_mean(cfg.params)


@dataclass
class ConvergenceResult:
    scheme: Scheme
    dts: list
    rms_errors: list
    slope: float
    n_paths: int
    fine_dt: float


def strong_convergence_study(
    p: ModelParams,
    x0: float,
    scheme,
    dts: Sequence[float],
    n_paths: int = 200,
    seed: int = 42,
    t_end: float = 1.0,
    refine: int = 64,
) -> ConvergenceResult:
    """Endpoint RMS error against the closed-form solution on a fine grid.

    The fine grid step is ``min(dts) / refine``; coarse increments are sums of
    fine ones, so every scheme sees the same Brownian path as the reference.
    """
    scheme = Scheme.parse(scheme)
    dts = sorted((float(d) for d in dts), reverse=True)
    if len(dts) < 2:
        raise ValueError("need at least two step sizes")
    if refine < 10:
        raise ValueError("reference grid must be at least 10x finer than every scheme step")
    fine_dt = dts[-1] / refine
    fine = SimGrid.from_horizon(t_end, fine_dt)
    dWf = wiener_increment_block(seed, range(n_paths), fine)
    ref = reference_states(p, x0, dWf, fine_dt)
    if np.any(ref <= EPS_ABS):
        raise AbsorptionError("reference solution reached the absorbing level")
    ref_end = ref[:, -1]
    del ref

    errors = []
    for dt in dts:
        m = round(dt / fine_dt)
        if abs(m * fine_dt - dt) > 1e-12 * dt:
            raise ValueError(f"dt={dt} is not a multiple of the fine step {fine_dt}")
        dWc = dWf.reshape(n_paths, -1, m).sum(axis=2)
        states, absorbed, _ = integrate(p, x0, dWc, dt, scheme)
        if np.any(absorbed >= 0):
            raise AbsorptionError(f"{int((absorbed >= 0).sum())} paths absorbed at dt={dt}")
        errors.append(float(np.sqrt(np.mean((states[:, -1] - ref_end) ** 2))))
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    return ConvergenceResult(scheme, dts, errors, slope, n_paths, fine_dt)


def strong_convergence_order(p, x0, scheme, dts, n_paths=200, seed=42, t_end=1.0) -> float:
    return strong_convergence_study(p, x0, scheme, dts, n_paths, seed, t_end).slope
