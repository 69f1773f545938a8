"""Run configuration and the CSV / JSON emitters."""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import EPS_ABS, Path, Scheme, SimGrid
from .ensemble import EnsembleConfig, EnsembleStats
from .model import ModelParams, band_endpoints, classify_regime, stationary_mean

SCHEMA_VERSION = 1
CSV_HEADER = "t,x,path_index"
OUTPUT_DIR_ENV = "STOCHLOGISTIC_OUTPUT_DIR"

FORMATS = ("csv", "json", "text")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    a: Optional[float] = None
    b: Optional[float] = None
    sigma: Optional[float] = None
    x0: Optional[float] = None
    dt: float = 1e-3
    t_end: float = 50.0
    n_paths: int = 1
    seed: int = 42
    scheme: str = "milstein"
    burn_in: Optional[float] = None
    threshold: float = 1e-6
    eps_abs: float = EPS_ABS
    record_every: int = 1
    format: Optional[str] = None
    out: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}")
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION}
        d.update(dataclasses.asdict(self))
        return d

    def merged(self, **overrides) -> "RunConfig":
        """Copy with every non-None override applied."""
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def _require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError(f"missing required setting(s): {', '.join(missing)}")

    def model_params(self) -> ModelParams:
        self._require("a", "b", "sigma")
        try:
            return ModelParams(self.a, self.b, self.sigma)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def sim_grid(self) -> SimGrid:
        try:
            return SimGrid.from_horizon(self.t_end, self.dt)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self, need_x0=True) -> None:
        self.model_params()
        self.sim_grid()
        if need_x0:
            self._require("x0")
            if not self.x0 > 0:
                raise ConfigError(f"x0 must be positive, got {self.x0}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 0:
            raise ConfigError(f"n_paths must be a non-negative integer, got {self.n_paths}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError(f"record_every must be a positive integer, got {self.record_every}")
        try:
            scheme = Scheme.parse(self.scheme)
        except ValueError as exc:
            raise ConfigError(f"unknown scheme {self.scheme!r}") from exc
        if scheme is Scheme.REFERENCE:
            raise ConfigError("scheme 'reference' cannot be used for simulation runs")
        if self.format is not None and self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}; choose from {', '.join(FORMATS)}")

    def ensemble_config(self) -> EnsembleConfig:
        self.validate()
        if self.n_paths < 1:
            raise ConfigError("ensembles need at least one path")
        try:
            return EnsembleConfig(
                params=self.model_params(),
                x0=self.x0,
                grid=self.sim_grid(),
                n_paths=int(self.n_paths),
                master_seed=int(self.seed),
                scheme=Scheme.parse(self.scheme),
                burn_in=self.burn_in,
                extinction_threshold=self.threshold,
                eps_abs=self.eps_abs,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def default_output_dir() -> Optional[str]:
    return os.environ.get(OUTPUT_DIR_ENV) or None


def clean(value):
    """JSON-safe copy: numpy to python, non-finite floats to None."""
    if isinstance(value, dict):
        return {k: clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return clean(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=1, allow_nan=False) + "\n"


def params_block(p: ModelParams) -> dict:
    band = band_endpoints(p)
    return {
        "a": p.a,
        "b": p.b,
        "sigma": p.sigma,
        "xstar": p.xstar,
        "x1": band.x1,
        "x2": band.x2,
        "regime": classify_regime(p).value,
        "sigma_sq": p.sigma_sq,
        "two_a": 2.0 * p.a,
    }


def trajectory_metadata(p: ModelParams, grid: SimGrid, seed: int, scheme, record_every: int = 1, **extra) -> dict:
    meta = {
        "params": params_block(p),
        "seed": int(seed),
        "scheme": Scheme.parse(scheme).value,
        "dt": grid.dt,
        "n_steps": grid.n_steps,
        "t_end": grid.T,
        "record_every": int(record_every),
    }
    meta.update(extra)
    return meta


def trajectories_csv(paths, record_every: int = 1) -> str:
    """CSV text with header ``t,x,path_index``; floats use shortest round-trip repr."""
    lines = [CSV_HEADER]
    for path in paths:
        idx = str(path.path_index)
        t = path.times[::record_every].tolist()
        x = path.states[::record_every].tolist()
        lines.extend(f"{ti!r},{xi!r},{idx}" for ti, xi in zip(t, x))
    return "\n".join(lines) + "\n"


def path_record(path: Path, record_every: int = 1, **extra) -> dict:
    rec = {
        "path_index": path.path_index,
        "x0": path.x0,
        "absorbed_at": path.absorbed_at,
        "overshoot": path.overshoot,
    }
    rec.update(extra)
    rec["t"] = path.times[::record_every]
    rec["x"] = path.states[::record_every]
    return rec


def trajectories_json(paths, metadata: dict, record_every: int = 1, extras=None) -> str:
    extras = extras or [{} for _ in paths]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "trajectories",
        "metadata": metadata,
        "paths": [path_record(p, record_every, **e) for p, e in zip(paths, extras)],
    }
    return dumps(doc)


def _quantiles(values):
    if len(values) == 0:
        return None
    qs = (0.05, 0.25, 0.5, 0.75, 0.95)
    return {f"q{int(q * 100):02d}": float(np.quantile(values, q)) for q in qs}


def ensemble_document(stats: EnsembleStats, run: RunConfig) -> dict:
    cfg = stats.config
    step = int(run.record_every)
    try:
        predicted = stationary_mean(cfg.params)
    except ValueError:
        predicted = None
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "ensemble",
        "config": run.to_dict(),
        "metadata": trajectory_metadata(cfg.params, cfg.grid, cfg.master_seed, cfg.scheme, step,
                                        burn_in=cfg.burn_in, n_paths=cfg.n_paths),
        "stats": {
            "band_occupancy": stats.band_occupancy,
            "band_occupancy_se": float(stats.occupancy_per_path.std(ddof=1) / math.sqrt(cfg.n_paths))
            if cfg.n_paths > 1 else None,
            "extinct_fraction": stats.extinct_fraction,
            "extinct_fraction_se": math.sqrt(stats.extinct_fraction * (1 - stats.extinct_fraction) / cfg.n_paths),
            "extinction_threshold": cfg.extinction_threshold,
            "first_passage_quantiles": _quantiles(stats.first_passage_times),
            "first_passage_times": stats.first_passage_times,
            "time_avg_state": stats.time_avg_state,
            "time_avg_state_se": float(stats.time_avg_per_path.std(ddof=1) / math.sqrt(cfg.n_paths))
            if cfg.n_paths > 1 else None,
            "time_avg_in_band_fraction": stats.time_avg_in_band_fraction,
            "overshoot_fraction": stats.overshoot_fraction,
            "stationary_mean_predicted": predicted,
            "dynkin": [dataclasses.asdict(d) for d in stats.dynkin],
            "times": stats.times[::step],
            "mean_traj": stats.mean_traj[::step],
            "var_traj": stats.var_traj[::step],
            "se_traj": stats.se_traj[::step],
            "mean_v_traj": stats.mean_v_traj[::step],
            "se_v_traj": stats.se_v_traj[::step],
        },
    }
