"""Command-line interface.

    stochlogistic analyze --a 1.5 --b 1 --sigma 0.25
    stochlogistic simulate --a 1.5 --b 1 --sigma 0.25 --x0 2.3 --paths 10 --out run.csv
    stochlogistic ensemble --config fig5.json --paths 1000 --out stats.json
    stochlogistic figures 1 --out data/
    stochlogistic verify signs dynkin
    stochlogistic convergence --paths 200

Settings resolve as: command-line flag, then ``--config`` file, then
defaults. ``STOCHLOGISTIC_OUTPUT_DIR`` sets where output goes when ``--out``
is not given; otherwise it is printed.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import engine
from .config import (
    ConfigError,
    RunConfig,
    default_output_dir,
    dumps,
    ensemble_document,
    params_block,
    trajectories_csv,
    trajectories_json,
    trajectory_metadata,
)
from .ensemble import AbsorptionError, InsufficientPathsError, run_ensemble, strong_convergence_study
from .figures import CaptionMismatch, check_caption, figure_paths, get_figure
from .verify import CONVERGENCE_DTS, SUITES


class CLIError(Exception):
    pass


def _add_model_flags(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--a", type=float, help="growth rate a > 0")
    p.add_argument("--b", type=float, help="crowding coefficient b > 0")
    p.add_argument("--sigma", type=float, help="noise intensity")


def _add_sim_flags(p):
    p.add_argument("--x0", type=float, help="initial population")
    p.add_argument("--dt", type=float, help="time step (default 1e-3)")
    p.add_argument("--t-end", dest="t_end", type=float, help="horizon T (default 50)")
    p.add_argument("--paths", dest="n_paths", type=int, help="number of paths")
    p.add_argument("--seed", type=int, help="master seed (default 42)")
    p.add_argument("--scheme", help="milstein (default) or euler_maruyama")
    p.add_argument("--burn-in", dest="burn_in", type=float, help="discarded initial time (default T/2)")
    p.add_argument("--threshold", type=float, help="extinction threshold (default 1e-6)")
    p.add_argument("--every", dest="record_every", type=int, help="keep every k-th grid point in output")
    p.add_argument("--workers", type=int, default=1, help="threads for ensembles; results do not depend on it")


def _add_out_flags(p, formats):
    p.add_argument("--out", help="output file (directory for figures)")
    p.add_argument("--format", choices=formats)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochlogistic", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="band endpoints and regime")
    _add_model_flags(p)
    _add_out_flags(p, ["text", "json"])

    p = sub.add_parser("simulate", help="write trajectories")
    _add_model_flags(p)
    _add_sim_flags(p)
    _add_out_flags(p, ["csv", "json"])

    p = sub.add_parser("ensemble", help="ensemble statistics as JSON")
    _add_model_flags(p)
    _add_sim_flags(p)
    p.add_argument("--checkpoint", dest="checkpoints", type=float, action="append",
                   help="Dynkin residual checkpoint time (repeatable)")
    _add_out_flags(p, ["json"])

    p = sub.add_parser("figures", help="datasets behind the published figures")
    p.add_argument("figure_ids", type=int, nargs="+", metavar="FIGURE", help="1 to 5")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", dest="t_end", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--scheme", default="milstein")
    p.add_argument("--every", dest="record_every", type=int, default=1)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("suites", nargs="*", metavar="SUITE",
                   help=f"any of {', '.join(sorted(SUITES))} (default: all)")
    p.add_argument("--paths", dest="n_paths", type=int, help="override the suite's path count")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here")

    p = sub.add_parser("convergence", help="strong convergence orders of both schemes")
    _add_model_flags(p)
    p.add_argument("--x0", type=float)
    p.add_argument("--t-end", dest="t_end", type=float, default=1.0)
    p.add_argument("--paths", dest="n_paths", type=int, default=200)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="write the JSON report here")
    return parser


def _run_config(args) -> RunConfig:
    base = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    keys = ("a", "b", "sigma", "x0", "dt", "t_end", "n_paths", "seed", "scheme", "burn_in",
            "threshold", "record_every", "format", "out")
    return base.merged(**{k: getattr(args, k, None) for k in keys})


def _emit(text: str, out, default_name: str):
    """Write to ``out``, else to the env output dir, else stdout. Returns the path or None."""
    if out is None:
        outdir = default_output_dir()
        if outdir is None:
            sys.stdout.write(text)
            return None
        out = os.path.join(outdir, default_name)
    try:
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CLIError(f"cannot write {out}: {exc.strerror}") from exc
    return out


def cmd_analyze(args) -> int:
    run = _run_config(args)
    p = run.model_params()
    report = params_block(p)
    if (run.format or "text") == "text":
        lines = [
            f"a = {p.a:g}, b = {p.b:g}, sigma = {p.sigma:g}",
            f"carrying capacity x* = {p.xstar:.2f}",
            f"band [x1, x2] = [{report['x1']:.2f}, {report['x2']:.2f}]",
            f"regime: {report['regime']}",
            f"sigma^2 = {p.sigma_sq:g}, 2a = {2 * p.a:g}, margin 2a - sigma^2 = {2 * p.a - p.sigma_sq:g}",
        ]
        sys.stdout.write("\n".join(lines) + "\n")
        if run.out:
            _emit(dumps(report), run.out, "analyze.json")
    else:
        _emit(dumps(report), run.out, "analyze.json")
    return 0


def cmd_simulate(args) -> int:
    run = _run_config(args)
    run.validate()
    p, grid = run.model_params(), run.sim_grid()
    paths = [
        engine.simulate_path(p, run.x0, grid, run.scheme, engine.NoiseStream(int(run.seed), i), run.eps_abs)
        for i in range(int(run.n_paths))
    ]
    meta = trajectory_metadata(p, grid, run.seed, run.scheme, run.record_every, x0=run.x0, n_paths=len(paths))
    meta["overshoot_paths"] = [q.path_index for q in paths if q.overshoot]
    fmt = run.format or "csv"
    if fmt == "json":
        _emit(trajectories_json(paths, meta, run.record_every), run.out, "simulate.json")
    else:
        written = _emit(trajectories_csv(paths, run.record_every), run.out, "simulate.csv")
        if written is not None:
            _emit(dumps({"schema_version": 1, "kind": "trajectories-metadata", "config": run.to_dict(),
                         "metadata": meta}), os.path.splitext(written)[0] + ".meta.json", "")
    return 0


def cmd_ensemble(args) -> int:
    run = _run_config(args)
    cfg = run.ensemble_config()
    stats = run_ensemble(cfg, args.checkpoints or (), workers=args.workers)
    _emit(dumps(ensemble_document(stats, run)), run.out, "ensemble.json")
    return 0


def cmd_figures(args) -> int:
    outdir = args.out or default_output_dir() or "."
    try:
        grid = engine.SimGrid.from_horizon(args.t_end, args.dt)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    for fid in args.figure_ids:
        try:
            fig = get_figure(fid)
        except ValueError as exc:
            raise CLIError(str(exc)) from exc
        caption = check_caption(fig)
        paths, extras = figure_paths(fig, grid, args.seed, args.scheme)
        meta = trajectory_metadata(fig.params, grid, args.seed, args.scheme, args.record_every,
                                   figure=fig.figure_id, caption_check=caption,
                                   groups=[{"label": g[0], "x0": fig.initial_state(g[1]), "n_paths": g[2]}
                                           for g in fig.groups],
                                   path_groups=[e["group"] for e in extras])
        stem = os.path.join(outdir, f"fig{fig.figure_id}")
        _emit(trajectories_csv(paths, args.record_every), stem + ".csv", "")
        _emit(dumps({"schema_version": 1, "kind": "figure", "metadata": meta}), stem + ".json", "")
        sys.stderr.write(f"figure {fig.figure_id}: {len(paths)} paths -> {stem}.csv\n")
    return 0


def cmd_verify(args) -> int:
    names = args.suites or sorted(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise CLIError(f"unknown suite(s) {', '.join(unknown)}; choose from {', '.join(sorted(SUITES))}")
    checks = []
    for name in names:
        kwargs = {}
        if args.n_paths is not None and name != "signs":
            kwargs["n_paths"] = args.n_paths
        if name != "signs":
            kwargs["seed"] = args.seed
        if name in ("dynkin", "stationary", "extinction"):
            kwargs["workers"] = args.workers
        try:
            checks.extend(SUITES[name](**kwargs))
        except InsufficientPathsError as exc:
            checks.append({"suite": name, "name": "enough surviving paths", "value": str(exc),
                           "tolerance": None, "passed": False})
    passed = all(c["passed"] for c in checks)
    for c in checks:
        sys.stderr.write(f"{'PASS' if c['passed'] else 'FAIL'}  [{c['suite']}] {c['name']}\n")
    report = {"schema_version": 1, "kind": "verify", "passed": passed, "checks": checks}
    _emit(dumps(report), args.out, "verify.json")
    if not passed:
        failed = ", ".join(f"[{c['suite']}] {c['name']}" for c in checks if not c["passed"])
        sys.stderr.write(f"failed: {failed}\n")
    return 0 if passed else 1


def cmd_convergence(args) -> int:
    run = _run_config(args).merged(
        a=args.a if args.a is not None else 1.5,
        b=args.b if args.b is not None else 1.0,
        sigma=args.sigma if args.sigma is not None else 0.25,
    )
    p = run.model_params()
    x0 = run.x0 if run.x0 is not None else 2.3
    results = []
    for scheme in ("euler_maruyama", "milstein"):
        res = strong_convergence_study(p, x0, scheme, CONVERGENCE_DTS, args.n_paths, args.seed, args.t_end)
        results.append({"scheme": scheme, "slope": res.slope, "dts": res.dts, "rms_errors": res.rms_errors,
                        "reference_dt": res.fine_dt})
    doc = {"schema_version": 1, "kind": "convergence", "params": params_block(p), "x0": x0,
           "n_paths": args.n_paths, "seed": args.seed, "t_end": args.t_end, "results": results}
    _emit(dumps(doc), args.out, "convergence.json")
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "figures": cmd_figures,
    "verify": cmd_verify,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CLIError, CaptionMismatch, InsufficientPathsError, AbsorptionError) as exc:
        sys.stderr.write(f"stochlogistic {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
