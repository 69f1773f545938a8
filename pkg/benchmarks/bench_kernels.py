"""Compare the compiled and pure-Python path kernels.

    python benchmarks/bench_kernels.py [--paths 256] [--steps 20000] [--repeat 5]

Both backends get the same increments; the script also checks that their
outputs are bit-identical.
"""
import argparse
import time

import numpy as np

from stochlogistic import engine
from stochlogistic.model import ModelParams


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--paths", type=int, default=256)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    p = ModelParams(1.5, 1.0, 0.25)
    dt = 1e-3
    dW = np.random.default_rng(0).standard_normal((args.paths, args.steps)) * np.sqrt(dt)
    steps = args.paths * args.steps
    print(f"{args.paths} paths x {args.steps} steps, best of {args.repeat}")

    results = {}
    backends = ["python"] + (["cython"] if engine._compiled is not None else [])
    for name in backends:
        engine.set_backend(name)
        for scheme in ("euler_maruyama", "milstein"):
            sec, out = best_of(lambda: engine.integrate(p, 2.3, dW, dt, scheme), args.repeat)
            results[name, scheme] = (sec, out)
            print(f"  {name:6s} {scheme:15s} {sec * 1e3:9.1f} ms  {steps / sec / 1e6:8.1f} Msteps/s")
    if engine._compiled is None:
        print("compiled extension not built; only the Python backend was timed")
        return
    engine.set_backend("cython")
    for scheme in ("euler_maruyama", "milstein"):
        py, cy = results["python", scheme], results["cython", scheme]
        same = all(np.array_equal(u, v) for u, v in zip(py[1], cy[1]))
        print(f"  {scheme}: speedup {py[0] / cy[0]:.1f}x, identical output: {same}")


if __name__ == "__main__":
    main()
