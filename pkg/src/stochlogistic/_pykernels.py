"""Numpy fallback for the compiled path integrator.

Vectorised across paths, looped over time. The arithmetic is written in the
same order as ``_kernels.pyx`` so both backends give bit-identical states.
"""
import numpy as np


def integrate_block(x0, dW, a, b, sigma, dt, milstein, half_s2, eps_abs):
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    dW = np.asarray(dW, dtype=np.float64)
    n_paths, n_steps = dW.shape
    if x0.shape[0] != n_paths:
        raise ValueError("x0 and dW disagree on the number of paths")

    out = np.zeros((n_paths, n_steps + 1), dtype=np.float64)
    absorbed = np.full(n_paths, -1, dtype=np.intp)
    overshoot = np.zeros(n_paths, dtype=np.bool_)

    alive = x0 > 0.0
    absorbed[~alive] = 0
    x = np.where(alive, x0, 0.0)
    out[:, 0] = x
    for k in range(n_steps):
        dw = dW[:, k]
        xn = x + (a * x - b * x * x) * dt + sigma * x * dw
        if milstein:
            xn = xn + half_s2 * x * (dw * dw - dt)
        hit = alive & (xn <= eps_abs)
        if hit.any():
            overshoot |= hit & (xn < 0.0)
            absorbed[hit] = k + 1
            alive &= ~hit
        x = np.where(alive, xn, 0.0)
        out[:, k + 1] = x
    return out, absorbed, overshoot
