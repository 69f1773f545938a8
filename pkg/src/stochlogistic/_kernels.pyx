# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled path integrator. Must stay bit-identical to ``_pykernels``."""

import numpy as np


def integrate_block(const double[::1] x0, const double[:, ::1] dW, double a, double b,
                    double sigma, double dt, bint milstein, double half_s2,
                    double eps_abs):
    cdef Py_ssize_t n_paths = dW.shape[0]
    cdef Py_ssize_t n_steps = dW.shape[1]
    if x0.shape[0] != n_paths:
        raise ValueError("x0 and dW disagree on the number of paths")

    out_arr = np.zeros((n_paths, n_steps + 1), dtype=np.float64)
    absorbed_arr = np.full(n_paths, -1, dtype=np.intp)
    overshoot_arr = np.zeros(n_paths, dtype=np.bool_)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t[::1] absorbed = absorbed_arr
    cdef unsigned char[::1] overshoot = overshoot_arr.view(np.uint8)

    cdef Py_ssize_t i, k
    cdef double x, xn, dw
    with nogil:
        for i in range(n_paths):
            x = x0[i]
            if x <= 0.0:
                absorbed[i] = 0
                continue
            out[i, 0] = x
            for k in range(n_steps):
                dw = dW[i, k]
                xn = x + (a * x - b * x * x) * dt + sigma * x * dw
                if milstein:
                    xn = xn + half_s2 * x * (dw * dw - dt)
                if xn <= eps_abs:
                    if xn < 0.0:
                        overshoot[i] = 1
                    absorbed[i] = k + 1
                    break
                out[i, k + 1] = xn
                x = xn
    return out_arr, absorbed_arr, overshoot_arr
