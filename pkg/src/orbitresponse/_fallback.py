"""Numpy implementations of the compiled kernels, vectorised across chains."""
import numpy as np


def _trig(terms, c0, x1, x2):
    out = np.full_like(x1, c0)
    for k1, k2, a, b in terms:
        arg = 2.0 * np.pi * (k1 * x1 + k2 * x2)
        out += a * np.cos(arg) + b * np.sin(arg)
    return out


def birkhoff_chains(A, p1_terms, p1_const, p2_terms, p2_const, g_terms, g_const, t, x0, n_steps, burn_in):
    x1 = np.array(x0[:, 0], dtype=float)
    x2 = np.array(x0[:, 1], dtype=float)
    s = np.zeros(len(x1))
    comp = np.zeros(len(x1))
    for k in range(burn_in + n_steps):
        if k >= burn_in:
            val = _trig(g_terms, g_const, x1, x2) - comp
            tmp = s + val
            comp = (tmp - s) - val
            s = tmp
        y1 = A[0, 0] * x1 + A[0, 1] * x2
        y2 = A[1, 0] * x1 + A[1, 1] * x2
        if t != 0.0:
            y1 = y1 + t * _trig(p1_terms, p1_const, x1, x2)
            y2 = y2 + t * _trig(p2_terms, p2_const, x1, x2)
        x1 = y1 - np.floor(y1)
        x2 = y2 - np.floor(y2)
    return s
