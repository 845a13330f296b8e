# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  ``_fallback`` holds numpy versions with the same signatures."""
import numpy as np

from libc.math cimport cos, sin, floor, M_PI


cdef inline double _trig(const double[:, ::1] terms, double c0, double x1, double x2) noexcept nogil:
    cdef Py_ssize_t i
    cdef double arg, out = c0
    for i in range(terms.shape[0]):
        arg = 2.0 * M_PI * (terms[i, 0] * x1 + terms[i, 1] * x2)
        out += terms[i, 2] * cos(arg) + terms[i, 3] * sin(arg)
    return out


def birkhoff_chains(
    const double[:, ::1] A,
    const double[:, ::1] p1_terms, double p1_const,
    const double[:, ::1] p2_terms, double p2_const,
    const double[:, ::1] g_terms, double g_const,
    double t,
    const double[:, ::1] x0,
    Py_ssize_t n_steps,
    Py_ssize_t burn_in,
):
    """Per-chain sums of ``g`` along orbits of ``x -> A x + t P(x) mod 1``.

    Row ``c`` of ``x0`` starts chain ``c``; the first ``burn_in`` iterates of
    each chain are discarded.  Sums use Kahan compensation.
    """
    cdef Py_ssize_t n_chains = x0.shape[0]
    cdef double[::1] sums = np.zeros(n_chains)
    cdef Py_ssize_t c, k
    cdef double x1, x2, y1, y2, s, comp, val, tmp
    with nogil:
        for c in range(n_chains):
            x1 = x0[c, 0]
            x2 = x0[c, 1]
            s = 0.0
            comp = 0.0
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
                x1 = y1 - floor(y1)
                x2 = y2 - floor(y2)
            sums[c] = s
    return np.asarray(sums)
