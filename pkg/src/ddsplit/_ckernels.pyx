# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: tridiagonal elimination and the pointwise potential resolvent."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


def tridiag_factor(const double[::1] lower, const double[::1] diag, const double[::1] upper):
    """LU factors ``(mult, pivots)`` of a tridiagonal matrix without pivoting.

    ``lower[i]`` couples row ``i`` to ``i - 1`` and ``upper[i]`` row ``i`` to
    ``i + 1``.  Returns ``None`` on a vanishing pivot.
    """
    cdef Py_ssize_t n = diag.shape[0], i
    cdef double scale = 0.0
    mult_arr = np.zeros(n)
    piv_arr = np.empty(n)
    cdef double[::1] mult = mult_arr
    cdef double[::1] piv = piv_arr
    for i in range(n):
        scale = max(scale, fabs(diag[i]))
    piv[0] = diag[0]
    if fabs(piv[0]) <= 1e-300 + 1e-15 * scale:
        return None
    for i in range(1, n):
        mult[i] = lower[i] / piv[i - 1]
        piv[i] = diag[i] - mult[i] * upper[i - 1]
        if fabs(piv[i]) <= 1e-300 + 1e-15 * scale:
            return None
    return mult_arr, piv_arr


def tridiag_solve(const double[::1] mult, const double[::1] piv, const double[::1] upper,
                  const double[::1] rhs):
    cdef Py_ssize_t n = piv.shape[0], i
    out_arr = np.empty(n)
    cdef double[::1] x = out_arr
    x[0] = rhs[0]
    for i in range(1, n):
        x[i] = rhs[i] - mult[i] * x[i - 1]
    x[n - 1] = x[n - 1] / piv[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (x[i] - upper[i] * x[i + 1]) / piv[i]
    return out_arr


def potential_resolvent(const double[::1] v, double h, int p, double tol, int max_iter):
    """Solve ``(1 - h) w + h w**p = v`` pointwise by safeguarded Newton.

    Returns ``(w, iterations)``; ``iterations`` is -1 if some point failed.
    """
    cdef Py_ssize_t n = v.shape[0], i
    cdef int it, worst = 0
    cdef double vi, w, lo, hi, g, dg, wn, wp, bound, step_old
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        vi = v[i]
        bound = tol * max(1.0, fabs(vi))
        lo = -fabs(vi) - 1.0
        hi = fabs(vi) + 1.0
        w = vi
        step_old = hi - lo
        it = 0
        while True:
            wp = pow(w, p - 1)
            g = (1.0 - h) * w + h * wp * w - vi
            if fabs(g) <= bound:
                break
            if it >= max_iter:
                return out_arr, -1
            if g > 0.0:
                hi = w
            else:
                lo = w
            dg = (1.0 - h) + p * h * wp
            wn = w - g / dg
            # bisect when Newton leaves the bracket or fails to halve the step
            if not (lo < wn < hi) or 2.0 * fabs(wn - w) > step_old:
                wn = 0.5 * (lo + hi)
            step_old = fabs(wn - w)
            w = wn
            it += 1
        out[i] = w
        if it > worst:
            worst = it
    return out_arr, worst
