"""Pure-Python/NumPy versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np


def tridiag_factor(lower, diag, upper):
    n = len(diag)
    scale = float(np.max(np.abs(diag))) if n else 0.0
    tiny = 1e-300 + 1e-15 * scale
    mult = np.zeros(n)
    piv = np.empty(n)
    piv[0] = diag[0]
    if abs(piv[0]) <= tiny:
        return None
    for i in range(1, n):
        mult[i] = lower[i] / piv[i - 1]
        piv[i] = diag[i] - mult[i] * upper[i - 1]
        if abs(piv[i]) <= tiny:
            return None
    return mult, piv


def tridiag_solve(mult, piv, upper, rhs):
    n = len(piv)
    x = np.array(rhs, dtype=float)
    for i in range(1, n):
        x[i] -= mult[i] * x[i - 1]
    x[n - 1] /= piv[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (x[i] - upper[i] * x[i + 1]) / piv[i]
    return x


def potential_resolvent(v, h, p, tol, max_iter):
    """Vectorised safeguarded Newton; same contract as the compiled kernel."""
    v = np.asarray(v, dtype=float)
    bound = tol * np.maximum(1.0, np.abs(v))
    lo = -np.abs(v) - 1.0
    hi = np.abs(v) + 1.0
    w = v.copy()
    step_old = hi - lo
    todo = np.ones(v.shape, dtype=bool)
    worst = 0
    for it in range(max_iter + 1):
        wp = w ** (p - 1)
        g = (1.0 - h) * w + h * wp * w - v
        todo &= np.abs(g) > bound
        if not todo.any():
            return w, worst
        if it == max_iter:
            return w, -1
        worst = it + 1
        hi = np.where(todo & (g > 0), w, hi)
        lo = np.where(todo & (g <= 0), w, lo)
        wn = w - g / ((1.0 - h) + p * h * wp)
        # bisect when Newton leaves the bracket or fails to halve the step
        newton_ok = (wn > lo) & (wn < hi) & (2.0 * np.abs(wn - w) <= step_old)
        wn = np.where(newton_ok, wn, 0.5 * (lo + hi))
        step_old = np.where(todo, np.abs(wn - w), step_old)
        w = np.where(todo, wn, w)
    return w, -1
