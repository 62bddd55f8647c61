"""Resolvent solves ``w = (I - tau A)^{-1} r`` exploiting subdomain structure.

Rows outside ``active_nodes`` are zero, so ``w`` equals ``r`` there.  The
active rows split into connected components of the matrix graph; each
component is factorised once and solved independently, with the passive
neighbours moved to the right-hand side.  Tridiagonal components go through
the banded elimination kernel, the rest through sparse LU or, on request,
BiCGSTAB.
"""

from __future__ import annotations

import os
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from . import kernels
from .assembly import SparseOperator
from .errors import NoConvergence, SingularSystem, StepRestrictionViolated

BACKENDS = ("direct", "iterative")
DEFAULT_TOL = 1e-11
DEFAULT_MAX_ITER = 10000
# below this many unknowns a thread pool costs more than it saves
PARALLEL_MIN_SIZE = 20000


def worker_count() -> int:
    """Worker cap: ``os.cpu_count()`` limited by ``DDSPLIT_THREADS``."""
    n = os.cpu_count() or 1
    env = os.environ.get("DDSPLIT_THREADS")
    if env:
        n = min(n, max(1, int(env)))
    return n


def map_tasks(fn, items, work_size: int = 0):
    """``list(map(fn, items))``, threaded when the work is large enough."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1 or work_size < PARALLEL_MIN_SIZE:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class _Tridiagonal:
    def __init__(self, m: sp.csr_matrix):
        lower = np.zeros(m.shape[0])
        lower[1:] = m.diagonal(-1)
        upper = np.zeros(m.shape[0])
        upper[:-1] = m.diagonal(1)
        diag = np.ascontiguousarray(m.diagonal())
        factors = kernels.tridiag_factor(lower, diag, upper)
        if factors is None:
            raise SingularSystem("zero pivot in banded elimination")
        self.mult, self.piv = factors
        self.upper = upper

    def __call__(self, r):
        return kernels.tridiag_solve(self.mult, self.piv, self.upper, np.ascontiguousarray(r))


class _SparseLU:
    def __init__(self, m: sp.csr_matrix):
        try:
            self.lu = spla.splu(m.tocsc())
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from exc

    def __call__(self, r):
        return self.lu.solve(r)


class _Krylov:
    RESTARTS = 5

    def __init__(self, m: sp.csr_matrix, tol: float, max_iter: int):
        self.m = m
        self.tol = tol
        self.max_iter = max_iter
        d = m.diagonal()
        if np.any(d == 0):
            raise SingularSystem("zero diagonal entry, Jacobi preconditioner undefined")
        self.precond = spla.LinearOperator(m.shape, matvec=lambda x: x / d)

    def __call__(self, r):
        if not np.any(r):
            return np.zeros_like(r)
        target = self.tol * np.linalg.norm(r)
        x = None
        used = 0
        # restart when the recursively updated residual drifted from the true one
        for _ in range(self.RESTARTS):
            x, info = spla.bicgstab(self.m, r, x0=x, rtol=self.tol, atol=0.0,
                                    maxiter=self.max_iter - used, M=self.precond)
            if info > 0:
                used += info
            elif info < 0:
                raise NoConvergence(f"BiCGSTAB breakdown (info={info})")
            if np.linalg.norm(r - self.m @ x) <= target:
                return x
            if used >= self.max_iter:
                break
        raise NoConvergence(f"BiCGSTAB did not reach relative residual {self.tol:g} in {self.max_iter} iterations")


@dataclass(frozen=True, eq=False)
class _Component:
    nodes: np.ndarray
    coupling: sp.csr_matrix | None
    solve: object


@dataclass(frozen=True, eq=False)
class ResolventFactor:
    """Factorised ``I - tau A`` for one operator and step scale."""

    tau: float
    op: SparseOperator
    passive: np.ndarray
    components: tuple[_Component, ...]
    backend: str

    @property
    def size(self) -> int:
        return self.op.size


def _is_tridiagonal(m: sp.csr_matrix) -> bool:
    coo = m.tocoo()
    return bool(np.all(np.abs(coo.row - coo.col) <= 1))


def factorize(op: SparseOperator, tau: float, backend: str = "direct",
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ResolventFactor:
    """Factorise ``I - tau * op`` component by component.

    Raises
    ------
    StepRestrictionViolated
        If ``tau * op.shift >= 1`` (the resolvent is not guaranteed to exist).
    SingularSystem
        If elimination breaks down.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown solver backend {backend!r}")
    tau = float(tau)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau * op.shift >= 1.0:
        raise StepRestrictionViolated(
            f"resolvent of {op.label or 'operator'} needs tau*M < 1, got {tau:g}*{op.shift:g}"
        )
    n = op.size
    active = np.asarray(op.active_nodes, dtype=np.intp)
    is_passive = np.ones(n, dtype=bool)
    is_passive[active] = False
    passive = np.flatnonzero(is_passive)
    if active.size == 0 or tau == 0.0:
        return ResolventFactor(tau, op, np.arange(n), (), backend)

    a_act = op.matrix[active]
    a_aa = a_act[:, active]
    n_comp, labels = connected_components(a_aa, directed=True, connection="weak")

    def build(c):
        local = np.flatnonzero(labels == c)
        nodes = active[local]
        m = sp.identity(local.size, format="csr") - tau * a_aa[local][:, local]
        m = sp.csr_matrix(m)
        coupling = None
        if passive.size:
            b = tau * a_act[local][:, passive]
            b.eliminate_zeros()
            if b.nnz:
                coupling = sp.csr_matrix(b)
        if backend == "iterative":
            solve = _Krylov(m, tol, max_iter)
        elif _is_tridiagonal(m):
            try:
                solve = _Tridiagonal(m)
            except SingularSystem:
                solve = _SparseLU(m)
        else:
            solve = _SparseLU(m)
        return _Component(nodes, coupling, solve)

    comps = map_tasks(build, range(n_comp), work_size=active.size)
    return ResolventFactor(tau, op, passive, tuple(comps), backend)


def solve(factor: ResolventFactor, rhs: np.ndarray) -> np.ndarray:
    """Apply ``(I - tau A)^{-1}``; passive entries are copied from ``rhs``."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (factor.size,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({factor.size},)")
    out = rhs.copy()
    if not factor.components:
        return out
    rp = rhs[factor.passive] if factor.passive.size else None

    def run(comp):
        r = rhs[comp.nodes]
        if comp.coupling is not None:
            r = r + comp.coupling @ rp
        return comp.solve(r)

    results = map_tasks(run, factor.components, work_size=factor.size)
    for comp, w in zip(factor.components, results):
        out[comp.nodes] = w
    return out


def residual(factor: ResolventFactor, rhs: np.ndarray, w: np.ndarray) -> float:
    """``||(I - tau A) w - rhs||_inf``."""
    return float(np.max(np.abs(w - factor.tau * (factor.op.matrix @ w) - rhs), initial=0.0))


_CACHE: "weakref.WeakKeyDictionary[SparseOperator, dict]" = weakref.WeakKeyDictionary()


def cached_factor(op: SparseOperator, tau: float, backend: str = "direct",
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ResolventFactor:
    """Factor cached per operator identity and exact ``tau`` bits."""
    per_op = _CACHE.setdefault(op, {})
    key = (float(tau).hex(), backend, tol, max_iter)
    if key not in per_op:
        per_op[key] = factorize(op, tau, backend, tol, max_iter)
    return per_op[key]
