"""Pointwise potential ``F(v) = v - v**p`` (odd ``p >= 3``), its resolvent and
the two semilinear additive steps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .assembly import SparseOperator
from .errors import NewtonFailed
from .schemes import DEFAULT_SOLVER, SolverSettings, State, additive_map

NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class Potential:
    """``F(v) = v - v**p``.

    ``M_F = 1`` since ``(F v - F w, v - w) <= |v - w|^2``.  ``F`` is only
    Lipschitz on bounded sets; ``working_range`` bounds the states for
    :attr:`L_F_estimate`.
    """

    p: int = 3
    working_range: float = 1.5
    active: bool = True

    def __post_init__(self):
        if self.active and (self.p < 3 or self.p % 2 == 0):
            raise ValueError(f"p must be an odd integer >= 3, got {self.p}")

    @property
    def M_F(self) -> float:
        return 1.0 if self.active else 0.0

    @property
    def L_F_estimate(self) -> float:
        if not self.active:
            return 0.0
        r = self.working_range
        # sup |1 - p w^{p-1}| over |w| <= r
        return max(1.0, self.p * r ** (self.p - 1) - 1.0)


ZERO_POTENTIAL = Potential(p=3, active=False)


def eval_F(v: np.ndarray, potential: Potential) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not potential.active:
        return np.zeros_like(v)
    return v - v ** potential.p


def resolve_F(v: np.ndarray, h: float, potential: Potential) -> np.ndarray:
    """Solve ``w - h F(w) = v`` pointwise.

    Safeguarded Newton from ``w = v`` on ``(1 - h) w + h w**p - v`` with
    bracket ``[-|v| - 1, |v| + 1]``; a bisection step replaces any Newton
    step that leaves the bracket or does not halve the previous step.  The
    residual is driven below ``1e-13 * max(1, |v|)``.

    Raises
    ------
    NewtonFailed
        If some point needs more than 50 iterations.
    """
    v = np.asarray(v, dtype=float)
    if not potential.active or h == 0.0:
        return v.copy()
    if not 0.0 < h * potential.M_F < 1.0:
        raise ValueError(f"nonlinear resolvent needs 0 <= h*M[F] < 1, got h={h:g}")
    flat = np.ascontiguousarray(v.ravel())
    w, iters = kernels.potential_resolvent(flat, float(h), int(potential.p), NEWTON_TOL, NEWTON_MAX_ITER)
    if iters < 0:
        raise NewtonFailed(f"pointwise Newton did not converge in {NEWTON_MAX_ITER} iterations")
    return np.asarray(w).reshape(v.shape)


def step_semilinear_implicitF(state: State, h: float, parts: Sequence[SparseOperator],
                              potential: Potential, solver: SolverSettings = DEFAULT_SOLVER) -> State:
    """Additive linear step followed by the nonlinear resolvent."""
    u = additive_map(state.u, h, parts, solver)
    return State(resolve_F(u, h, potential), state.t + h)


def step_semilinear_explicitF(state: State, h: float, parts: Sequence[SparseOperator],
                              potential: Potential, solver: SolverSettings = DEFAULT_SOLVER) -> State:
    """Explicit increment ``u + h F(u)`` followed by the additive linear step."""
    u = state.u + h * eval_F(state.u, potential)
    return State(additive_map(u, h, parts, solver), state.t + h)
