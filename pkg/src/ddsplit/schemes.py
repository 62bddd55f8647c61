"""Splitting time steppers ``S_h`` built on the resolvents of the parts.

===================  ===========================================================
kind                 one step
===================  ===========================================================
AdditiveFirstOrder   (1/q) sum_k (I - hq A_k)^{-1} u
DouglasRachford      (I - h A2)^{-1} (I - h A1)^{-1} (u + h^2 A1 A2 u)
PeacemanRachford     (I - h/2 A2)^{-1} (I + h/2 A1) (I - h/2 A1)^{-1} (I + h/2 A2) u
FractionalStepCN     average of the Cayley sweeps k = 1..q and k = q..1
SemilinearImplicitF  (I - hF)^{-1} after the additive step
SemilinearExplicitF  additive step applied to u + h F(u)
===================  ===========================================================
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assembly import SparseOperator, SplitOperator
from .errors import Diverged, StepRestrictionViolated
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL, cached_factor, map_tasks, solve

ADDITIVE = "AdditiveFirstOrder"
DOUGLAS_RACHFORD = "DouglasRachford"
PEACEMAN_RACHFORD = "PeacemanRachford"
FSCN = "FractionalStepCN"
SEMILINEAR_IMPLICIT = "SemilinearImplicitF"
SEMILINEAR_EXPLICIT = "SemilinearExplicitF"
SCHEME_KINDS = (ADDITIVE, DOUGLAS_RACHFORD, PEACEMAN_RACHFORD, FSCN, SEMILINEAR_IMPLICIT, SEMILINEAR_EXPLICIT)
TWO_PART_KINDS = (DOUGLAS_RACHFORD, PEACEMAN_RACHFORD)
SEMILINEAR_KINDS = (SEMILINEAR_IMPLICIT, SEMILINEAR_EXPLICIT)
ORDERS = {ADDITIVE: 1, DOUGLAS_RACHFORD: 1, PEACEMAN_RACHFORD: 2, FSCN: 2,
          SEMILINEAR_IMPLICIT: 1, SEMILINEAR_EXPLICIT: 1}


@dataclass(frozen=True)
class SolverSettings:
    backend: str = "direct"
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def factor(self, op: SparseOperator, tau: float):
        return cached_factor(op, tau, self.backend, self.tol, self.max_iter)


DEFAULT_SOLVER = SolverSettings()


@dataclass(frozen=True)
class SchemeConfig:
    kind: str
    h: float
    m: int
    strict_restriction: bool = True
    part_order: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.m < 0:
            raise ValueError("m must be non-negative")

    @property
    def T(self) -> float:
        return self.m * self.h


@dataclass
class State:
    u: np.ndarray
    t: float = 0.0


def check_restriction(config: SchemeConfig, M_parts: Sequence[float], M_F: float = 0.0) -> str | None:
    """Evaluate the step restriction of ``config.kind``.

    Returns ``None`` when it holds and a description otherwise.  In strict
    mode a violation raises :class:`StepRestrictionViolated`; in lax mode it
    is reported as a warning.
    """
    if any(m < 0 for m in M_parts) or M_F < 0:
        raise ValueError("shift constants must be non-negative")
    h = config.h
    q = len(M_parts)
    M = max(M_parts, default=0.0)
    problems = []
    if config.kind in (ADDITIVE, SEMILINEAR_IMPLICIT, SEMILINEAR_EXPLICIT):
        if h * q * M > 0.5:
            problems.append(f"h*q*M = {h * q * M:g} > 1/2 (additive stability hypothesis)")
    if config.kind == SEMILINEAR_IMPLICIT and h * M_F > 0.5:
        problems.append(f"h*M[F] = {h * M_F:g} > 1/2 (nonlinear resolvent hypothesis)")
    if config.kind in TWO_PART_KINDS and h * M > 0.5:
        problems.append(f"h*max(M[A1], M[A2]) = {h * M:g} > 1/2 (ADI hypothesis)")
    if config.kind == FSCN and h * M > 1.0:
        problems.append(f"h*M = {h * M:g} > 1 (fractional-step Crank-Nicolson hypothesis)")
    if not problems:
        return None
    msg = f"{config.kind}: " + "; ".join(problems)
    if config.strict_restriction:
        raise StepRestrictionViolated(msg)
    warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return msg


def additive_map(u: np.ndarray, h: float, parts: Sequence[SparseOperator],
                 solver: SolverSettings = DEFAULT_SOLVER) -> np.ndarray:
    """``(1/q) sum_k (I - hq A_k)^{-1} u``; the q solves are independent."""
    q = len(parts)
    factors = [solver.factor(p, h * q) for p in parts]
    pieces = map_tasks(lambda f: solve(f, u), factors, work_size=u.size * q)
    acc = pieces[0].copy()
    for w in pieces[1:]:
        acc += w
    return acc / q


def step_additive(state: State, h: float, parts: Sequence[SparseOperator],
                  solver: SolverSettings = DEFAULT_SOLVER) -> State:
    return State(additive_map(state.u, h, parts, solver), state.t + h)


def step_douglas_rachford(state: State, h: float, A1: SparseOperator, A2: SparseOperator,
                          solver: SolverSettings = DEFAULT_SOLVER) -> State:
    u = state.u
    w = u + h * h * (A1.matrix @ (A2.matrix @ u))
    w = solve(solver.factor(A1, h), w)
    w = solve(solver.factor(A2, h), w)
    return State(w, state.t + h)


def step_peaceman_rachford(state: State, h: float, A1: SparseOperator, A2: SparseOperator,
                           solver: SolverSettings = DEFAULT_SOLVER) -> State:
    half = 0.5 * h
    w = state.u + half * (A2.matrix @ state.u)
    w = solve(solver.factor(A1, half), w)
    w = w + half * (A1.matrix @ w)
    w = solve(solver.factor(A2, half), w)
    return State(w, state.t + h)


def _cayley_sweep(u, half, parts, solver):
    for p in parts:
        u = solve(solver.factor(p, half), u + half * (p.matrix @ u))
    return u


def step_fscn(state: State, h: float, parts: Sequence[SparseOperator],
              solver: SolverSettings = DEFAULT_SOLVER) -> State:
    """Average of the ascending and descending Cayley sweeps with step ``h/2``."""
    half = 0.5 * h
    orders = (list(parts), list(parts)[::-1])
    fwd, bwd = map_tasks(lambda ps: _cayley_sweep(state.u, half, ps, solver), orders,
                         work_size=state.u.size * len(parts))
    return State(0.5 * (fwd + bwd), state.t + h)


@dataclass
class Trajectory:
    final: State
    norms: list[float]
    max_norm: float
    states: list[np.ndarray] | None = field(default=None, repr=False)
    restriction: str | None = None


def _ordered_parts(config: SchemeConfig, parts: Sequence[SparseOperator]) -> list[SparseOperator]:
    parts = list(parts)
    if config.part_order is not None:
        if sorted(config.part_order) != list(range(len(parts))):
            raise ValueError(f"part_order {config.part_order} is not a permutation of {len(parts)} parts")
        parts = [parts[i] for i in config.part_order]
    if config.kind in TWO_PART_KINDS and len(parts) != 2:
        raise ValueError(f"{config.kind} needs exactly two parts, got {len(parts)}")
    return parts


def integrate(config: SchemeConfig, split_op: SplitOperator | Sequence[SparseOperator],
              eta: np.ndarray, nonlinearity=None, solver: SolverSettings = DEFAULT_SOLVER,
              store_trajectory: bool = False) -> Trajectory:
    """Apply ``m`` steps of the configured scheme to ``eta``.

    ``norms`` holds the Euclidean norm of every iterate including ``eta``.

    Raises
    ------
    StepRestrictionViolated
        In strict mode when the scheme's step restriction fails.
    Diverged
        If an iterate has non-finite entries.
    """
    from . import nonlinear

    parts = split_op.parts if isinstance(split_op, SplitOperator) else tuple(split_op)
    parts = _ordered_parts(config, parts)
    if config.kind in SEMILINEAR_KINDS and nonlinearity is None:
        nonlinearity = nonlinear.ZERO_POTENTIAL
    M_F = nonlinearity.M_F if nonlinearity is not None else 0.0
    note = check_restriction(config, [p.shift for p in parts], M_F)

    h = config.h
    kind = config.kind
    if kind == ADDITIVE:
        step = lambda s: step_additive(s, h, parts, solver)  # noqa: E731
    elif kind == DOUGLAS_RACHFORD:
        step = lambda s: step_douglas_rachford(s, h, parts[0], parts[1], solver)  # noqa: E731
    elif kind == PEACEMAN_RACHFORD:
        step = lambda s: step_peaceman_rachford(s, h, parts[0], parts[1], solver)  # noqa: E731
    elif kind == FSCN:
        step = lambda s: step_fscn(s, h, parts, solver)  # noqa: E731
    elif kind == SEMILINEAR_IMPLICIT:
        step = lambda s: nonlinear.step_semilinear_implicitF(s, h, parts, nonlinearity, solver)  # noqa: E731
    else:
        step = lambda s: nonlinear.step_semilinear_explicitF(s, h, parts, nonlinearity, solver)  # noqa: E731

    state = State(np.array(eta, dtype=float), 0.0)
    norms = [float(np.linalg.norm(state.u))]
    states = [state.u.copy()] if store_trajectory else None
    for j in range(config.m):
        state = step(state)
        if not np.all(np.isfinite(state.u)):
            raise Diverged(f"{kind}: non-finite iterate at step {j + 1} (t = {state.t:g})")
        norms.append(float(np.linalg.norm(state.u)))
        if store_trajectory:
            states.append(state.u.copy())
    return Trajectory(state, norms, max(norms), states, note)
