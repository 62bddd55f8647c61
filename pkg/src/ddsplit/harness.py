"""Reference solutions, error norms, observed orders and the experiment driver."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .assembly import SparseOperator, SplitOperator, assemble_split
from .config import ExperimentConfig
from .domain import Grid, build_grid, coefficient_preset, initial_data, sample_coefficients
from .errors import AccuracyNotReached, DegenerateErrors, TooLargeForDense
from .nonlinear import ZERO_POTENTIAL, Potential, eval_F
from .partition import Partition, build_partition
from .schemes import ORDERS, SEMILINEAR_KINDS, SchemeConfig, integrate

DENSE_LIMIT = 4096
CSV_HEADER = ["scheme", "q", "delta", "h", "m", "error", "order_running", "walltime_s"]
# reference error must stay this far below the smallest measured error
REFERENCE_MARGIN = 100.0


@dataclass
class ReferenceSolution:
    u_ref: np.ndarray
    method: str
    accuracy: float
    T: float


def _dense(A) -> np.ndarray:
    m = A.matrix if isinstance(A, SparseOperator) else A
    n = m.shape[0]
    if n > DENSE_LIMIT:
        raise TooLargeForDense(f"{n} nodes exceed the dense limit {DENSE_LIMIT}")
    return m.toarray() if hasattr(m, "toarray") else np.asarray(m, dtype=float)


def reference_linear(A_full, eta: np.ndarray, T: float, weights: np.ndarray | None = None) -> ReferenceSolution:
    """``exp(T A) eta`` by dense scaling and squaring.

    The accuracy estimate is the distance to ``exp(T/2 A)`` applied twice,
    measured in the weighted L2 norm.
    """
    a = _dense(A_full)
    eta = np.asarray(eta, dtype=float)
    u = scipy.linalg.expm(T * a) @ eta
    half = scipy.linalg.expm(0.5 * T * a)
    u2 = half @ (half @ eta)
    acc = _l2(u - u2, weights)
    return ReferenceSolution(u, "dense-expm", acc, T)


def _l2(d: np.ndarray, weights=None) -> float:
    if weights is None:
        return float(np.linalg.norm(d))
    return float(np.sqrt(np.sum(d * d * weights)))


def _strang(expm_half: np.ndarray, eta: np.ndarray, n_steps: int, h: float, potential: Potential):
    full = expm_half @ expm_half
    u = expm_half @ eta
    for j in range(n_steps):
        # explicit midpoint for the pointwise ODE u' = F(u)
        u = u + h * eval_F(u + 0.5 * h * eval_F(u, potential), potential)
        u = (full @ u) if j < n_steps - 1 else (expm_half @ u)
    return u


def reference_semilinear(A_full, potential: Potential | None, eta: np.ndarray, T: float,
                         h_min: float | None = None, h_ref: float | None = None,
                         weights: np.ndarray | None = None,
                         required: float | None = None) -> ReferenceSolution:
    """Fine-step Strang composition: exact linear half steps, midpoint nonlinear step.

    The step is ``h_ref`` (default ``h_min / 64``, rounded down so it divides
    ``T``); the returned solution uses ``h_ref / 2`` and the accuracy estimate
    is the Richardson difference ``|u(h_ref) - u(h_ref/2)| / 3``.

    Raises
    ------
    AccuracyNotReached
        If ``required`` is given and the estimate exceeds it.
    """
    potential = potential or ZERO_POTENTIAL
    a = _dense(A_full)
    eta = np.asarray(eta, dtype=float)
    if h_ref is None:
        if h_min is None:
            raise ValueError("need h_min or h_ref")
        h_ref = h_min / 64.0
    n = max(1, math.ceil(T / h_ref - 1e-9))
    h = T / n
    coarse = _strang(scipy.linalg.expm(0.5 * h * a), eta, n, h, potential)
    fine = _strang(scipy.linalg.expm(0.25 * h * a), eta, 2 * n, 0.5 * h, potential)
    acc = _l2(coarse - fine, weights) / 3.0
    if required is not None and acc > required:
        raise AccuracyNotReached(f"reference accuracy {acc:.3e} exceeds required {required:.3e}")
    return ReferenceSolution(fine, "fine-step", acc, T)


def error_norm(u: np.ndarray, u_ref: np.ndarray, grid: Grid) -> float:
    """Discrete L2 norm ``sqrt(sum (u - u_ref)^2 vol)`` with nodal control volumes."""
    u = np.asarray(u, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u.shape != u_ref.shape:
        raise ValueError("length mismatch")
    return _l2(u - u_ref, grid.cell_volumes())


def convergence_order(pairs: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    Raises
    ------
    DegenerateErrors
        If an error is zero or non-finite.
    """
    if len(pairs) < 3:
        raise ValueError("need at least three (h, error) pairs")
    h = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if not np.all(np.isfinite(e)) or np.any(e <= 0):
        raise DegenerateErrors(f"errors must be positive and finite, got {e.tolist()}")
    ratios = h[1:] / h[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("step sizes must form a geometric sequence")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def running_orders(hs: Sequence[float], errors: Sequence[float]) -> list[float | None]:
    out: list[float | None] = [None]
    for i in range(1, len(hs)):
        out.append(math.log(errors[i - 1] / errors[i]) / math.log(hs[i - 1] / hs[i]))
    return out


# ---------------------------------------------------------------------------
# Experiment driver
# ---------------------------------------------------------------------------


@dataclass
class Problem:
    grid: Grid
    partition: Partition
    split: SplitOperator
    eta: np.ndarray
    potential: Potential | None


def build_problem(cfg: ExperimentConfig) -> Problem:
    p = cfg.problem
    grid = build_grid(p.dim, p.extent, p.n, p.bc)
    params = dict(p.coefficients)
    spec = coefficient_preset(params.pop("preset"), p.dim, p.extent, **params)
    coeff = sample_coefficients(grid, spec)
    partition = build_partition(grid, cfg.cover)
    split = assemble_split(grid, coeff, partition)
    init = dict(p.initial)
    eta = initial_data(grid, init.pop("preset", None), seed=cfg.seed, **init)
    potential = Potential(cfg.nonlinearity.p) if cfg.nonlinearity.kind == "potential" else None
    return Problem(grid, partition, split, eta, potential)


def reference_for(cfg: ExperimentConfig, problem: Problem) -> ReferenceSolution:
    T = cfg.scheme.T
    weights = problem.grid.cell_volumes()
    if problem.potential is None:
        return reference_linear(problem.split.full, problem.eta, T, weights)
    return reference_semilinear(problem.split.full, problem.potential, problem.eta, T,
                                h_min=min(cfg.scheme.h), weights=weights)


@dataclass
class ExperimentResult:
    scheme: str
    q: int
    delta: float
    hs: list[float]
    ms: list[int]
    errors: list[float]
    walltimes: list[float]
    observed_order: float | None
    expected_order: int
    reference: ReferenceSolution = field(repr=False)
    config: dict = field(default_factory=dict, repr=False)

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.hs, self.errors))

    def rows(self) -> list[list[str]]:
        orders = running_orders(self.hs, self.errors)
        return [
            [self.scheme, str(self.q), repr(float(self.delta)), repr(h), str(m), repr(e),
             "" if o is None else repr(o), f"{w:.6f}"]
            for h, m, e, o, w in zip(self.hs, self.ms, self.errors, orders, self.walltimes)
        ]


def write_csv(results: Sequence[ExperimentResult], path=None) -> str:
    """Write results as CSV (one row per step size); returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for res in results:
        writer.writerows(res.rows())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def run_experiment(cfg: ExperimentConfig, problem: Problem | None = None,
                   reference: ReferenceSolution | None = None) -> ExperimentResult:
    """Integrate at every step size of the sweep and measure errors at ``T``.

    ``problem`` and ``reference`` may be passed in to share them between
    schemes on the same problem.
    """
    if problem is None:
        problem = build_problem(cfg)
    if reference is None:
        reference = reference_for(cfg, problem)
    spec = cfg.scheme
    nonlinearity = problem.potential if spec.kind in SEMILINEAR_KINDS else None

    # every step size is checked before any integration starts
    configs = [SchemeConfig(spec.kind, h, m, spec.strict, spec.order) for h, m in spec.steps()]
    from .schemes import check_restriction, _ordered_parts

    for sc in configs:
        parts = _ordered_parts(sc, problem.split.parts)
        check_restriction(sc, [pt.shift for pt in parts], nonlinearity.M_F if nonlinearity else 0.0)

    hs, ms, errors, walltimes = [], [], [], []
    for sc in configs:
        t0 = time.perf_counter()
        traj = integrate(sc, problem.split, problem.eta, nonlinearity, cfg.solver)
        walltimes.append(time.perf_counter() - t0)
        hs.append(sc.h)
        ms.append(sc.m)
        errors.append(error_norm(traj.final.u, reference.u_ref, problem.grid))

    if min(errors) > 0 and reference.accuracy * REFERENCE_MARGIN > min(errors):
        raise AccuracyNotReached(
            f"reference accuracy {reference.accuracy:.3e} is not {REFERENCE_MARGIN:g}x below "
            f"the smallest error {min(errors):.3e}"
        )
    order = convergence_order(list(zip(hs, errors))) if len(hs) >= 3 else None
    return ExperimentResult(spec.kind, problem.split.q, cfg.cover.delta, hs, ms, errors, walltimes,
                            order, ORDERS[spec.kind], reference, cfg.raw)
