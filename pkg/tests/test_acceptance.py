"""Acceptance criteria 1-10.

Every test records a verdict line; the lines are printed in the pytest
terminal summary and, with ``-s``, as each test finishes.  Run only these
with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import time
from importlib.resources import files

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import ACCEPTANCE, make_split
from ddsplit.assembly import SparseOperator, assemble_split, splitting_defect
from ddsplit.config import parse_config, validate
from ddsplit.domain import build_grid, coefficient_preset, sample_coefficients
from ddsplit.harness import build_problem, reference_for, run_experiment
from ddsplit.partition import CoverSpec, build_blocks, build_partition, build_stripes, verify_partition
from ddsplit.schemes import (ADDITIVE, DOUGLAS_RACHFORD, FSCN, PEACEMAN_RACHFORD, SEMILINEAR_EXPLICIT,
                             SEMILINEAR_IMPLICIT, SchemeConfig, State, integrate, step_additive,
                             step_douglas_rachford, step_fscn, step_peaceman_rachford)

PRESETS = files("ddsplit").joinpath("presets")


def record(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"\ncriterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def preset(name: str):
    return parse_config(PRESETS.joinpath(f"{name}.json"))


def timed_orders(cfg, kinds):
    """Observed orders of several schemes on one problem (shared reference) and the wall time."""
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    reference = reference_for(cfg, problem)
    results = {k: run_experiment(cfg.with_scheme(k), problem, reference) for k in kinds}
    return results, time.perf_counter() - t0


def test_criterion_01_additive_first_order():
    cfg = preset("additive_2d")
    assert cfg.q == 4 and cfg.problem.n == (33, 33) and cfg.cover.delta == 0.25
    res, wall = timed_orders(cfg, [ADDITIVE])
    order = res[ADDITIVE].observed_order
    ok = 0.85 <= order <= 1.15 and wall < 60
    record(1, ok, f"additive 2D q=4 order {order:.4f} in [0.85, 1.15], {wall:.1f}s < 60s")
    assert 0.85 <= order <= 1.15
    assert wall < 60


def test_criterion_02_adi_orders():
    cfg = preset("adi_1d")
    assert cfg.q == 2 and cfg.problem.n == (127,) and cfg.cover.counts == (4,)
    res, wall = timed_orders(cfg, [PEACEMAN_RACHFORD, DOUGLAS_RACHFORD])
    pr = res[PEACEMAN_RACHFORD].observed_order
    dr = res[DOUGLAS_RACHFORD].observed_order
    ok = 1.7 <= pr <= 2.2 and 0.85 <= dr <= 1.15 and wall < 20
    record(2, ok, f"PR order {pr:.4f} in [1.7, 2.2], DR order {dr:.4f} in [0.85, 1.15], {wall:.1f}s < 20s")
    assert 1.7 <= pr <= 2.2
    assert 0.85 <= dr <= 1.15
    assert wall < 20


def test_criterion_03_fscn_second_order():
    cfg = preset("fscn_2d")
    res, wall = timed_orders(cfg, [FSCN])
    order = res[FSCN].observed_order
    ok = 1.7 <= order <= 2.3 and wall < 90
    record(3, ok, f"FSCN 2D q=4 order {order:.4f} in [1.7, 2.3], {wall:.1f}s < 90s")
    assert 1.7 <= order <= 2.3
    assert wall < 90


def test_criterion_04_semilinear_first_order():
    cfg = preset("semilinear_1d")
    assert cfg.problem.bc == "neumann" and cfg.nonlinearity.p == 3
    res, wall = timed_orders(cfg, [SEMILINEAR_IMPLICIT, SEMILINEAR_EXPLICIT])
    a = res[SEMILINEAR_IMPLICIT].observed_order
    b = res[SEMILINEAR_EXPLICIT].observed_order
    assert res[SEMILINEAR_IMPLICIT].reference.method == "fine-step"
    ok = 0.85 <= a <= 1.15 and 0.85 <= b <= 1.15 and wall < 60
    record(4, ok, f"implicit-F order {a:.4f}, explicit-F order {b:.4f} in [0.85, 1.15], {wall:.1f}s < 60s")
    assert 0.85 <= a <= 1.15
    assert 0.85 <= b <= 1.15
    assert wall < 60


def _split_for(cfg):
    p = cfg.problem
    grid = build_grid(p.dim, p.extent, p.n, p.bc)
    params = dict(p.coefficients)
    spec = coefficient_preset(params.pop("preset"), p.dim, p.extent, **params)
    return assemble_split(grid, sample_coefficients(grid, spec), build_partition(grid, cfg.cover))


def test_criterion_05_splitting_exactness():
    names = sorted(p.name[:-5] for p in PRESETS.iterdir() if p.name.endswith(".json"))
    defects = {}
    for name in names:
        split = _split_for(preset(name))
        defects[name] = (split.q, splitting_defect(split, n_probes=10, seed=0))
    single_ok = all(d == 0.0 for q, d in defects.values() if q == 1)
    multi_ok = all(d <= 1e-13 for q, d in defects.values() if q > 1)
    detail = ", ".join(f"{n}(q={q}) {d:.2e}" for n, (q, d) in defects.items())
    record(5, single_ok and multi_ok, f"defect <= 1e-13 (q=1: exactly 0): {detail}")
    assert single_ok
    assert multi_ok


@pytest.mark.parametrize("delta", [0.05, 0.1, 0.2, 0.4])
def test_criterion_06_partition_invariants(delta):
    reports = []
    g1 = build_grid(1, [1.0], [257], "dirichlet")
    g2 = build_grid(2, [1.0, 1.0], [65, 65], "neumann")
    for ramp in ("linear", "cubic-smoothstep"):
        reports.append(verify_partition(build_stripes(g1, 2, delta, ramp)))
        reports.append(verify_partition(build_stripes(g2, 2, delta, ramp, axis=1)))
        reports.append(verify_partition(build_blocks(g2, (2, 2), delta, ramp)))
        if delta < 0.25:
            reports.append(verify_partition(build_stripes(g1, 4, delta, ramp)))
    dev = max(r.max_sum_deviation for r in reports)
    bad = sum(r.bounds_violations + r.support_violations for r in reports)
    ok = dev <= 1e-14 and bad == 0
    prev = ACCEPTANCE.get(6, (True, ""))
    parts = (prev[1] + "; " if prev[1] else "") + f"delta={delta}: max|sum-1|={dev:.1e}, violations={bad}"
    record(6, prev[0] and ok, parts)
    assert dev <= 1e-14
    assert bad == 0


def test_criterion_07_stability():
    rng = np.random.default_rng(7)
    checks = []
    # additive, pure diffusion, 1e4 steps
    heat2d = make_split(2, 33)
    eta = rng.standard_normal(heat2d.full.size)
    norms = integrate(SchemeConfig(ADDITIVE, 0.25 / 32, 10_000), heat2d, eta).norms
    monotone = all(b <= a for a, b in zip(norms, norms[1:]))
    checks.append(("additive monotone", monotone))
    # additive growth bound with advection
    adv = make_split(2, 33, rho=[1.0, 0.0])
    M = max(p.shift for p in adv.parts)
    h, m = 0.25 / 32, 32
    worst = 0.0
    for _ in range(20):
        eta = rng.standard_normal(adv.full.size)
        traj = integrate(SchemeConfig(ADDITIVE, h, m), adv, eta)
        worst = max(worst, traj.max_norm / (np.exp(2 * adv.q * M * h * m) * np.linalg.norm(eta)))
    checks.append(("additive e^{2qMT} bound", bool(worst <= 1.0)))
    # ADI long-run boundedness
    heat1d = make_split(1, 127)
    eta = rng.standard_normal(127)
    ratios = {}
    for kind in (PEACEMAN_RACHFORD, DOUGLAS_RACHFORD):
        traj = integrate(SchemeConfig(kind, 0.25 / 128, 10_000), heat1d, eta)
        ratios[kind] = traj.max_norm / np.linalg.norm(eta)
    checks.append(("PR/DR <= 10|eta|", bool(max(ratios.values()) <= 10.0)))
    ok = all(c for _, c in checks)
    summary = ", ".join(f"{name} {'ok' if c else 'violated'}" for name, c in checks)
    record(7, ok, f"{summary}; growth/bound {worst:.3f}; ADI max/|eta| "
                  + ", ".join(f"{k} {v:.3f}" for k, v in ratios.items()))
    assert ok


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_criterion_08_reductions():
    rng = np.random.default_rng(8)
    single = make_split(2, 17, cover=CoverSpec("single", (1, 1), 0.0), rho=[1.0, 0.0], sigma=0.3)
    a = single.full.matrix.toarray()
    eye = np.eye(a.shape[0])
    zero = SparseOperator(sp.csr_matrix(a.shape), np.zeros(0, dtype=np.intp), True)
    h = 0.01
    u = rng.standard_normal(a.shape[0])
    be = np.linalg.solve(eye - h * a, u)
    cn = np.linalg.solve(eye - h / 2 * a, (eye + h / 2 * a) @ u)
    errs = {
        "additive q=1 vs BE": _rel(step_additive(State(u), h, single.parts).u, be),
        "FSCN q=1 vs CN": _rel(step_fscn(State(u), h, single.parts).u, cn),
        "PR A2=0 vs CN": _rel(step_peaceman_rachford(State(u), h, single.parts[0], zero).u, cn),
        "DR A2=0 vs BE": _rel(step_douglas_rachford(State(u), h, single.parts[0], zero).u, be),
    }
    ok = all(e <= 1e-14 for e in errs.values())
    record(8, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + " (<= 1e-14)")
    assert ok


def test_criterion_09_order_free_convergence():
    cfg = preset("rough_1d")
    assert cfg.problem.initial["preset"] == "indicator"
    res = run_experiment(cfg)
    errs = res.errors
    ok = len(errs) == 5 and all(a > b for a, b in zip(errs, errs[1:]))
    record(9, ok, "errors " + ", ".join(f"{e:.3e}" for e in errs) + " strictly decreasing")
    assert ok


def test_criterion_10_scalar_factors():
    one = SparseOperator.from_matrix(np.array([[-1.0]]))
    u = np.array([1.0])
    dr = integrate(SchemeConfig(DOUGLAS_RACHFORD, 0.1, 1), [one, one], u).final.u[0]
    pr = integrate(SchemeConfig(PEACEMAN_RACHFORD, 0.1, 1), [one, one], u).final.u[0]
    cn = integrate(SchemeConfig(FSCN, 0.1, 1), [one, one], u).final.u[0]
    ok = abs(dr - 0.8347107) <= 1e-7 and abs(pr - 0.8185941) <= 1e-7 and abs(cn - 0.8185941) <= 1e-7
    record(10, ok, f"DR {dr:.9f} (0.8347107), PR {pr:.9f}, FSCN {cn:.9f} (0.8185941), tol 1e-7")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
