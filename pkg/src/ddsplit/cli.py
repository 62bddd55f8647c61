"""``ddsplit`` command line: ``run``, ``verify`` and ``orders``.

Exit codes: 0 success, 2 configuration error, 3 step restriction violated,
4 linear or nonlinear solver failure, 5 divergence, 6 verification failed,
7 reference solution unavailable or not accurate enough.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .assembly import assemble_split, operator_norm_inf, splitting_defect
from .config import ExperimentConfig, parse_config
from .domain import build_grid
from .errors import (AccuracyNotReached, DDSplitError, DegenerateErrors, Diverged, EllipticityError,
                     GridError, ParseError, PartitionError, SolverError, StepRestrictionViolated,
                     TooLargeForDense, ValidationError)
from .harness import build_problem, reference_for, run_experiment, write_csv
from .partition import verify_partition
from .schemes import SEMILINEAR_KINDS, SchemeConfig, _ordered_parts, check_restriction
from .solver import factorize, residual, solve

log = logging.getLogger("ddsplit")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESTRICTION = 3
EXIT_SOLVER = 4
EXIT_DIVERGED = 5
EXIT_VERIFY = 6
EXIT_REFERENCE = 7

DEFECT_TOL = 1e-13
RESIDUAL_TOL = 1e-10

_CATEGORIES = [
    ((ParseError, ValidationError, GridError, EllipticityError, PartitionError), EXIT_CONFIG, "config"),
    ((StepRestrictionViolated,), EXIT_RESTRICTION, "restriction"),
    ((SolverError,), EXIT_SOLVER, "solver"),
    ((Diverged,), EXIT_DIVERGED, "divergence"),
    ((TooLargeForDense, AccuracyNotReached, DegenerateErrors), EXIT_REFERENCE, "reference"),
]


def exit_code_for(exc: BaseException) -> tuple[int, str]:
    for types, code, name in _CATEGORIES:
        if isinstance(exc, types):
            return code, name
    return 1, "error"


def _plan(cfg: ExperimentConfig, out) -> None:
    p, c, s = cfg.problem, cfg.cover, cfg.scheme
    print(f"problem : {p.dim}D {'x'.join(map(str, p.n))} {p.bc}, extent {list(p.extent)}, "
          f"coefficients {p.coefficients}", file=out)
    print(f"cover   : {c.kind} counts={list(c.counts)} delta={c.delta:g} ramp={c.ramp} q={cfg.q}", file=out)
    print(f"scheme  : {s.kind} T={s.T:g} strict={s.strict}", file=out)
    nl = cfg.nonlinearity
    print(f"nonlin  : {nl.kind}" + (f" p={nl.p}" if nl.kind != "none" else ""), file=out)
    print(f"solver  : {cfg.solver.backend}", file=out)
    for h, m in s.steps():
        print(f"  h={h!r} m={m}", file=out)


def _check_sweep(cfg: ExperimentConfig, problem) -> None:
    nl = problem.potential if cfg.scheme.kind in SEMILINEAR_KINDS else None
    for h, m in cfg.scheme.steps():
        sc = SchemeConfig(cfg.scheme.kind, h, m, cfg.scheme.strict, cfg.scheme.order)
        parts = _ordered_parts(sc, problem.split.parts)
        check_restriction(sc, [pt.shift for pt in parts], nl.M_F if nl else 0.0)


def cmd_run(cfg: ExperimentConfig, out_path=None, dry_run: bool = False, out=None) -> int:
    out = out or sys.stdout
    if dry_run:
        _plan(cfg, out)
        print("dry run: configuration valid, nothing computed", file=out)
        return EXIT_OK
    problem = build_problem(cfg)
    _check_sweep(cfg, problem)
    result = run_experiment(cfg, problem)
    path = out_path or cfg.output.get("csv")
    text = write_csv([result], path)
    if path is None:
        out.write(text)
    order = "n/a" if result.observed_order is None else f"{result.observed_order:.4f}"
    print(f"{result.scheme}: observed order {order} (expected {result.expected_order})", file=out)
    return EXIT_OK


def verify_checks(cfg: ExperimentConfig, seed: int | None = None) -> list[tuple[str, float, float, bool]]:
    """Partition, splitting and resolvent checks as ``(name, value, limit, passed)`` rows."""
    from .domain import coefficient_preset, sample_coefficients
    from .partition import build_partition

    seed = cfg.seed if seed is None else seed
    p = cfg.problem
    grid = build_grid(p.dim, p.extent, p.n, p.bc)
    partition = build_partition(grid, cfg.cover)
    if cfg.verify.get("corrupt_partition"):
        # test hook: break the unit sum at one interior node
        partition.chi_nodes[0, grid.size // 2] += 1e-3
    params = dict(p.coefficients)
    spec = coefficient_preset(params.pop("preset"), p.dim, p.extent, **params)
    split = assemble_split(grid, sample_coefficients(grid, spec), partition)

    rows = []
    rep = verify_partition(partition)
    rows.append(("partition sum |sum chi - 1|", rep.max_sum_deviation, rep.tol, rep.max_sum_deviation <= rep.tol))
    rows.append(("partition bounds violations", rep.bounds_violations, 0, rep.bounds_violations == 0))
    rows.append(("partition support violations", rep.support_violations, 0, rep.support_violations == 0))
    rows.append(("same-colour adjacency", rep.adjacency_violations, 0, rep.adjacency_violations == 0))

    probes = int(cfg.verify.get("probes", 10))
    defect = splitting_defect(split, probes, seed)
    limit = 0.0 if split.q == 1 else DEFECT_TOL
    rows.append(("splitting defect", defect, limit, defect <= limit))
    norm = operator_norm_inf(split.full)
    rel = defect / norm if norm else 0.0
    rel_limit = 8 * split.q * np.finfo(float).eps
    rows.append(("splitting defect / |A|_inf", rel, rel_limit, rel <= rel_limit))

    rng = np.random.default_rng(seed)
    tau = cfg.scheme.h[0] * (split.q if cfg.scheme.kind not in ("DouglasRachford", "PeacemanRachford") else 1)
    worst = 0.0
    passive_ok = True
    for op in (split.full,) + split.parts:
        if tau * op.shift >= 1.0:
            continue
        f = factorize(op, tau, cfg.solver.backend, cfg.solver.tol, cfg.solver.max_iter)
        r = rng.standard_normal(op.size)
        w = solve(f, r)
        worst = max(worst, residual(f, r, w) / max(1.0, float(np.max(np.abs(r)))))
        if f.passive.size:
            passive_ok &= bool(np.array_equal(w[f.passive], r[f.passive]))
    rows.append(("resolvent residual", worst, RESIDUAL_TOL, worst <= RESIDUAL_TOL))
    rows.append(("passive rows copied exactly", 0 if passive_ok else 1, 0, passive_ok))
    return rows


def cmd_verify(cfg: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    rows = verify_checks(cfg)
    width = max(len(r[0]) for r in rows)
    print(f"{'check':<{width}}  {'value':>12}  {'limit':>12}  result", file=out)
    for name, value, limit, ok in rows:
        print(f"{name:<{width}}  {float(value):12.4e}  {float(limit):12.4e}  {'PASS' if ok else 'FAIL'}", file=out)
    failed = [r[0] for r in rows if not r[3]]
    if failed:
        print(f"verification failed: {', '.join(failed)}", file=out)
        return EXIT_VERIFY
    print("all checks passed", file=out)
    return EXIT_OK


def parse_scheme_list(text: str) -> list[str]:
    kinds = [k.strip() for k in (text or "").split(",") if k.strip()]
    if not kinds:
        raise ValidationError("--schemes", "empty scheme list")
    return kinds


def cmd_orders(cfg: ExperimentConfig, kinds: list[str], out_path=None, out=None) -> int:
    out = out or sys.stdout
    if not kinds:
        raise ValidationError("--schemes", "empty scheme list")
    configs = [cfg.with_scheme(k) for k in kinds]
    problem = build_problem(cfg)
    for c in configs:
        _check_sweep(c, problem)
    reference = reference_for(cfg, problem)
    results = [run_experiment(c, problem, reference) for c in configs]
    path = out_path or cfg.output.get("csv")
    text = write_csv(results, path)
    if path is None:
        out.write(text)
    for r in results:
        order = "n/a" if r.observed_order is None else f"{r.observed_order:.4f}"
        print(f"{r.scheme}: observed order {order} (expected {r.expected_order})", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddsplit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one order study and write CSV")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="CSV path (default: output.csv from the config, else stdout)")
    run.add_argument("--dry-run", action="store_true", help="validate and print the plan only")
    ver = sub.add_parser("verify", help="partition, splitting and solver checks")
    ver.add_argument("--config", required=True)
    orders = sub.add_parser("orders", help="order studies for several schemes on one problem")
    orders.add_argument("--config", required=True)
    orders.add_argument("--schemes", required=True, help="comma-separated scheme kinds")
    orders.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        if args.command == "run":
            return cmd_run(cfg, args.out, args.dry_run)
        if args.command == "verify":
            return cmd_verify(cfg)
        return cmd_orders(cfg, parse_scheme_list(args.schemes), args.out)
    except DDSplitError as exc:
        code, category = exit_code_for(exc)
        print(f"ddsplit: {category} error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
