"""Compare the compiled kernels with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Times the banded factor/solve pair on tridiagonal systems of several sizes,
the pointwise Newton resolvent of the cubic potential, and one full
additive step on the 1D acceptance problem with each backend.
"""

from __future__ import annotations

import argparse
import importlib
import os
import timeit

import numpy as np

from ddsplit import _pykernels, kernels


def tridiag_case(n, rng):
    lower = np.r_[0.0, -np.ones(n - 1)]
    upper = np.r_[-np.ones(n - 1), 0.0]
    diag = 2.0 + rng.uniform(0.1, 1.0, n)
    return lower, diag, upper, rng.standard_normal(n)


def bench_tridiag(mod, n, repeat, rng):
    lower, diag, upper, rhs = tridiag_case(n, rng)

    def run():
        mult, piv = mod.tridiag_factor(lower, diag, upper)
        mod.tridiag_solve(mult, piv, upper, rhs)

    return min(timeit.repeat(run, number=10, repeat=repeat)) / 10


def bench_newton(mod, n, repeat, rng):
    v = rng.uniform(-3, 3, n)
    return min(timeit.repeat(lambda: mod.potential_resolvent(v, 0.1, 3, 1e-13, 50), number=5, repeat=repeat)) / 5


def bench_step(pure: bool, repeat: int) -> float:
    """One additive step on the 1D acceptance problem, kernels chosen at import."""
    if pure:
        os.environ["DDSPLIT_PURE_PYTHON"] = "1"
    else:
        os.environ.pop("DDSPLIT_PURE_PYTHON", None)
    import ddsplit.kernels as k
    import ddsplit.solver as s
    importlib.reload(k)
    importlib.reload(s)
    from ddsplit.domain import build_grid, coefficient_preset, sample_coefficients
    from ddsplit.assembly import assemble_split
    from ddsplit.partition import build_stripes

    grid = build_grid(1, [1.0], [4095], "dirichlet")
    split = assemble_split(grid, sample_coefficients(grid, coefficient_preset("constant", 1)),
                           build_stripes(grid, 4, 0.15))
    factors = [s.factorize(p, 2 * 1e-3) for p in split.parts]
    u = np.sin(np.pi * grid.node_coords(0))

    def run():
        sum(s.solve(f, u) for f in factors)

    return min(timeit.repeat(run, number=20, repeat=repeat)) / 20


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"compiled kernels available: {kernels.compiled is not None}")
    if kernels.compiled is None:
        print("build the extension (pip install -e . --no-build-isolation) to compare")
        return 0
    print(f"{'kernel':<28}{'size':>8}{'compiled [s]':>15}{'python [s]':>15}{'speed-up':>10}")
    for n in (1_000, 10_000, 100_000):
        c = bench_tridiag(kernels.compiled, n, args.repeat, rng)
        p = bench_tridiag(_pykernels, n, args.repeat, rng)
        print(f"{'tridiagonal factor+solve':<28}{n:>8}{c:>15.3e}{p:>15.3e}{p / c:>10.1f}")
    for n in (1_000, 100_000):
        c = bench_newton(kernels.compiled, n, args.repeat, rng)
        p = bench_newton(_pykernels, n, args.repeat, rng)
        print(f"{'potential resolvent':<28}{n:>8}{c:>15.3e}{p:>15.3e}{p / c:>10.1f}")
    c = bench_step(False, args.repeat)
    p = bench_step(True, args.repeat)
    print(f"{'additive step (solves)':<28}{4095:>8}{c:>15.3e}{p:>15.3e}{p / c:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
