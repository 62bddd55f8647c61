from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ddsplit.assembly import assemble_split
from ddsplit.domain import build_grid, coefficient_preset, sample_coefficients
from ddsplit.partition import CoverSpec, build_partition

settings.register_profile(
    "ddsplit", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ddsplit")


def make_split(dim=1, n=33, bc="dirichlet", cover=None, preset="constant", **coeff):
    n_tuple = (n,) * dim if isinstance(n, int) else tuple(n)
    grid = build_grid(dim, (1.0,) * dim, n_tuple, bc)
    if preset == "constant":
        coeff.setdefault("rho", [0.0] * dim)
    spec = coefficient_preset(preset, dim, grid.extents, **coeff)
    if cover is None:
        cover = CoverSpec("stripes", (4,), 0.15, "linear", 2) if dim == 1 else CoverSpec("blocks", (2, 2), 0.25)
    partition = build_partition(grid, cover)
    return assemble_split(grid, sample_coefficients(grid, spec), partition)


@pytest.fixture
def heat_1d():
    """1D pure diffusion, 4 stripes in 2 colours."""
    return make_split(1, 33)


@pytest.fixture
def advection_2d():
    """2D diffusion with advection along x, 2x2 blocks."""
    return make_split(2, 9, rho=[1.0, 0.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
