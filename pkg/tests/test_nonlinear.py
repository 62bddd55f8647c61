from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st
from scipy.optimize import bisect

from conftest import make_split
from ddsplit import _pykernels, kernels
from ddsplit.assembly import SparseOperator
from ddsplit.nonlinear import (ZERO_POTENTIAL, Potential, eval_F, resolve_F, step_semilinear_explicitF,
                               step_semilinear_implicitF)
from ddsplit.schemes import (SEMILINEAR_EXPLICIT, SEMILINEAR_IMPLICIT, SchemeConfig, State, integrate,
                             step_additive)

CUBIC = Potential(3)


def bisection_root(v, h, p=3):
    return bisect(lambda w: (1 - h) * w + h * w**p - v, -abs(v) - 1, abs(v) + 1, xtol=1e-15, rtol=1e-15)


def scalar(a):
    return SparseOperator.from_matrix(sp.csr_matrix(np.array([[a]], dtype=float)))


class TestPotential:
    def test_values(self):
        np.testing.assert_array_equal(eval_F(np.array([0.0, 1.0, -1.0, 2.0]), CUBIC), [0, 0, 0, -6])

    @pytest.mark.parametrize("p", [0, 2, 4, 1])
    def test_invalid_exponent(self, p):
        with pytest.raises(ValueError):
            Potential(p)

    def test_constants(self):
        assert CUBIC.M_F == 1.0 and ZERO_POTENTIAL.M_F == 0.0
        assert CUBIC.L_F_estimate == pytest.approx(3 * 1.5**2 - 1)

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=30))
    def test_one_sided_lipschitz(self, vals):
        v = np.array(vals)
        w = v[::-1].copy()
        assert (eval_F(v, CUBIC) - eval_F(w, CUBIC)) @ (v - w) <= CUBIC.M_F * (v - w) @ (v - w) + 1e-9


class TestResolvent:
    def test_h_zero(self):
        v = np.array([0.3, -2.0])
        np.testing.assert_array_equal(resolve_F(v, 0.0, CUBIC), v)

    @pytest.mark.parametrize("h", [0.05, 0.25, 0.5])
    def test_fixed_point(self, h):
        np.testing.assert_allclose(resolve_F(np.array([1.0, -1.0, 0.0]), h, CUBIC), [1.0, -1.0, 0.0], atol=1e-15)

    def test_bisection_oracle(self):
        w = resolve_F(np.array([2.0]), 0.1, CUBIC)[0]
        assert w == pytest.approx(bisection_root(2.0, 0.1), abs=1e-12)
        # frozen bisection value
        assert w == pytest.approx(1.6879035, abs=1e-7)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=50), st.floats(0.01, 0.5), st.sampled_from([3, 5, 7]))
    def test_residual(self, vals, h, p):
        pot = Potential(p)
        v = np.array(vals)
        w = resolve_F(v, h, pot)
        res = np.max(np.abs(w - h * eval_F(w, pot) - v))
        assert res <= 1e-12 * max(1.0, np.max(np.abs(v)))

    @given(st.integers(0, 2**31 - 1), st.floats(0.01, 0.5))
    def test_shift_bound(self, seed, h):
        r = np.random.default_rng(seed)
        u, v = r.uniform(-3, 3, (2, 20))
        d = resolve_F(u, h, CUBIC) - resolve_F(v, h, CUBIC)
        assert np.linalg.norm(d) <= np.linalg.norm(u - v) / (1 - h * CUBIC.M_F) * (1 + 1e-12)

    def test_large_values_use_bracket(self):
        v = np.array([1e6, -1e6, 50.0])
        w = resolve_F(v, 0.5, Potential(7))
        res = w - 0.5 * eval_F(w, Potential(7)) - v
        assert np.all(np.abs(res) <= 1e-13 * np.abs(v))

    def test_compiled_matches_python(self):
        v = np.linspace(-3, 3, 101)
        wc, ic = kernels.potential_resolvent(v, 0.3, 5, 1e-13, 50)
        wp, ip = _pykernels.potential_resolvent(v, 0.3, 5, 1e-13, 50)
        np.testing.assert_allclose(wc, wp, atol=1e-14)
        assert ic >= 0 and ip >= 0

    def test_out_of_range_step(self):
        with pytest.raises(ValueError):
            resolve_F(np.array([1.0]), 1.0, CUBIC)


class TestSemilinearSteps:
    def test_implicit_scalar_zero_operator(self):
        s = step_semilinear_implicitF(State(np.array([1.0])), 0.1, [scalar(0.0)], CUBIC)
        assert s.u[0] == pytest.approx(1.0, abs=1e-15)

    def test_implicit_scalar(self):
        s = step_semilinear_implicitF(State(np.array([1.0])), 0.1, [scalar(-1.0)], CUBIC)
        assert s.u[0] == pytest.approx(bisection_root(1 / 1.1, 0.1), abs=1e-13)
        assert s.u[0] == pytest.approx(0.9227905, abs=1e-7)

    def test_explicit_scalar(self):
        s = step_semilinear_explicitF(State(np.array([2.0])), 0.1, [scalar(0.0)], CUBIC)
        assert s.u[0] == pytest.approx(1.4, abs=1e-15)

    @pytest.mark.parametrize("step", [step_semilinear_implicitF, step_semilinear_explicitF])
    def test_zero_potential_is_additive(self, step, heat_1d, rng):
        u = rng.standard_normal(heat_1d.full.size)
        a = step(State(u), 0.01, heat_1d.parts, ZERO_POTENTIAL).u
        np.testing.assert_array_equal(a, step_additive(State(u), 0.01, heat_1d.parts).u)

    @pytest.mark.parametrize("step", [step_semilinear_implicitF, step_semilinear_explicitF])
    @pytest.mark.parametrize("root", [0.0, 1.0, -1.0])
    def test_roots_of_F(self, step, root):
        split = make_split(1, 17, "neumann")
        u = np.full(17, root)
        a = step(State(u), 0.01, split.parts, CUBIC).u
        np.testing.assert_allclose(a, step_additive(State(u), 0.01, split.parts).u, atol=1e-14)

    @pytest.mark.parametrize("kind", [SEMILINEAR_IMPLICIT, SEMILINEAR_EXPLICIT])
    def test_integrate_bounded(self, kind):
        split = make_split(1, 33, "neumann")
        eta = 0.9 * np.cos(np.pi * split.grid.node_coords(0))
        traj = integrate(SchemeConfig(kind, 0.01, 50), split, eta, CUBIC)
        assert np.max(np.abs(traj.final.u)) <= 1.0

    def test_restriction_on_potential(self, heat_1d):
        from ddsplit.errors import StepRestrictionViolated
        with pytest.raises(StepRestrictionViolated, match="M\\[F\\]"):
            integrate(SchemeConfig(SEMILINEAR_IMPLICIT, 0.6, 1), heat_1d, np.ones(33), CUBIC)
