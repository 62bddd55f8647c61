from __future__ import annotations

import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import ndimage

from ddsplit.domain import build_grid
from ddsplit.errors import PartitionError
from ddsplit.partition import (CoverSpec, build_blocks, build_partition, build_single, build_stripes,
                               verify_partition)


def labelled_components(grid, mask):
    """Independent flood fill (4-neighbour) of a nodal mask."""
    labels, count = ndimage.label(mask.reshape(grid.shape))
    return labels.ravel(), count


class TestSingle:
    def test_identity_weights(self):
        g = build_grid(2, [1, 1], [5, 6], "neumann")
        p = build_single(g)
        assert p.q == 1
        assert np.all(p.chi_nodes == 1.0)
        assert all(np.all(f == 1.0) for f in p.chi_faces)
        assert verify_partition(p).passed


class TestStripes:
    def test_two_stripes_midpoint(self):
        g = build_grid(1, [1.0], [9], "dirichlet")
        p = build_stripes(g, 2, 0.4)
        x = g.node_coords(0)
        expected = np.clip((x - 0.3) / 0.4, 0.0, 1.0)
        np.testing.assert_allclose(p.chi_nodes[1], expected, atol=1e-15)
        np.testing.assert_allclose(p.chi_nodes[0], 1.0 - expected, atol=1e-15)

    def test_colours_alternate(self):
        g = build_grid(1, [1.0], [65], "dirichlet")
        p = build_stripes(g, 4, 0.1, colors=2)
        x = g.node_coords(0)
        assert np.all(p.chi_nodes[0][(x > 0.05 + 1e-12) & (x < 0.2 - 1e-12)] == 1.0)
        assert np.all(p.chi_nodes[1][(x > 0.3) & (x < 0.45)] == 1.0)
        assert np.all(p.chi_nodes[0][(x > 0.55) & (x < 0.7)] == 1.0)
        assert len(p.components[0]) == 2 and len(p.components[1]) == 2

    def test_components_match_flood_fill(self):
        g = build_grid(2, [1.0, 1.0], [33, 17], "dirichlet")
        p = build_stripes(g, 4, 0.1, colors=2, axis=0)
        for k in range(p.q):
            labels, count = labelled_components(g, p.chi_nodes[k] > 0)
            assert count == len(p.components[k])
            for comp in p.components[k]:
                # every flood-fill component with weight lies inside one box
                inside = labels[comp]
                assert len(set(inside[inside > 0])) == 1

    def test_cubic_ramp_is_smooth(self):
        g = build_grid(1, [1.0], [201], "neumann")
        p = build_stripes(g, 2, 0.4, ramp="cubic-smoothstep")
        d = np.diff(p.chi_nodes[1]) / g.spacing[0]
        assert abs(d[0]) < 1e-12 and abs(d[-1]) < 1e-12
        assert np.max(np.abs(np.diff(d))) < 0.2

    @pytest.mark.parametrize("delta", [0.0, -0.1, 0.25, 0.3])
    def test_bad_delta(self, delta):
        g = build_grid(1, [1.0], [33], "dirichlet")
        with pytest.raises(PartitionError):
            build_stripes(g, 4, delta)

    def test_too_few_stripes(self):
        g = build_grid(1, [1.0], [33], "dirichlet")
        with pytest.raises(PartitionError):
            build_stripes(g, 2, 0.1, colors=3)

    def test_underresolved_overlap_warns(self, caplog):
        g = build_grid(1, [1.0], [9], "dirichlet")
        with caplog.at_level(logging.WARNING, logger="ddsplit"):
            build_stripes(g, 2, 0.1)
        assert "under-resolved" in caplog.text


class TestBlocks:
    def test_four_colours(self):
        g = build_grid(2, [1.0, 1.0], [33, 33], "dirichlet")
        p = build_blocks(g, (2, 2), 0.25)
        assert p.q == 4
        x, y = (c.ravel() for c in g.nodes())
        corner = (x < 0.3) & (y < 0.3)
        assert np.all(p.chi_nodes[0][corner] == 1.0)
        assert np.all(p.chi_nodes[3][(x > 0.7) & (y > 0.7)] == 1.0)

    def test_colour_formula(self):
        g = build_grid(2, [1.0, 1.0], [41, 41], "dirichlet")
        p = build_blocks(g, (4, 4), 0.1)
        x, y = (c.ravel() for c in g.nodes())
        for i in range(4):
            for j in range(4):
                cx, cy = (i + 0.5) / 4, (j + 0.5) / 4
                node = np.argmin((x - cx) ** 2 + (y - cy) ** 2)
                assert p.chi_nodes[2 * (i % 2) + (j % 2), node] == 1.0

    def test_components_match_flood_fill(self):
        g = build_grid(2, [1.0, 1.0], [41, 41], "dirichlet")
        p = build_blocks(g, (4, 4), 0.1)
        for k in range(4):
            _, count = labelled_components(g, p.chi_nodes[k] > 0)
            assert count == len(p.components[k]) == 4

    def test_needs_2d(self):
        with pytest.raises(PartitionError):
            build_blocks(build_grid(1, [1.0], [9], "dirichlet"), (2, 2), 0.1)


class TestVerify:
    @given(
        n=st.integers(9, 60),
        frac=st.floats(0.05, 0.95),
        n_stripes=st.integers(2, 6),
        ramp=st.sampled_from(["linear", "cubic-smoothstep"]),
        bc=st.sampled_from(["dirichlet", "neumann"]),
    )
    def test_stripes_properties(self, n, frac, n_stripes, ramp, bc):
        g = build_grid(1, [1.0], [n], bc)
        delta = frac / n_stripes
        p = build_stripes(g, n_stripes, delta, ramp, colors=2)
        rep = verify_partition(p)
        assert rep.max_sum_deviation <= 1e-14
        assert rep.bounds_violations == 0 and rep.support_violations == 0

    @given(
        n=st.integers(9, 30),
        frac=st.floats(0.05, 0.95),
        bx=st.integers(2, 4),
        by=st.integers(2, 4),
        ramp=st.sampled_from(["linear", "cubic-smoothstep"]),
    )
    def test_blocks_properties(self, n, frac, bx, by, ramp):
        g = build_grid(2, [1.0, 1.0], [n, n + 3], "neumann")
        p = build_blocks(g, (bx, by), frac / max(bx, by), ramp)
        rep = verify_partition(p)
        assert rep.max_sum_deviation <= 1e-14
        assert rep.bounds_violations == 0 and rep.support_violations == 0

    def test_detects_broken_sum(self):
        g = build_grid(1, [1.0], [33], "dirichlet")
        p = build_stripes(g, 4, 0.1)
        p.chi_nodes[0, 5] += 1e-3
        rep = verify_partition(p)
        assert not rep.passed and rep.max_sum_deviation == pytest.approx(1e-3)

    def test_detects_weight_outside_support(self):
        g = build_grid(1, [1.0], [33], "dirichlet")
        p = build_stripes(g, 4, 0.1)
        p.chi_nodes[0, 10] = 0.5  # x = 11/34, inside a colour-1 stripe only
        p.chi_nodes[1, 10] = 0.5
        rep = verify_partition(p)
        assert rep.support_violations >= 1 and not rep.passed

    def test_detects_adjacent_same_colour(self):
        # gap between same-colour stripes is below one grid spacing
        g = build_grid(1, [1.0], [9], "dirichlet")
        p = build_stripes(g, 4, 0.2)
        assert verify_partition(p).adjacency_violations > 0

    def test_dispatch(self):
        g = build_grid(2, [1.0, 1.0], [9, 9], "dirichlet")
        assert build_partition(g, CoverSpec("blocks", (2, 2), 0.25)).q == 4
        assert build_partition(g, CoverSpec("stripes", (3,), 0.1, colors=3)).q == 3
        assert build_partition(g, CoverSpec("single", (1, 1), 0.0)).q == 1
        with pytest.raises(PartitionError):
            build_partition(g, CoverSpec("rings", (2,), 0.1))
