"""Partitions of unity over overlapping covers of a box.

Weights are closed-form trapezoid profiles evaluated directly at nodes and
at face midpoints.  Along one axis the domain is cut into ``n`` equal
segments; segment ``s`` has weight 1 on its core, ramps linearly (or with a
cubic smoothstep) over a band of width ``delta`` centred on each interior
cut and vanishes beyond it.  Segments are assigned colours cyclically and
the weight of colour ``k`` is the sum of its segments' profiles, so every
colour is a union of disjoint pieces that can be solved independently.

Stripes use one axis (two colours by default); blocks are tensor products
of two axes with four colours ``2 * (i % 2) + (j % 2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import Grid
from .errors import PartitionError

logger = logging.getLogger(__name__)

RAMPS = ("linear", "cubic-smoothstep")
COVER_KINDS = ("stripes", "blocks", "single")


@dataclass(frozen=True)
class CoverSpec:
    kind: str
    counts: tuple[int, ...]
    delta: float
    ramp: str = "linear"
    colors: int = 2
    axis: int = 0


@dataclass(frozen=True, eq=False)
class Partition:
    """Sampled partition of unity.

    ``chi_nodes`` has shape ``(q, grid.size)``; ``chi_faces[axis]`` has shape
    ``(q, n_faces_along_axis * ...)`` flattened in C order of
    ``grid.face_shape(axis)``.  ``boxes[k]`` lists the closed boxes forming
    subdomain ``k``; ``components[k]`` holds the node indices of each box and
    ``supports[k]`` their union.
    """

    grid: Grid
    cover: CoverSpec
    q: int
    chi_nodes: np.ndarray
    chi_faces: tuple[np.ndarray, ...]
    boxes: tuple[tuple[tuple[tuple[float, float], ...], ...], ...]
    components: tuple[tuple[np.ndarray, ...], ...]
    supports: tuple[np.ndarray, ...]
    delta: float = field(default=0.0)


def _ramp(t: np.ndarray, kind: str) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    if kind == "linear":
        return t
    return t * t * (3.0 - 2.0 * t)


def _segment_profiles(x: np.ndarray, length: float, n_seg: int, delta: float, ramp: str) -> np.ndarray:
    """Profiles of the ``n_seg`` segments at positions ``x``; shape ``(n_seg,) + x.shape``.

    Built as differences of consecutive cut ramps so that they telescope to 1.
    """
    width = length / n_seg
    cuts = [np.ones_like(x)]
    for s in range(1, n_seg):
        cuts.append(_ramp((x - (s * width - 0.5 * delta)) / delta, ramp))
    cuts.append(np.zeros_like(x))
    return np.stack([cuts[s] - cuts[s + 1] for s in range(n_seg)])


def _segment_intervals(length: float, n_seg: int, delta: float) -> list[tuple[float, float]]:
    width = length / n_seg
    out = []
    for s in range(n_seg):
        lo = 0.0 if s == 0 else s * width - 0.5 * delta
        hi = length if s == n_seg - 1 else (s + 1) * width + 0.5 * delta
        out.append((lo, hi))
    return out


def _check_delta(length: float, n_seg: int, delta: float, what: str) -> None:
    if not delta > 0:
        raise PartitionError(f"overlap width delta must be positive, got {delta}")
    width = length / n_seg
    if delta >= width:
        raise PartitionError(
            f"overlap width delta={delta:g} must be smaller than the {what} width {width:g}"
        )


def _warn_resolution(grid: Grid, delta: float) -> None:
    if delta < 2.0 * min(grid.spacing):
        logger.warning("delta=%g is below two grid spacings (%g); ramps are under-resolved",
                       delta, min(grid.spacing))


def _nodes_in_box(grid: Grid, box) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    for axis, (lo, hi) in enumerate(box):
        x = grid.node_coords(axis)
        sel = (x >= lo) & (x <= hi)
        shape = [1] * grid.dim
        shape[axis] = grid.n[axis]
        mask = mask & sel.reshape(shape)
    return np.flatnonzero(mask.ravel())


def _assemble(grid: Grid, cover: CoverSpec, weight_fn, boxes) -> Partition:
    chi_nodes = np.stack([w.ravel() for w in weight_fn(*grid.nodes())])
    chi_faces = tuple(
        np.stack([w.ravel() for w in weight_fn(*grid.faces(axis))]) for axis in range(grid.dim)
    )
    components = tuple(tuple(_nodes_in_box(grid, b) for b in boxes_k) for boxes_k in boxes)
    supports = tuple(
        np.unique(np.concatenate(comps)) if comps else np.zeros(0, dtype=np.intp)
        for comps in components
    )
    return Partition(
        grid=grid,
        cover=cover,
        q=len(boxes),
        chi_nodes=chi_nodes,
        chi_faces=chi_faces,
        boxes=boxes,
        components=components,
        supports=supports,
        delta=cover.delta,
    )


def build_single(grid: Grid) -> Partition:
    """Trivial partition ``q = 1``, ``chi = 1``."""
    cover = CoverSpec("single", (1,) * grid.dim, delta=0.0)
    box = tuple((0.0, L) for L in grid.extents)

    def weights(*x):
        return [np.ones_like(x[0])]

    return _assemble(grid, cover, weights, ((box,),))


def build_stripes(grid: Grid, n_stripes: int, delta: float, ramp: str = "linear",
                  colors: int = 2, axis: int = 0) -> Partition:
    """Overlapping stripes normal to ``axis`` with ``colors`` alternating colours.

    Raises
    ------
    PartitionError
        If the overlap is not narrower than a stripe, or there are fewer
        stripes than colours.
    """
    if ramp not in RAMPS:
        raise PartitionError(f"unknown ramp {ramp!r}")
    if colors < 1 or n_stripes < max(2, colors):
        raise PartitionError(f"need at least max(2, colors) stripes, got {n_stripes}")
    if not 0 <= axis < grid.dim:
        raise PartitionError(f"axis {axis} out of range")
    length = grid.extents[axis]
    _check_delta(length, n_stripes, delta, "stripe")
    _warn_resolution(grid, delta)
    cover = CoverSpec("stripes", (n_stripes,), float(delta), ramp, colors, axis)

    def weights(*x):
        prof = _segment_profiles(x[axis], length, n_stripes, delta, ramp)
        return [prof[k::colors].sum(axis=0) for k in range(colors)]

    full = [(0.0, L) for L in grid.extents]
    intervals = _segment_intervals(length, n_stripes, delta)
    boxes = []
    for k in range(colors):
        comps = []
        for s in range(k, n_stripes, colors):
            box = list(full)
            box[axis] = intervals[s]
            comps.append(tuple(box))
        boxes.append(tuple(comps))
    return _assemble(grid, cover, weights, tuple(boxes))


def build_blocks(grid: Grid, blocks_per_dim: Sequence[int], delta: float, ramp: str = "linear") -> Partition:
    """Four-colour overlapping blocks on a 2D grid (tensor products of 1D profiles)."""
    if grid.dim != 2:
        raise PartitionError("blocks need a 2D grid")
    if ramp not in RAMPS:
        raise PartitionError(f"unknown ramp {ramp!r}")
    nb = tuple(int(b) for b in blocks_per_dim)
    if len(nb) != 2 or min(nb) < 2:
        raise PartitionError(f"need at least 2 blocks per dimension, got {blocks_per_dim}")
    for axis in range(2):
        _check_delta(grid.extents[axis], nb[axis], delta, "block")
    _warn_resolution(grid, delta)
    cover = CoverSpec("blocks", nb, float(delta), ramp, 4)
    Lx, Ly = grid.extents

    def weights(x, y):
        px = _segment_profiles(x, Lx, nb[0], delta, ramp)
        py = _segment_profiles(y, Ly, nb[1], delta, ramp)
        fx = [px[a::2].sum(axis=0) for a in range(2)]
        fy = [py[b::2].sum(axis=0) for b in range(2)]
        return [fx[a] * fy[b] for a in range(2) for b in range(2)]

    ix = _segment_intervals(Lx, nb[0], delta)
    iy = _segment_intervals(Ly, nb[1], delta)
    boxes = []
    for a in range(2):
        for b in range(2):
            boxes.append(tuple((ix[i], iy[j]) for i in range(a, nb[0], 2) for j in range(b, nb[1], 2)))
    return _assemble(grid, cover, weights, tuple(boxes))


def build_partition(grid: Grid, cover: CoverSpec) -> Partition:
    if cover.kind == "single":
        return build_single(grid)
    if cover.kind == "stripes":
        return build_stripes(grid, cover.counts[0], cover.delta, cover.ramp, cover.colors, cover.axis)
    if cover.kind == "blocks":
        return build_blocks(grid, cover.counts, cover.delta, cover.ramp)
    raise PartitionError(f"unknown cover kind {cover.kind!r}")


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


@dataclass
class PartitionReport:
    max_sum_deviation: float
    bounds_violations: int
    support_violations: int
    adjacency_violations: int
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.max_sum_deviation <= self.tol
            and self.bounds_violations == 0
            and self.support_violations == 0
            and self.adjacency_violations == 0
        )


def _inside_boxes(coords, boxes) -> np.ndarray:
    inside = np.zeros(coords[0].shape, dtype=bool)
    for box in boxes:
        m = np.ones(coords[0].shape, dtype=bool)
        for xd, (lo, hi) in zip(coords, box):
            m &= (xd >= lo) & (xd <= hi)
        inside |= m
    return inside.ravel()


def _dilate(grid: Grid, idx: np.ndarray) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    mask.ravel()[idx] = True
    out = mask.copy()
    for axis in range(grid.dim):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        out[tuple(lo)] |= mask[tuple(hi)]
        out[tuple(hi)] |= mask[tuple(lo)]
    return out.ravel()


def verify_partition(partition: Partition, tol: float = 1e-14) -> PartitionReport:
    """Check the partition-of-unity conditions at all nodes and faces.

    Counts weights outside ``[0, 1]``, nonzero weights outside the closed
    subdomain boxes and pairs of same-colour components that share a node
    or a stencil neighbour.
    """
    grid = partition.grid
    samples = [(partition.chi_nodes, grid.nodes())]
    samples += [(partition.chi_faces[a], grid.faces(a)) for a in range(grid.dim)]

    dev = 0.0
    bounds = 0
    support = 0
    for chi, coords in samples:
        if chi.shape[1] == 0:
            continue
        dev = max(dev, float(np.max(np.abs(chi.sum(axis=0) - 1.0))))
        bounds += int(np.count_nonzero((chi < 0.0) | (chi > 1.0)))
        for k in range(partition.q):
            outside = ~_inside_boxes(coords, partition.boxes[k])
            support += int(np.count_nonzero(chi[k][outside] != 0.0))

    adjacency = 0
    for comps in partition.components:
        dilated = [_dilate(grid, c) for c in comps]
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                if np.any(dilated[i][comps[j]]):
                    adjacency += 1
    return PartitionReport(dev, bounds, support, adjacency, tol)
