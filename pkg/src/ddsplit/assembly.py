"""Finite-difference assembly of the full operator and its weighted parts.

The full operator is

    A v = div(lambda grad v) - rho . grad v - sigma v

in flux form: diffusion couples neighbours through face coefficients,
advection uses centred differences (one-sided at Neumann boundary nodes)
and reaction is nodal.  Part ``k`` replaces the face coefficient by
``chi_k * lambda`` and scales the advection and reaction rows by the nodal
``chi_k``.  Since the weights sum to one at every node and face, the parts
add up to the full operator entry by entry up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .domain import DIRICHLET, CoefficientField, Grid, dissipativity_shift
from .partition import Partition


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Linear map on nodal vectors stored as CSR.

    ``active_nodes`` lists the rows that may be nonzero; every other row is
    identically zero.  ``shift`` is the dissipativity shift ``M`` used for
    step restrictions and resolvent bounds.
    """

    matrix: sp.csr_matrix
    active_nodes: np.ndarray
    symmetric: bool
    shift: float = 0.0
    label: str = ""

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, v):
        return self.matrix @ v

    @classmethod
    def from_matrix(cls, matrix, shift: float | None = None, label: str = "") -> "SparseOperator":
        """Wrap an arbitrary square matrix; active rows are its nonzero rows.

        Without an explicit ``shift`` the largest eigenvalue of the symmetric
        part is used (clipped at zero), computed densely for small matrices
        and bounded by Gershgorin discs otherwise.
        """
        m = sp.csr_matrix(matrix, dtype=float)
        m.eliminate_zeros()
        active = np.flatnonzero(np.diff(m.indptr) > 0)
        symmetric = (m != m.T).nnz == 0
        if shift is None:
            sym = 0.5 * (m + m.T)
            if m.shape[0] <= 2000:
                top = np.linalg.eigvalsh(sym.toarray())[-1] if m.shape[0] else 0.0
            else:
                a = abs(sym)
                top = float(np.max(sym.diagonal() + (a.sum(axis=1).A1 - abs(sym.diagonal()))))
            shift = max(0.0, float(top))
        return cls(m, active, bool(symmetric), float(shift), label)


@dataclass(frozen=True, eq=False)
class SplitOperator:
    full: SparseOperator
    parts: tuple[SparseOperator, ...]
    grid: Grid | None = None
    partition: Partition | None = field(default=None, repr=False)

    @property
    def q(self) -> int:
        return len(self.parts)


def _node_index(grid: Grid) -> np.ndarray:
    return np.arange(grid.size).reshape(grid.shape)


def _along(arr: np.ndarray, axis: int, sl: slice) -> np.ndarray:
    idx = [slice(None)] * arr.ndim
    idx[axis] = sl
    return arr[tuple(idx)]


def _assemble(grid: Grid, coeff: CoefficientField, chi_nodes=None, chi_faces=None):
    """Return ``(csr_matrix, active_mask)`` for weights ``chi`` (``None`` means 1)."""
    idx = _node_index(grid)
    rows, cols, vals = [], [], []
    diag = np.zeros(grid.shape)
    active = np.zeros(grid.shape, dtype=bool) if chi_nodes is not None else np.ones(grid.shape, dtype=bool)
    wn = None if chi_nodes is None else chi_nodes.reshape(grid.shape)
    if wn is not None:
        active |= wn > 0

    for axis in range(grid.dim):
        h = grid.spacing[axis]
        n = grid.n[axis]
        c = coeff.lambda_faces[axis]
        if chi_faces is not None:
            wf = chi_faces[axis].reshape(grid.face_shape(axis))
            c = wf * c
        shape = [1] * grid.dim
        shape[axis] = n
        scale = (1.0 / (h * grid.control_widths(axis))).reshape(shape)

        if grid.bc == DIRICHLET:
            c_left = _along(c, axis, slice(0, n))
            c_right = _along(c, axis, slice(1, n + 1))
        else:
            zero = np.zeros_like(_along(c, axis, slice(0, 1)))
            c_left = np.concatenate([zero, c], axis=axis)
            c_right = np.concatenate([c, zero], axis=axis)
        if chi_faces is not None:
            if grid.bc == DIRICHLET:
                w_left = _along(wf, axis, slice(0, n))
                w_right = _along(wf, axis, slice(1, n + 1))
            else:
                zero = np.zeros_like(_along(wf, axis, slice(0, 1)))
                w_left = np.concatenate([zero, wf], axis=axis)
                w_right = np.concatenate([wf, zero], axis=axis)
            active |= (w_left > 0) | (w_right > 0)

        # advection: adv = chi rho / (2h); centred stencil (-adv, 0, +adv) applied as -rho dv/dx
        rho = coeff.rho_nodes[axis]
        adv = rho / (2.0 * h) if wn is None else wn * rho / (2.0 * h)
        up_adv = -adv
        lo_adv = adv.copy()
        diag_adv = np.zeros(grid.shape)
        if grid.bc != DIRICHLET:
            first = [slice(None)] * grid.dim
            last = [slice(None)] * grid.dim
            first[axis] = 0
            last[axis] = n - 1
            first, last = tuple(first), tuple(last)
            up_adv = up_adv.copy()
            up_adv[first] = -2.0 * adv[first]
            diag_adv[first] = 2.0 * adv[first]
            lo_adv[last] = 2.0 * adv[last]
            diag_adv[last] = -2.0 * adv[last]

        diag = diag - (c_left + c_right) * scale + diag_adv

        upper = c_right * scale + up_adv
        lower = c_left * scale + lo_adv
        src_up = _along(idx, axis, slice(0, n - 1))
        dst_up = _along(idx, axis, slice(1, n))
        rows.append(src_up.ravel())
        cols.append(dst_up.ravel())
        vals.append(_along(upper, axis, slice(0, n - 1)).ravel())
        rows.append(dst_up.ravel())
        cols.append(src_up.ravel())
        vals.append(_along(lower, axis, slice(1, n)).ravel())

    sigma = coeff.sigma_nodes if wn is None else wn * coeff.sigma_nodes
    diag = diag - sigma
    rows.insert(0, idx.ravel())
    cols.insert(0, idx.ravel())
    vals.insert(0, diag.ravel())
    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
    )
    m.sort_indices()
    return m, active.ravel()


def _symmetric(m: sp.csr_matrix) -> bool:
    return (m != m.T).nnz == 0


def assemble_full(grid: Grid, coeff: CoefficientField) -> SparseOperator:
    """Assemble ``A`` on all nodes."""
    m, _ = _assemble(grid, coeff)
    return SparseOperator(m, np.arange(grid.size), _symmetric(m), dissipativity_shift(coeff), "A")


def assemble_split(grid: Grid, coeff: CoefficientField, partition: Partition) -> SplitOperator:
    """Assemble ``A`` and the weighted parts ``A_k`` for every colour of ``partition``."""
    full = assemble_full(grid, coeff)
    shift = dissipativity_shift(coeff)
    parts = []
    for k in range(partition.q):
        faces = tuple(f[k] for f in partition.chi_faces)
        m, active = _assemble(grid, coeff, partition.chi_nodes[k], faces)
        m.eliminate_zeros()
        parts.append(SparseOperator(m, np.flatnonzero(active), _symmetric(m), shift, f"A{k + 1}"))
    return SplitOperator(full, tuple(parts), grid, partition)


def splitting_defect(split_op: SplitOperator, n_probes: int = 10, seed: int = 0) -> float:
    """Largest ``||A v - sum_k A_k v||_inf / ||v||_inf`` over seeded Gaussian probes."""
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        v = rng.standard_normal(split_op.full.size)
        acc = np.zeros_like(v)
        for part in split_op.parts:
            acc += part.matrix @ v
        worst = max(worst, float(np.max(np.abs(split_op.full.matrix @ v - acc)) / np.max(np.abs(v))))
    return worst


def operator_norm_inf(op: SparseOperator) -> float:
    """Maximum absolute row sum of ``op``."""
    a = abs(op.matrix)
    return float(a.sum(axis=1).max()) if a.nnz else 0.0


def write_triplets(op: SparseOperator | sp.spmatrix, path) -> None:
    """Dump as ``row col value`` lines (values round-trip exactly)."""
    m = op.matrix if isinstance(op, SparseOperator) else sp.csr_matrix(op)
    coo = m.tocoo()
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write(f"# {m.shape[0]} {m.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v)!r}\n")


def read_triplets(path) -> sp.csr_matrix:
    with open(Path(path), encoding="utf-8") as fh:
        header = fh.readline().lstrip("#").split()
        n_rows, n_cols = int(header[0]), int(header[1])
        data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((n_rows, n_cols))
    return sp.csr_matrix(
        (data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n_rows, n_cols)
    )
