"""Structured grids, coefficient fields and initial data for the model problem

    u_t = div(lambda grad u) - rho . grad u - sigma u

on a box [0, L_1] x ... with homogeneous Dirichlet or Neumann conditions.

Node layout
-----------
Dirichlet grids carry interior nodes only, ``x_i = (i + 1) dx`` with
``dx = L / (n + 1)``; there are ``n + 1`` faces per grid line, the outermost
two touching the eliminated boundary nodes.

Neumann grids include the boundary nodes, ``x_i = i dx`` with
``dx = L / (n - 1)``; only the ``n - 1`` interior faces exist since the
boundary flux is zero.  Boundary nodes own half a control volume.

Nodal vectors are flattened in C order of the ``(n_x, n_y)`` node array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EllipticityError, GridError, ValidationError

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
BC_KINDS = (DIRICHLET, NEUMANN)


@dataclass(frozen=True)
class Grid:
    dim: int
    extents: tuple[float, ...]
    n: tuple[int, ...]
    spacing: tuple[float, ...]
    bc: str

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    def node_coords(self, axis: int) -> np.ndarray:
        """1D node positions along ``axis``."""
        h = self.spacing[axis]
        i = np.arange(self.n[axis], dtype=float)
        if self.bc == DIRICHLET:
            return (i + 1.0) * h
        return i * h

    def n_faces(self, axis: int) -> int:
        if self.bc == DIRICHLET:
            return self.n[axis] + 1
        return self.n[axis] - 1

    def face_coords(self, axis: int) -> np.ndarray:
        """1D face-midpoint positions along ``axis``."""
        h = self.spacing[axis]
        return (np.arange(self.n_faces(axis), dtype=float) + 0.5) * h

    def face_shape(self, axis: int) -> tuple[int, ...]:
        shape = list(self.n)
        shape[axis] = self.n_faces(axis)
        return tuple(shape)

    def nodes(self) -> tuple[np.ndarray, ...]:
        """Broadcast node coordinate arrays, each of shape ``self.shape``."""
        return tuple(np.meshgrid(*[self.node_coords(a) for a in range(self.dim)], indexing="ij"))

    def faces(self, axis: int) -> tuple[np.ndarray, ...]:
        """Coordinates of the faces normal to ``axis``, each of shape ``face_shape(axis)``."""
        axes = [self.face_coords(a) if a == axis else self.node_coords(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def control_widths(self, axis: int) -> np.ndarray:
        """Control-volume width of every node line along ``axis``."""
        w = np.full(self.n[axis], self.spacing[axis])
        if self.bc == NEUMANN:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    def cell_volumes(self) -> np.ndarray:
        """Flat array of nodal control volumes.

        They sum to the box volume on Neumann grids; on Dirichlet grids the
        boundary nodes are eliminated and the sum is ``prod(n_d * dx_d)``.
        """
        vol = np.ones(self.shape)
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.n[axis]
            vol = vol * self.control_widths(axis).reshape(shape)
        return vol.ravel()


def build_grid(dim: int, extents: Sequence[float], n_per_dim: Sequence[int], bc_kind: str) -> Grid:
    """Build a structured grid on ``[0, L_1] x ... x [0, L_dim]``.

    Raises
    ------
    GridError
        If ``dim`` is not 1 or 2, an extent is non-positive or fewer than
        three nodes are requested along any axis.
    """
    if dim not in (1, 2):
        raise GridError(f"dim must be 1 or 2, got {dim}")
    extents = tuple(float(e) for e in extents)
    n_per_dim = tuple(int(k) for k in n_per_dim)
    if len(extents) != dim or len(n_per_dim) != dim:
        raise GridError("extents and n_per_dim need one entry per dimension")
    if any(e <= 0 for e in extents):
        raise GridError(f"extents must be positive, got {extents}")
    if any(k < 3 for k in n_per_dim):
        raise GridError(f"need at least 3 nodes per dimension, got {n_per_dim}")
    bc = str(bc_kind).lower()
    if bc not in BC_KINDS:
        raise GridError(f"unknown boundary condition {bc_kind!r}")
    if bc == DIRICHLET:
        spacing = tuple(L / (k + 1) for L, k in zip(extents, n_per_dim))
    else:
        spacing = tuple(L / (k - 1) for L, k in zip(extents, n_per_dim))
    return Grid(dim, extents, n_per_dim, spacing, bc)


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------

ScalarFn = Callable[..., np.ndarray]
VectorFn = Callable[..., Sequence[np.ndarray]]


@dataclass(frozen=True)
class CoefficientSpec:
    """Callables ``lam(*x)``, ``rho(*x)`` and ``sigma(*x)`` on coordinate arrays."""

    lam: ScalarFn
    rho: VectorFn
    sigma: ScalarFn
    name: str = "custom"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class CoefficientField:
    lambda_faces: tuple[np.ndarray, ...]
    rho_nodes: np.ndarray
    sigma_nodes: np.ndarray
    lambda0: float
    Psq: float
    sigma0: float

    @staticmethod
    def constants(lambda_faces, rho_nodes, sigma_nodes) -> tuple[float, float, float]:
        lambda0 = min(float(np.min(lf)) for lf in lambda_faces)
        Psq = float(sum(np.max(np.abs(r)) ** 2 for r in rho_nodes))
        sigma0 = float(np.min(sigma_nodes))
        return lambda0, Psq, sigma0


def _full(value, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()


def sample_coefficients(grid: Grid, spec: CoefficientSpec) -> CoefficientField:
    """Sample ``lambda`` at face midpoints and ``rho``, ``sigma`` at nodes."""
    lambda_faces = []
    for axis in range(grid.dim):
        lf = _full(spec.lam(*grid.faces(axis)), grid.face_shape(axis))
        if lf.size and not np.all(lf > 0):
            raise EllipticityError(
                f"lambda must be positive at every face (min {lf.min():g} on axis {axis})"
            )
        lambda_faces.append(lf)
    x = grid.nodes()
    rho = spec.rho(*x)
    if len(rho) != grid.dim:
        raise ValueError(f"rho must have {grid.dim} components")
    rho_nodes = np.stack([_full(r, grid.shape) for r in rho])
    sigma_nodes = _full(spec.sigma(*x), grid.shape)
    lambda0, Psq, sigma0 = CoefficientField.constants(lambda_faces, rho_nodes, sigma_nodes)
    return CoefficientField(tuple(lambda_faces), rho_nodes, sigma_nodes, lambda0, Psq, sigma0)


def dissipativity_shift(coeff: CoefficientField) -> float:
    """Shift constant ``max(0, P^2 / (2 lambda0) - sigma0)``."""
    return max(0.0, coeff.Psq / (2.0 * coeff.lambda0) - coeff.sigma0)


def coefficient_preset(name: str, dim: int, extents: Sequence[float] = None, **params) -> CoefficientSpec:
    """Named coefficient families usable from config files.

    ``constant``
        ``lambda``, ``rho`` (list, one per dim) and ``sigma`` constants.
    ``advection-x``
        constant ``lambda`` and ``sigma``, velocity ``(speed, 0, ...)``.
    ``smooth-trig``
        ``lambda * (1 + amplitude * prod sin(pi x_d / L_d))``, velocity
        ``speed * cos(pi x / L_x)`` along x and reaction
        ``sigma * (1 + amplitude * prod sin)``.
    """
    extents = tuple(extents) if extents is not None else (1.0,) * dim
    lam = float(params.pop("lambda", 1.0))
    sigma = float(params.pop("sigma", 0.0))
    if name == "constant":
        rho = params.pop("rho", [0.0] * dim)
        if len(rho) != dim:
            raise ValidationError("problem.coefficients.rho", f"needs {dim} entries")
        rho = [float(r) for r in rho]
        _reject_extra(name, params)
        return CoefficientSpec(
            lam=lambda *x: lam,
            rho=lambda *x: rho,
            sigma=lambda *x: sigma,
            name=name,
            params={"lambda": lam, "rho": rho, "sigma": sigma},
        )
    if name == "advection-x":
        speed = float(params.pop("speed", 1.0))
        _reject_extra(name, params)
        rho = [speed] + [0.0] * (dim - 1)
        return CoefficientSpec(
            lam=lambda *x: lam,
            rho=lambda *x: rho,
            sigma=lambda *x: sigma,
            name=name,
            params={"lambda": lam, "speed": speed, "sigma": sigma},
        )
    if name == "smooth-trig":
        amp = float(params.pop("amplitude", 0.5))
        speed = float(params.pop("speed", 0.0))
        _reject_extra(name, params)
        if amp < 0:
            raise ValidationError("problem.coefficients.amplitude", "must be >= 0")

        def bump(*x):
            out = 1.0
            for xd, L in zip(x, extents):
                out = out * np.sin(np.pi * xd / L)
            return 1.0 + amp * out

        def rho_fn(*x):
            return [speed * np.cos(np.pi * x[0] / extents[0])] + [0.0] * (dim - 1)

        return CoefficientSpec(
            lam=lambda *x: lam * bump(*x),
            rho=rho_fn,
            sigma=lambda *x: sigma * bump(*x),
            name=name,
            params={"lambda": lam, "amplitude": amp, "speed": speed, "sigma": sigma},
        )
    raise ValidationError("problem.coefficients.preset", f"unknown preset {name!r}")


def _reject_extra(name, params):
    if params:
        key = sorted(params)[0]
        raise ValidationError(f"problem.coefficients.{key}", f"not a parameter of preset {name!r}")


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

INITIAL_PRESETS = ("sine-modes", "cosine-modes", "indicator", "random")


def initial_data(grid: Grid, preset: str = None, *, amplitude: float = 1.0,
                 interval: Sequence[float] = (0.25, 0.5), seed: int = 0) -> np.ndarray:
    """Nodal initial vector ``eta`` of length ``grid.size``.

    The default is the product of the lowest sine modes on Dirichlet grids
    and of the lowest cosine modes on Neumann grids.  ``indicator`` is the
    characteristic function of ``interval`` along x (rough data).
    """
    if preset is None:
        preset = "sine-modes" if grid.bc == DIRICHLET else "cosine-modes"
    x = grid.nodes()
    if preset == "sine-modes":
        out = np.ones(grid.shape)
        for xd, L in zip(x, grid.extents):
            out = out * np.sin(np.pi * xd / L)
    elif preset == "cosine-modes":
        out = np.ones(grid.shape)
        for xd, L in zip(x, grid.extents):
            out = out * np.cos(np.pi * xd / L)
    elif preset == "indicator":
        a, b = (float(v) * grid.extents[0] for v in interval)
        out = ((x[0] >= a) & (x[0] <= b)).astype(float)
    elif preset == "random":
        out = np.random.default_rng(seed).uniform(-1.0, 1.0, grid.shape)
    else:
        raise ValidationError("problem.initial.preset", f"unknown preset {preset!r}")
    return amplitude * np.asarray(out, dtype=float).ravel()
