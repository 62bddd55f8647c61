"""Domain-decomposition operator splitting for parabolic problems.

The spatial operator of ``u_t = div(lambda grad u) - rho . grad u - sigma u``
is discretised on a structured grid and split into weighted parts
``A = sum_k A_k`` using a partition of unity over overlapping subdomains.
Each part is then advanced by one of several splitting time steppers.
"""

from __future__ import annotations

from .assembly import SparseOperator, SplitOperator, assemble_full, assemble_split, splitting_defect
from .config import ExperimentConfig, parse_config, validate
from .domain import (CoefficientField, CoefficientSpec, Grid, build_grid, coefficient_preset,
                     dissipativity_shift, initial_data, sample_coefficients)
from .errors import DDSplitError, ValidationError
from .harness import (ExperimentResult, ReferenceSolution, build_problem, convergence_order,
                      error_norm, reference_linear, reference_semilinear, run_experiment)
from .kernels import BACKEND as KERNEL_BACKEND
from .nonlinear import Potential, eval_F, resolve_F
from .partition import CoverSpec, Partition, build_partition, verify_partition
from .schemes import SchemeConfig, SolverSettings, State, check_restriction, integrate
from .solver import cached_factor, factorize, solve

__version__ = "0.1.0"

__all__ = [
    "CoefficientField", "CoefficientSpec", "CoverSpec", "DDSplitError", "ExperimentConfig",
    "ExperimentResult", "Grid", "KERNEL_BACKEND", "Partition", "Potential", "ReferenceSolution",
    "SchemeConfig", "SolverSettings", "SparseOperator", "SplitOperator", "State", "ValidationError",
    "assemble_full", "assemble_split", "build_grid", "build_partition", "build_problem",
    "cached_factor", "check_restriction", "coefficient_preset", "convergence_order",
    "dissipativity_shift", "error_norm", "eval_F", "factorize", "initial_data", "integrate",
    "parse_config", "reference_linear", "reference_semilinear", "resolve_F", "run_experiment",
    "sample_coefficients", "solve", "splitting_defect", "validate", "verify_partition",
    "__version__",
]
