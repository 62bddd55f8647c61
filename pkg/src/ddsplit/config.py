"""Experiment configuration: JSON files with nested sections.

Example::

    {
      "problem": {"dim": 2, "extent": [1, 1], "n": [33, 33], "bc": "dirichlet",
                  "coefficients": {"preset": "advection-x", "lambda": 1.0, "speed": 1.0},
                  "initial": {"preset": "sine-modes"}},
      "cover": {"kind": "blocks", "counts": [2, 2], "delta": 0.25, "ramp": "linear"},
      "scheme": {"kind": "AdditiveFirstOrder", "h": 0.03125, "m": 8, "levels": 5},
      "nonlinearity": {"kind": "none"},
      "solver": {"backend": "direct", "tol": 1e-11, "max_iter": 10000},
      "output": {"csv": "additive.csv"},
      "seed": 0
    }

``scheme.h`` is the coarsest step and ``scheme.m`` the number of steps at
that size, so the final time is ``h * m``; each of the ``levels`` runs
halves the step.  ``scheme.h`` may instead list the steps explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .domain import BC_KINDS, INITIAL_PRESETS, coefficient_preset
from .errors import ParseError, ValidationError
from .partition import COVER_KINDS, RAMPS, CoverSpec
from .schemes import SCHEME_KINDS, SEMILINEAR_KINDS, TWO_PART_KINDS, SolverSettings
from .solver import BACKENDS

COEFFICIENT_PRESETS = ("constant", "advection-x", "smooth-trig")


@dataclass(frozen=True)
class ProblemConfig:
    dim: int
    extent: tuple[float, ...]
    n: tuple[int, ...]
    bc: str = "dirichlet"
    coefficients: dict = field(default_factory=lambda: {"preset": "constant"})
    initial: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SchemeSpec:
    kind: str
    h: tuple[float, ...]
    m: int
    strict: bool = True
    order: tuple[int, ...] | None = None

    @property
    def T(self) -> float:
        return self.h[0] * self.m

    def steps(self) -> list[tuple[float, int]]:
        return [(h, self.m * 2 ** i) for i, h in enumerate(self.h)]


@dataclass(frozen=True)
class NonlinearityConfig:
    kind: str = "none"
    p: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemConfig
    cover: CoverSpec
    scheme: SchemeSpec
    nonlinearity: NonlinearityConfig = NonlinearityConfig()
    solver: SolverSettings = SolverSettings()
    output: dict = field(default_factory=dict)
    seed: int = 0
    verify: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def q(self) -> int:
        return cover_q(self.cover)

    def with_scheme(self, kind: str) -> "ExperimentConfig":
        cfg = replace(self, scheme=replace(self.scheme, kind=kind))
        _check_scheme_cover(cfg)
        return cfg


def cover_q(cover: CoverSpec) -> int:
    if cover.kind == "single":
        return 1
    if cover.kind == "blocks":
        return 4
    return cover.colors


def _section(data: dict, key: str, required: bool = False) -> dict:
    if key not in data:
        if required:
            raise ValidationError(key, "missing section")
        return {}
    val = data[key]
    if not isinstance(val, dict):
        raise ValidationError(key, "must be an object")
    return val


def _unknown(section: dict, allowed, prefix: str):
    for key in section:
        if key not in allowed:
            raise ValidationError(f"{prefix}.{key}", "unknown key")


def _number(val, key, positive=False, integer=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(key, f"expected a number, got {val!r}")
    if integer and int(val) != val:
        raise ValidationError(key, f"expected an integer, got {val!r}")
    if not math.isfinite(val):
        raise ValidationError(key, "must be finite")
    if positive and not val > 0:
        raise ValidationError(key, f"must be positive, got {val!r}")
    return int(val) if integer else float(val)


def _per_dim(val, dim, key, **kw):
    if not isinstance(val, (list, tuple)):
        val = [val] * dim
    if len(val) != dim:
        raise ValidationError(key, f"needs {dim} entries, got {len(val)}")
    return tuple(_number(v, f"{key}[{i}]", **kw) for i, v in enumerate(val))


def _parse_problem(sec: dict) -> ProblemConfig:
    _unknown(sec, ("dim", "extent", "n", "bc", "coefficients", "initial"), "problem")
    dim = _number(sec.get("dim", 1), "problem.dim", integer=True)
    if dim not in (1, 2):
        raise ValidationError("problem.dim", "must be 1 or 2")
    extent = _per_dim(sec.get("extent", 1.0), dim, "problem.extent", positive=True)
    if "n" not in sec:
        raise ValidationError("problem.n", "missing")
    n = _per_dim(sec["n"], dim, "problem.n", integer=True)
    if min(n) < 3:
        raise ValidationError("problem.n", "need at least 3 nodes per dimension")
    bc = str(sec.get("bc", "dirichlet")).lower()
    if bc not in BC_KINDS:
        raise ValidationError("problem.bc", f"must be one of {BC_KINDS}")
    coeff = dict(sec.get("coefficients", {"preset": "constant"}))
    coeff.setdefault("preset", "constant")
    if coeff["preset"] not in COEFFICIENT_PRESETS:
        raise ValidationError("problem.coefficients.preset", f"must be one of {COEFFICIENT_PRESETS}")
    params = {k: v for k, v in coeff.items() if k != "preset"}
    # the preset factory rejects unknown parameters with the offending key
    try:
        coefficient_preset(coeff["preset"], dim, extent, **params)
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ValidationError("problem.coefficients", str(exc)) from exc
    initial = dict(sec.get("initial", {}))
    if "preset" in initial and initial["preset"] not in INITIAL_PRESETS:
        raise ValidationError("problem.initial.preset", f"must be one of {INITIAL_PRESETS}")
    _unknown(initial, ("preset", "amplitude", "interval"), "problem.initial")
    return ProblemConfig(dim, extent, n, bc, coeff, initial)


def _parse_cover(sec: dict, problem: ProblemConfig) -> CoverSpec:
    _unknown(sec, ("kind", "counts", "delta", "ramp", "colors", "axis"), "cover")
    kind = sec.get("kind")
    if kind not in COVER_KINDS:
        raise ValidationError("cover.kind", f"must be one of {COVER_KINDS}")
    ramp = sec.get("ramp", "linear")
    if ramp not in RAMPS:
        raise ValidationError("cover.ramp", f"must be one of {RAMPS}")
    if kind == "single":
        return CoverSpec("single", (1,) * problem.dim, 0.0, ramp, 1)
    if "delta" not in sec:
        raise ValidationError("cover.delta", "missing")
    delta = _number(sec["delta"], "cover.delta", positive=True)
    axis = _number(sec.get("axis", 0), "cover.axis", integer=True)
    if not 0 <= axis < problem.dim:
        raise ValidationError("cover.axis", "out of range")
    if kind == "stripes":
        counts = sec.get("counts", [4])
        counts = (counts,) if not isinstance(counts, (list, tuple)) else tuple(counts)
        counts = (_number(counts[0], "cover.counts", integer=True),)
        colors = _number(sec.get("colors", 2), "cover.colors", integer=True)
        if colors < 1 or counts[0] < max(2, colors):
            raise ValidationError("cover.counts", "need at least max(2, colors) stripes")
        widths = [problem.extent[axis] / counts[0]]
    else:
        if problem.dim != 2:
            raise ValidationError("cover.kind", "blocks need a 2D problem")
        counts = _per_dim(sec.get("counts", [2, 2]), 2, "cover.counts", integer=True)
        if min(counts) < 2:
            raise ValidationError("cover.counts", "need at least 2 blocks per dimension")
        colors = 4
        widths = [L / c for L, c in zip(problem.extent, counts)]
    if delta >= min(widths):
        raise ValidationError("cover.delta", f"overlap {delta:g} must be smaller than the {kind} width {min(widths):g}")
    return CoverSpec(kind, counts, delta, ramp, colors, axis)


def _parse_scheme(sec: dict) -> SchemeSpec:
    _unknown(sec, ("kind", "h", "m", "levels", "strict", "order"), "scheme")
    kind = sec.get("kind")
    if kind not in SCHEME_KINDS:
        raise ValidationError("scheme.kind", f"must be one of {SCHEME_KINDS}")
    if "h" not in sec:
        raise ValidationError("scheme.h", "missing")
    m = _number(sec.get("m", 1), "scheme.m", integer=True)
    if m < 1:
        raise ValidationError("scheme.m", "must be >= 1")
    if isinstance(sec["h"], (list, tuple)):
        hs = tuple(_number(h, f"scheme.h[{i}]", positive=True) for i, h in enumerate(sec["h"]))
        if not hs:
            raise ValidationError("scheme.h", "empty sweep")
        for a, b in zip(hs, hs[1:]):
            if not math.isclose(b, 0.5 * a, rel_tol=1e-12):
                raise ValidationError("scheme.h", "sweep must be geometric with ratio 1/2")
        if "levels" in sec:
            raise ValidationError("scheme.levels", "not allowed with an explicit step list")
    else:
        h0 = _number(sec["h"], "scheme.h", positive=True)
        levels = _number(sec.get("levels", 5), "scheme.levels", integer=True)
        if levels < 1:
            raise ValidationError("scheme.levels", "must be >= 1")
        hs = tuple(h0 / 2 ** i for i in range(levels))
    strict = sec.get("strict", True)
    if not isinstance(strict, bool):
        raise ValidationError("scheme.strict", "must be true or false")
    order = sec.get("order")
    if order is not None:
        order = tuple(_number(o, "scheme.order", integer=True) for o in order)
    return SchemeSpec(kind, hs, m, strict, order)


def _check_scheme_cover(cfg: ExperimentConfig) -> None:
    q = cfg.q
    if cfg.scheme.kind in TWO_PART_KINDS and q != 2:
        raise ValidationError(
            "scheme.kind", f"{cfg.scheme.kind} is only stable for two operators, cover gives q={q}"
        )
    if cfg.scheme.order is not None and sorted(cfg.scheme.order) != list(range(q)):
        raise ValidationError("scheme.order", f"must be a permutation of 0..{q - 1}")
    if cfg.nonlinearity.kind != "none" and cfg.scheme.kind not in SEMILINEAR_KINDS:
        raise ValidationError(
            "nonlinearity.kind", f"a potential needs one of the semilinear schemes {SEMILINEAR_KINDS}"
        )


def validate(data: Any) -> ExperimentConfig:
    """Turn a parsed JSON document into a validated :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ValidationError("<root>", "config must be an object")
    _unknown(data, ("problem", "cover", "scheme", "nonlinearity", "solver", "output", "seed", "verify"), "<root>")
    problem = _parse_problem(_section(data, "problem", required=True))
    cover = _parse_cover(_section(data, "cover", required=True), problem)
    scheme = _parse_scheme(_section(data, "scheme", required=True))

    nl = _section(data, "nonlinearity")
    _unknown(nl, ("kind", "p"), "nonlinearity")
    nl_kind = nl.get("kind", "none")
    if nl_kind not in ("none", "potential"):
        raise ValidationError("nonlinearity.kind", "must be 'none' or 'potential'")
    p = _number(nl.get("p", 3), "nonlinearity.p", integer=True)
    if nl_kind == "potential" and (p < 3 or p % 2 == 0):
        raise ValidationError("nonlinearity.p", "must be an odd integer >= 3")

    sol = _section(data, "solver")
    _unknown(sol, ("backend", "tol", "max_iter"), "solver")
    backend = sol.get("backend", "direct")
    if backend not in BACKENDS:
        raise ValidationError("solver.backend", f"must be one of {BACKENDS}")
    solver = SolverSettings(
        backend,
        _number(sol.get("tol", 1e-11), "solver.tol", positive=True),
        _number(sol.get("max_iter", 10000), "solver.max_iter", positive=True, integer=True),
    )
    output = _section(data, "output")
    _unknown(output, ("csv",), "output")
    verify = _section(data, "verify")
    _unknown(verify, ("probes", "corrupt_partition"), "verify")
    seed = _number(data.get("seed", 0), "seed", integer=True)

    cfg = ExperimentConfig(problem, cover, scheme, NonlinearityConfig(nl_kind, p), solver,
                           dict(output), seed, dict(verify), data)
    _check_scheme_cover(cfg)
    return cfg


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file.

    Raises
    ------
    ParseError
        If the file is missing or not valid JSON.
    ValidationError
        If a value is missing or out of range; ``exc.key`` names it.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return validate(data)
