"""Grid scans of the steady-state statistics over the model parameters."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np

from .errors import (
    DegenerateSteadyStateError,
    InsufficientDataError,
    InvalidParameterError,
    PhononBlockError,
    SolverFailureError,
    SweepError,
    UndefinedStatisticsError,
)
from .fock import FockBasis
from .lindblad import build_liouvillian, steady_state
from .model import RwaParams, build_rwa_hamiltonian
from .observables import phonon_stats

AXIS_NAMES = ("delta", "j", "f", "u", "n_th", "n_max")
MAX_AXES = 3
TRUNCATION_TOL = 1e-5
DEFAULT_N_MAX = 10


@dataclass(frozen=True)
class SolverOptions:
    method: str = "linear"
    solver: str = "auto"
    tol: float = 1e-12
    truncation_tol: float = TRUNCATION_TOL
    seed: int = 0
    kerr: str = "normal_ordered"


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise InvalidParameterError(f"unknown axis {self.name!r}; expected one of {AXIS_NAMES}")
        values = tuple(self.values)
        if not values:
            raise InvalidParameterError(f"axis {self.name!r} is empty")
        if self.name == "n_max":
            if any(isinstance(v, bool) or int(v) != v or v < 1 for v in values):
                raise InvalidParameterError("n_max values must be positive integers")
            values = tuple(int(v) for v in values)
        else:
            values = tuple(float(v) for v in values)
            if not all(math.isfinite(v) for v in values):
                raise InvalidParameterError(f"axis {self.name!r} has non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def linear(cls, name, start, stop, num):
        return cls(name, np.linspace(start, stop, int(num)).tolist())

    @classmethod
    def log(cls, name, start, stop, num):
        if not (start > 0 and stop > 0):
            raise InvalidParameterError("log axes need positive bounds")
        return cls(name, np.geomspace(start, stop, int(num)).tolist())


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple
    fixed: RwaParams
    n_max: int = DEFAULT_N_MAX
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) > MAX_AXES:
            raise InvalidParameterError(f"at most {MAX_AXES} axes, got {len(axes)}")
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise InvalidParameterError(f"duplicate axis names: {names}")
        if not isinstance(self.n_max, int) or self.n_max < 1:
            raise InvalidParameterError(f"n_max must be a positive integer, got {self.n_max!r}")
        object.__setattr__(self, "axes", axes)

    @property
    def shape(self) -> tuple:
        return tuple(len(a.values) for a in self.axes)

    def points(self) -> list[dict]:
        names = [a.name for a in self.axes]
        return [dict(zip(names, combo)) for combo in product(*(a.values for a in self.axes))]


@dataclass(frozen=True)
class PointResult:
    coords: dict
    g2: float | None
    mean_n1: float | None
    mean_n2: float | None
    residual: float | None
    wall_ms: float
    failure_reason: str | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.failure_reason is None


@dataclass(frozen=True)
class SweepResult:
    axes: tuple  # axis names in spec order
    points: tuple  # PointResult, row-major over the axes

    def values(self, name: str = "g2") -> np.ndarray:
        return np.array([np.nan if getattr(p, name) is None else getattr(p, name) for p in self.points])

    @property
    def n_failed(self) -> int:
        return sum(not p.ok for p in self.points)


def _failure(coords, reason, message, t0, residual=None):
    return PointResult(coords, None, None, None, residual, (time.perf_counter() - t0) * 1e3, reason, message)


def evaluate_point(params: RwaParams, n_max: int = DEFAULT_N_MAX,
                   options: SolverOptions = SolverOptions(), coords: dict | None = None) -> PointResult:
    """Steady state and statistics at one parameter set; errors become failure records."""
    coords = {} if coords is None else dict(coords)
    t0 = time.perf_counter()
    try:
        basis = FockBasis(n_max, n_max)
        h = build_rwa_hamiltonian(params, basis, options.kerr)
        L = build_liouvillian(h, params, basis)
        rho = steady_state(L, method=options.method, solver=options.solver, tol=options.tol, seed=options.seed)
        residual = rho.info["residual"]
        stats = phonon_stats(rho, basis)
    except SolverFailureError as exc:
        return _failure(coords, "solver-nonconvergence", str(exc), t0, exc.residual)
    except DegenerateSteadyStateError as exc:
        return _failure(coords, "degenerate-steady-state", str(exc), t0)
    except UndefinedStatisticsError as exc:
        return _failure(coords, "undefined-g2", str(exc), t0, locals().get("residual"))
    except PhononBlockError as exc:
        return _failure(coords, "invalid-parameter", str(exc), t0)
    if stats.top_level_population > options.truncation_tol:
        msg = f"top Fock level holds {stats.top_level_population:.3e} > {options.truncation_tol:g}"
        return _failure(coords, "truncation-overflow", msg, t0, residual)
    return PointResult(coords, stats.g2_mode1, stats.mean_n1, stats.mean_n2, residual,
                       (time.perf_counter() - t0) * 1e3)


def _run_one(args):
    spec, coords = args
    changes = {k: v for k, v in coords.items() if k != "n_max"}
    try:
        params = spec.fixed.replace(**changes)
    except InvalidParameterError as exc:
        return PointResult(coords, None, None, None, None, 0.0, "invalid-parameter", str(exc))
    return evaluate_point(params, coords.get("n_max", spec.n_max), spec.options, coords)


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Evaluate every grid point; ``threads > 1`` fans out over processes.

    Results are assembled in grid order regardless of completion order.
    """
    tasks = [(spec, coords) for coords in spec.points()]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    if all(not r.ok for r in results):
        reasons = sorted({r.failure_reason for r in results})
        raise SweepError(f"all {len(results)} points failed ({', '.join(reasons)}): {results[0].message}")
    return SweepResult(tuple(a.name for a in spec.axes), tuple(results))


@dataclass(frozen=True)
class Minimum:
    raw_value: float
    raw_location: float
    refined_value: float | None
    refined_location: float | None
    at_boundary: bool
    index: int


def find_minimum(result: SweepResult, along: str | None = None, key: str = "g2",
                 log_scale: bool = False) -> Minimum:
    """Grid argmin of ``key`` plus a parabola through it and its neighbors.

    ``log_scale`` fits the parabola in log(coordinate), which suits
    geometrically spaced axes.  At an endpoint no refinement is attempted.
    """
    if len(result.axes) != 1:
        raise InvalidParameterError("find_minimum needs a one-axis result")
    along = result.axes[0] if along is None else along
    if along != result.axes[0]:
        raise InvalidParameterError(f"result has no axis {along!r}")
    good = [p for p in result.points if p.ok and getattr(p, key) is not None]
    if len(good) < 3:
        raise InsufficientDataError(f"need >= 3 successful points, got {len(good)}")
    x = np.array([p.coords[along] for p in good], dtype=float)
    y = np.array([getattr(p, key) for p in good], dtype=float)
    return minimum_of_samples(x, y, log_scale)


def minimum_of_samples(x, y, log_scale: bool = False) -> Minimum:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 3:
        raise InsufficientDataError(f"need >= 3 samples, got {x.size}")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    k = int(np.argmin(y))
    if k == 0 or k == x.size - 1:
        return Minimum(float(y[k]), float(x[k]), None, None, True, k)
    u = np.log(x[k - 1:k + 2]) if log_scale else x[k - 1:k + 2]
    c2, c1, c0 = np.polyfit(u - u[1], y[k - 1:k + 2], 2)
    if c2 <= 0:
        return Minimum(float(y[k]), float(x[k]), None, None, False, k)
    du = -c1 / (2 * c2)
    loc = u[1] + du
    return Minimum(float(y[k]), float(x[k]), float(c0 - c1 * c1 / (4 * c2)),
                   float(math.exp(loc) if log_scale else loc), False, k)


def point_record(p: PointResult) -> dict:
    return asdict(p)
