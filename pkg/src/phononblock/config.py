"""TOML run configuration with strict key checking.

Layout (every section optional unless its subcommand is run)::

    [g2]                 # delta, j, f, u, n_th required; gamma, n_max optional
    [sweep]              # n_max; [sweep.fixed] like [g2]; [[sweep.axes]]
    [coupling]           # DiskPair fields, optional gamma and h0
    [design]             # GeometryConfig fields, material, temperature|dimension
    [solver]             # method, solver, tol, truncation_tol, seed, kerr
    [output]             # path, format ("csv" or "json"), timing

A sweep axis is ``{name, values}`` or ``{name, start, stop, num, scale}`` with
``scale`` either ``"linear"`` or ``"log"``.  Command-line flags override file
values key by key.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .coulomb import DiskPair
from .design import Geometry, GeometryConfig
from .errors import ConfigError, PhononBlockError
from .model import RwaParams
from .sweep import DEFAULT_N_MAX, Axis, SolverOptions, SweepSpec

SUBCOMMANDS = ("g2", "sweep", "coupling", "design", "validate")
FORMATS = ("csv", "json")

_PARAM_REQUIRED = ("delta", "j", "f", "u", "n_th")
_PARAM_OPTIONAL = {"gamma": 1.0}
_SOLVER_KEYS = {"method": str, "solver": str, "tol": float, "truncation_tol": float, "seed": int, "kerr": str}
_OUTPUT_KEYS = {"path": str, "format": str, "timing": bool}
_PAIR_KEYS = ("radius", "charge_q1", "charge_q2", "separation", "mass_m1", "mass_m2", "omega_m")
_GEOMETRY_KEYS = ("thickness", "radius", "depth", "diameter", "length", "r", "c", "d")
_TOP_KEYS = set(SUBCOMMANDS) - {"validate"} | {"solver", "output"}


@dataclass(frozen=True)
class OutputOptions:
    path: str | None = None
    format: str = "csv"
    timing: bool = False


@dataclass(frozen=True)
class DesignRequest:
    geometry: GeometryConfig | None = None
    material: str | None = None
    temperature: float | None = None
    dimension: float | None = None
    table: int | None = None


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: RwaParams | None = None
    n_max: int = DEFAULT_N_MAX
    sweep: SweepSpec | None = None
    pair: DiskPair | None = None
    gamma: float | None = None
    h0: float | None = None
    design: DesignRequest | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    output: OutputOptions = field(default_factory=OutputOptions)
    threads: int = 1
    materials_path: str | None = None


def _check_keys(table: dict, allowed, where: str):
    for key in table:
        if key not in allowed:
            raise ConfigError("unknown key", key=f"{where}.{key}" if where else key)


def _typed(value, kind, key):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {type(value).__name__}", key=key)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"expected an integer, got {type(value).__name__}", key=key)
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"expected {kind.__name__}, got {type(value).__name__}", key=key)
    return value


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError("expected a table", key=name)
    return dict(sec)


def _params(table: dict, where: str) -> RwaParams:
    missing = [k for k in _PARAM_REQUIRED if k not in table or table[k] is None]
    if missing:
        raise ConfigError(f"missing required field(s): {', '.join(missing)}", key=where)
    values = {k: _typed(table[k], float, f"{where}.{k}") for k in _PARAM_REQUIRED}
    for k, default in _PARAM_OPTIONAL.items():
        v = table.get(k)
        values[k] = default if v is None else _typed(v, float, f"{where}.{k}")
    try:
        return RwaParams(**values)
    except PhononBlockError as exc:
        raise ConfigError(str(exc), key=where) from exc


def _n_max(value, key) -> int:
    n = _typed(value, int, key)
    if n < 1:
        raise ConfigError("must be a positive integer", key=key)
    return n


def _axis(entry, key) -> Axis:
    if not isinstance(entry, dict):
        raise ConfigError("expected a table", key=key)
    _check_keys(entry, {"name", "values", "start", "stop", "num", "scale"}, key)
    if "name" not in entry:
        raise ConfigError("missing required field(s): name", key=key)
    name = _typed(entry["name"], str, f"{key}.name")
    try:
        if "values" in entry:
            if any(k in entry for k in ("start", "stop", "num", "scale")):
                raise ConfigError("give either values or a range, not both", key=key)
            values = entry["values"]
            if not isinstance(values, list):
                raise ConfigError("expected a list", key=f"{key}.values")
            return Axis(name, [_typed(v, float, f"{key}.values") for v in values])
        missing = [k for k in ("start", "stop", "num") if k not in entry]
        if missing:
            raise ConfigError(f"missing required field(s): {', '.join(missing)}", key=key)
        scale = _typed(entry.get("scale", "linear"), str, f"{key}.scale")
        start = _typed(entry["start"], float, f"{key}.start")
        stop = _typed(entry["stop"], float, f"{key}.stop")
        num = _typed(entry["num"], int, f"{key}.num")
        if scale == "linear":
            return Axis.linear(name, start, stop, num)
        if scale == "log":
            return Axis.log(name, start, stop, num)
        raise ConfigError(f"scale must be 'linear' or 'log', got {scale!r}", key=f"{key}.scale")
    except ConfigError:
        raise
    except PhononBlockError as exc:
        raise ConfigError(str(exc), key=key) from exc


def parse_axis_flag(text: str) -> dict:
    """``name=v1,v2,...`` or ``name=log:start:stop:num`` (also ``lin:``)."""
    if "=" not in text:
        raise ConfigError(f"axis flag {text!r} must look like name=values", key="--axis")
    name, rest = text.split("=", 1)
    try:
        if rest.startswith(("log:", "lin:", "linear:")):
            scale, start, stop, num = rest.split(":")
            return {"name": name, "start": float(start), "stop": float(stop), "num": int(num),
                    "scale": "log" if scale == "log" else "linear"}
        return {"name": name, "values": [float(v) for v in rest.split(",") if v]}
    except ValueError as exc:
        raise ConfigError(f"cannot parse axis {text!r}: {exc}", key="--axis") from exc


def load_document(path: str | Path | None = None, text: str | None = None) -> dict:
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"file not found: {p}", key="--config")
        text = p.read_text()
    if text is None:
        return {}
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed document: {exc}", key="--config") from exc


def parse_config(subcommand: str, doc: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge a parsed document with flag overrides into a validated RunConfig.

    ``overrides`` maps dotted section keys (``"g2.delta"``, ``"output.format"``)
    or top-level ``threads`` / ``materials`` to values; ``None`` means unset.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}", key="subcommand")
    doc = dict(doc or {})
    _check_keys(doc, _TOP_KEYS, "")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    sections = {name: _section(doc, name) for name in _TOP_KEYS}
    for key, value in overrides.items():
        if "." in key:
            sec, sub = key.split(".", 1)
            if sub.startswith("fixed."):
                fixed = dict(sections[sec].get("fixed", {}))
                fixed[sub.split(".", 1)[1]] = value
                sections[sec]["fixed"] = fixed
            else:
                sections[sec][sub] = value

    _check_keys(sections["solver"], _SOLVER_KEYS, "solver")
    solver = SolverOptions(**{k: _typed(v, _SOLVER_KEYS[k], f"solver.{k}") for k, v in sections["solver"].items()})
    _check_keys(sections["output"], _OUTPUT_KEYS, "output")
    out = {k: _typed(v, _OUTPUT_KEYS[k], f"output.{k}") for k, v in sections["output"].items()}
    output = OutputOptions(**out)
    if output.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {output.format!r}", key="output.format")

    threads = _typed(overrides.get("threads", 1), int, "threads")
    if threads < 1:
        raise ConfigError("must be >= 1", key="threads")
    materials = overrides.get("materials")
    if materials is not None and not Path(materials).is_file():
        raise ConfigError(f"file not found: {materials}", key="--materials")
    common = dict(subcommand=subcommand, solver=solver, output=output, threads=threads,
                  materials_path=materials)

    if subcommand == "g2":
        sec = sections["g2"]
        _check_keys(sec, set(_PARAM_REQUIRED) | set(_PARAM_OPTIONAL) | {"n_max"}, "g2")
        n_max = _n_max(sec.pop("n_max", DEFAULT_N_MAX), "g2.n_max")
        return RunConfig(params=_params(sec, "g2"), n_max=n_max, **common)

    if subcommand == "sweep":
        sec = sections["sweep"]
        _check_keys(sec, {"n_max", "fixed", "axes"}, "sweep")
        fixed = sec.get("fixed", {})
        if not isinstance(fixed, dict):
            raise ConfigError("expected a table", key="sweep.fixed")
        _check_keys(fixed, set(_PARAM_REQUIRED) | set(_PARAM_OPTIONAL), "sweep.fixed")
        axes_raw = sec.get("axes", [])
        if not isinstance(axes_raw, list) or not axes_raw:
            raise ConfigError("at least one axis is required", key="sweep.axes")
        axes = [_axis(a, f"sweep.axes[{i}]") for i, a in enumerate(axes_raw)]
        # Swept parameters need no fixed value.
        fixed = dict(fixed)
        for a in axes:
            if a.name in _PARAM_REQUIRED and a.name not in fixed:
                fixed[a.name] = a.values[0]
        n_max = _n_max(sec.get("n_max", DEFAULT_N_MAX), "sweep.n_max")
        try:
            spec = SweepSpec(tuple(axes), _params(fixed, "sweep.fixed"), n_max, solver)
        except ConfigError:
            raise
        except PhononBlockError as exc:
            raise ConfigError(str(exc), key="sweep") from exc
        return RunConfig(sweep=spec, n_max=n_max, **common)

    if subcommand == "coupling":
        sec = sections["coupling"]
        _check_keys(sec, set(_PAIR_KEYS) | {"gamma", "h0"}, "coupling")
        missing = [k for k in _PAIR_KEYS if k not in sec]
        if missing:
            raise ConfigError(f"missing required field(s): {', '.join(missing)}", key="coupling")
        values = {k: _typed(sec[k], float, f"coupling.{k}") for k in _PAIR_KEYS}
        try:
            pair = DiskPair(**values)
        except PhononBlockError as exc:
            raise ConfigError(str(exc), key="coupling") from exc
        gamma = None if sec.get("gamma") is None else _typed(sec["gamma"], float, "coupling.gamma")
        h0 = None if sec.get("h0") is None else _typed(sec["h0"], float, "coupling.h0")
        return RunConfig(pair=pair, gamma=gamma, h0=h0, **common)

    if subcommand == "design":
        sec = sections["design"]
        _check_keys(sec, set(_GEOMETRY_KEYS) | {"kind", "material", "temperature", "dimension", "table"},
                    "design")
        table = sec.get("table")
        if table is not None:
            table = _typed(table, int, "design.table")
            if table not in (1, 2, 3):
                raise ConfigError("must be 1, 2 or 3", key="design.table")
            return RunConfig(design=DesignRequest(table=table), **common)
        if "kind" not in sec:
            raise ConfigError("missing required field(s): kind (or choose a table)", key="design")
        kind = _typed(sec["kind"], str, "design.kind")
        if kind not in {g.value for g in Geometry}:
            raise ConfigError(f"unknown geometry {kind!r}", key="design.kind")
        dims = {k: _typed(sec[k], float, f"design.{k}") for k in _GEOMETRY_KEYS if k in sec}
        try:
            geometry = GeometryConfig(Geometry(kind), **dims)
        except PhononBlockError as exc:
            raise ConfigError(str(exc), key="design") from exc
        t = None if sec.get("temperature") is None else _typed(sec["temperature"], float, "design.temperature")
        z = None if sec.get("dimension") is None else _typed(sec["dimension"], float, "design.dimension")
        if t is not None and z is not None:
            raise ConfigError("give temperature or dimension, not both", key="design")
        for key, v in (("temperature", t), ("dimension", z)):
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ConfigError("must be positive", key=f"design.{key}")
        material = sec.get("material")
        material = None if material is None else _typed(material, str, "design.material")
        return RunConfig(design=DesignRequest(geometry, material, t, z), **common)

    return RunConfig(**common)
