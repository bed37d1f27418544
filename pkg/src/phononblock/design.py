"""Temperature-size trade-off for resonator geometries and materials.

For every geometry the operating temperature and the smallest dimension obey
``T_sys * Z_sys = P`` with ``P = alpha_g * P_a * P_g * P_m * beta``:

* ``alpha_g`` -- mode constant over 2π (2.405 for a clamped membrane, 22.373
  for a clamped-clamped beam),
* ``P_a`` -- aspect ratio term (t/R, H²/L² or D²/L²),
* ``P_g`` -- cross-section term (radius of gyration over depth),
* ``P_m`` -- sqrt(strength/density) for membranes, sqrt(E/density) for beams.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .constants import BETA_PRINTED
from .errors import DomainError, InvalidMaterialError, InvalidParameterError

MEMBRANE_MODE = 2.405
BEAM_MODE = 22.373
REFRIGERATION_LIMIT = 3e-3  # K
THIN_DISC_LIMIT = 0.2
SLENDER_BEAM_LIMIT = 0.1


class ApproximationWarning(UserWarning):
    """A thin-disc or slender-beam bound is exceeded."""


class Geometry(str, Enum):
    CIRCULAR_MEMBRANE = "circular_membrane"
    HOLLOW_RECT_BEAM = "hollow_rect_beam"
    HOLLOW_CIRC_BEAM = "hollow_circ_beam"
    SOLID_RECT_BEAM = "solid_rect_beam"
    SOLID_CIRC_BEAM = "solid_circ_beam"
    I_BEAM = "i_beam"

    @property
    def is_beam(self) -> bool:
        return self is not Geometry.CIRCULAR_MEMBRANE

    @property
    def is_circular_section(self) -> bool:
        return self in (Geometry.HOLLOW_CIRC_BEAM, Geometry.SOLID_CIRC_BEAM)


LABELS = {
    Geometry.CIRCULAR_MEMBRANE: "Circular Membrane",
    Geometry.HOLLOW_RECT_BEAM: "H-Rectangular Beam",
    Geometry.HOLLOW_CIRC_BEAM: "H-Circular Beam",
    Geometry.SOLID_RECT_BEAM: "S-Rectangular Beam",
    Geometry.SOLID_CIRC_BEAM: "S-Circular Beam",
    Geometry.I_BEAM: "I-Beam",
}


@dataclass(frozen=True)
class GeometryConfig:
    """Resonator shape.  Lengths in meters; r, c, d are removed fractions.

    Membranes use ``thickness`` and ``radius``; rectangular-section beams use
    ``depth`` and ``length``; circular-section beams use ``diameter`` and
    ``length``.
    """

    kind: Geometry
    thickness: float | None = None
    radius: float | None = None
    depth: float | None = None
    diameter: float | None = None
    length: float | None = None
    r: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Geometry(self.kind))
        needed = {
            Geometry.CIRCULAR_MEMBRANE: ("thickness", "radius"),
            Geometry.HOLLOW_CIRC_BEAM: ("diameter", "length"),
            Geometry.SOLID_CIRC_BEAM: ("diameter", "length"),
        }.get(self.kind, ("depth", "length"))
        for name in needed:
            value = getattr(self, name)
            if value is None or not (value > 0 and math.isfinite(value)):
                raise InvalidParameterError(f"{self.kind.value} needs a positive {name}, got {value!r}")
        for name in ("r", "c", "d"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise InvalidParameterError(f"removal fraction {name} must lie in [0, 1), got {value}")

    @property
    def smallest_dimension(self) -> float:
        if self.kind is Geometry.CIRCULAR_MEMBRANE:
            return self.thickness
        return self.diameter if self.kind.is_circular_section else self.depth

    def approximation_violations(self) -> list[str]:
        if self.kind is Geometry.CIRCULAR_MEMBRANE:
            ratio, limit, label = self.thickness / self.radius, THIN_DISC_LIMIT, "t/R"
        else:
            ratio, limit, label = self.smallest_dimension / self.length, SLENDER_BEAM_LIMIT, (
                "D/L" if self.kind.is_circular_section else "H/L")
        if ratio > limit * (1 + 1e-12):
            return [f"{label} = {ratio:.4g} exceeds {limit:g}"]
        return []

    def warn_if_outside(self):
        for message in self.approximation_violations():
            warnings.warn(f"{self.kind.value}: {message}", ApproximationWarning, stacklevel=3)


@dataclass(frozen=True)
class Material:
    name: str
    density: float
    youngs_modulus: float | None = None
    strength: float | None = None

    def __post_init__(self):
        if not self.density > 0:
            raise InvalidMaterialError(f"{self.name}: density must be > 0")
        for name in ("youngs_modulus", "strength"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InvalidMaterialError(f"{self.name}: {name} must be > 0 when given")


@dataclass(frozen=True)
class PerformanceBreakdown:
    kind: Geometry
    alpha_g: float
    p_a: float
    p_g: float
    p_m: float
    beta: float = BETA_PRINTED
    p: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p", self.alpha_g * self.p_a * self.p_g * self.p_m * self.beta)


def section_factor(config: GeometryConfig) -> float:
    """Radius of gyration divided by the section depth (or diameter)."""
    kind, r, c, d = config.kind, config.r, config.c, config.d
    if kind is Geometry.CIRCULAR_MEMBRANE:
        return 1.0
    if kind is Geometry.HOLLOW_RECT_BEAM:
        return math.sqrt((1.0 - c**3 * d) / (1.0 - c * d)) / math.sqrt(12.0)
    if kind is Geometry.HOLLOW_CIRC_BEAM:
        return math.sqrt(1.0 + r * r) / 4.0
    if kind is Geometry.SOLID_RECT_BEAM:
        return 1.0 / math.sqrt(12.0)
    if kind is Geometry.SOLID_CIRC_BEAM:
        return 0.25
    return math.sqrt((1.0 - c**3 + c**3 * d) / (1.0 - c + c * d)) / math.sqrt(12.0)


def material_metric(kind: Geometry, material: Material) -> float:
    if kind.is_beam:
        if material.youngs_modulus is None:
            raise InvalidMaterialError(f"{material.name}: beams need youngs_modulus")
        return math.sqrt(material.youngs_modulus / material.density)
    if material.strength is None:
        raise InvalidMaterialError(f"{material.name}: membranes need strength")
    return math.sqrt(material.strength / material.density)


def metrics(config: GeometryConfig, material: Material, beta: float = BETA_PRINTED) -> PerformanceBreakdown:
    config.warn_if_outside()
    kind = config.kind
    if kind is Geometry.CIRCULAR_MEMBRANE:
        alpha, p_a = MEMBRANE_MODE / (2 * math.pi), config.thickness / config.radius
    else:
        alpha, p_a = BEAM_MODE / (2 * math.pi), (config.smallest_dimension / config.length) ** 2
    return PerformanceBreakdown(kind, alpha, p_a, section_factor(config),
                                material_metric(kind, material), beta)


def performance_product(breakdown: PerformanceBreakdown) -> float:
    """Trade-off constant in meter-kelvin."""
    b = breakdown
    return b.alpha_g * b.p_a * b.p_g * b.p_m * b.beta


@dataclass(frozen=True)
class Tradeoff:
    temperature: float  # K
    dimension: float  # m
    below_refrigeration_limit: bool
    above_antibunching_limit: bool | None  # None when no frequency is known

    @property
    def feasible(self) -> bool:
        return not self.below_refrigeration_limit and not self.above_antibunching_limit


def tradeoff(p: float, temperature: float | None = None, dimension: float | None = None,
             frequency: float | None = None, beta: float = BETA_PRINTED) -> Tradeoff:
    """Solve ``T * Z = P`` for whichever of ``temperature``/``dimension`` is missing.

    The result is flagged below the 3 mK refrigeration limit and, when the
    resonator frequency is given, above ``frequency * beta`` (= 0.04 T0).
    """
    if (temperature is None) == (dimension is None):
        raise InvalidParameterError("give exactly one of temperature or dimension")
    if not p > 0:
        raise DomainError(f"P must be > 0, got {p}")
    query = temperature if temperature is not None else dimension
    if not query > 0:
        raise DomainError(f"query must be > 0, got {query}")
    if temperature is not None:
        dimension = p / temperature
    else:
        temperature = p / dimension
    upper = None if frequency is None else temperature > frequency * beta * (1 + 1e-12)
    return Tradeoff(temperature, dimension, temperature < REFRIGERATION_LIMIT * (1 - 1e-12), upper)


def natural_frequency(config: GeometryConfig, material: Material) -> float:
    """Fundamental frequency in Hz.

    Clamped membrane: ``(2.405 / 2πR) sqrt(σ/ρ)``.  Clamped-clamped beam:
    ``(22.373 / 2πL²) k sqrt(E/ρ)`` with radius of gyration ``k``.
    """
    config.warn_if_outside()
    p_m = material_metric(config.kind, material)
    if config.kind is Geometry.CIRCULAR_MEMBRANE:
        return MEMBRANE_MODE / (2 * math.pi * config.radius) * p_m
    gyration = config.smallest_dimension * section_factor(config)
    return BEAM_MODE / (2 * math.pi * config.length**2) * gyration * p_m


def temperature_at_frequency(frequency: float, beta: float = BETA_PRINTED) -> float:
    return frequency * beta


# ---------------------------------------------------------------------------
# materials and published reference values

def load_materials(path: str | Path | None = None) -> dict[str, Material]:
    """Read a materials file: a JSON list of flat records.

    Each record has ``name`` and ``density`` (kg/m³) plus ``youngs_modulus``
    and/or ``strength`` (Pa).  Without a path the bundled file is used.
    """
    if path is None:
        text = resources.files("phononblock").joinpath("materials.json").read_text()
    else:
        text = Path(path).read_text()
    records = json.loads(text)
    if not isinstance(records, list):
        raise InvalidMaterialError("materials file must hold a JSON list of records")
    out = {}
    allowed = {"name", "density", "youngs_modulus", "strength"}
    for rec in records:
        unknown = set(rec) - allowed
        if unknown:
            raise InvalidMaterialError(f"unknown material field(s): {sorted(unknown)}")
        if "name" not in rec or "density" not in rec:
            raise InvalidMaterialError(f"material record needs name and density: {rec}")
        out[rec["name"]] = Material(**rec)
    return out


# Published table values, verbatim.  P in m·K, lengths in m, temperatures in K.
PUBLISHED_P = {
    Geometry.CIRCULAR_MEMBRANE: 9.47e-10,
    Geometry.HOLLOW_RECT_BEAM: 4.72e-10,
    Geometry.HOLLOW_CIRC_BEAM: 4.06e-10,
    Geometry.SOLID_RECT_BEAM: 3.66e-10,
    Geometry.SOLID_CIRC_BEAM: 3.17e-10,
    Geometry.I_BEAM: 4.72e-10,
}
PUBLISHED_P_G = {
    Geometry.CIRCULAR_MEMBRANE: 1.0,
    Geometry.HOLLOW_RECT_BEAM: 0.371,
    Geometry.HOLLOW_CIRC_BEAM: 0.320,
    Geometry.SOLID_RECT_BEAM: 0.288,
    Geometry.SOLID_CIRC_BEAM: 0.250,
    Geometry.I_BEAM: 0.371,
}
PUBLISHED_P_A = {kind: (0.2 if kind is Geometry.CIRCULAR_MEMBRANE else 0.01) for kind in Geometry}
PUBLISHED_P_M = {kind: (18600.0 if kind.is_beam else 7900.0) for kind in Geometry}
PUBLISHED_Z = {  # smallest dimension at 3 mK and 25 mK
    Geometry.CIRCULAR_MEMBRANE: {3e-3: 315e-9, 25e-3: 37.9e-9},
    Geometry.HOLLOW_RECT_BEAM: {3e-3: 157e-9, 25e-3: 18.8e-9},
    Geometry.HOLLOW_CIRC_BEAM: {3e-3: 135e-9, 25e-3: 16.2e-9},
    Geometry.SOLID_RECT_BEAM: {3e-3: 122e-9, 25e-3: 14.6e-9},
    Geometry.SOLID_CIRC_BEAM: {3e-3: 105e-9, 25e-3: 12.7e-9},
    Geometry.I_BEAM: {3e-3: 157e-9, 25e-3: 18.8e-9},
}
PUBLISHED_T = {  # temperature at 0.1 µm
    Geometry.CIRCULAR_MEMBRANE: {1e-7: 9.47e-3},
    Geometry.HOLLOW_RECT_BEAM: {1e-7: 4.72e-3},
    Geometry.HOLLOW_CIRC_BEAM: {1e-7: 4.06e-3},
    Geometry.SOLID_RECT_BEAM: {1e-7: 3.66e-3},
    Geometry.SOLID_CIRC_BEAM: {1e-7: 3.17e-3},
    Geometry.I_BEAM: {1e-7: 4.72e-3},
}
REFERENCE_FRACTIONS = {"r": 0.8, "c": 0.75, "d": 0.8}


def reference_geometries(length: float = 1e-5) -> list[GeometryConfig]:
    """The six shapes at the published optimum (t/R = 0.2, H/L = D/L = 0.1)."""
    z = 0.1 * length
    out = [GeometryConfig(Geometry.CIRCULAR_MEMBRANE, thickness=0.2 * length, radius=length)]
    for kind in list(Geometry)[1:]:
        if kind.is_circular_section:
            out.append(GeometryConfig(kind, diameter=z, length=length, **REFERENCE_FRACTIONS))
        else:
            out.append(GeometryConfig(kind, depth=z, length=length, **REFERENCE_FRACTIONS))
    return out


def default_material(kind: Geometry, materials: dict[str, Material]) -> Material:
    return materials["diamond" if Geometry(kind).is_beam else "graphene"]


def _rel(a, b):
    return None if b is None else abs(a - b) / abs(b)


def table_sweep(materials: dict[str, Material], geometries, temperatures, dimensions) -> list[dict]:
    """Cross-tabulate Z(T) and T(Z) for every geometry.

    Each row reports the formula value of P and the published one, the
    derived Z or T from both, and the relative error against any printed cell
    for the same query.
    """
    geometries, temperatures, dimensions = list(geometries), list(temperatures), list(dimensions)
    if not geometries or not (temperatures or dimensions):
        raise InvalidParameterError("table_sweep needs geometries and at least one query")
    rows = []
    for config in geometries:
        kind = config.kind
        material = default_material(kind, materials) if isinstance(materials, dict) else materials
        breakdown = metrics(config, material)
        p_formula = performance_product(breakdown)
        p_ref = PUBLISHED_P[kind]
        base = {
            "geometry": kind.value,
            "material": material.name,
            "p_formula": p_formula,
            "p_published": p_ref,
            "p_rel_error": _rel(p_formula, p_ref),
        }
        for t in temperatures:
            printed = _lookup(PUBLISHED_Z[kind], t)
            z_ref = tradeoff(p_ref, temperature=t).dimension
            rows.append({**base, "query": "temperature", "temperature": t,
                         "dimension_formula": tradeoff(p_formula, temperature=t).dimension,
                         "dimension_published_p": z_ref, "dimension": None,
                         "printed": printed, "rel_error": _rel(z_ref, printed)})
        for z in dimensions:
            printed = _lookup(PUBLISHED_T[kind], z)
            t_ref = tradeoff(p_ref, dimension=z).temperature
            rows.append({**base, "query": "dimension", "dimension": z,
                         "temperature_formula": tradeoff(p_formula, dimension=z).temperature,
                         "temperature_published_p": t_ref, "temperature": None,
                         "printed": printed, "rel_error": _rel(t_ref, printed)})
    return rows


def _lookup(table: dict, key: float):
    for k, v in table.items():
        if math.isclose(k, key, rel_tol=1e-9):
            return v
    return None
