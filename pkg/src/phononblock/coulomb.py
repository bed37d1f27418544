"""Coulomb coupling between two coaxial, uniformly charged disks.

The interaction energy of disks of equal radius ``R`` at separation ``z`` is

    U_e = (4 k_e Q1 Q2 / R) * (-a/2 + a/(6π) [(4 - a²) E(-4/a²) + (4 + a²) K(-4/a²)])

with ``a = |z| / R``.  Expanding it to second order in the relative
displacement gives the phonon hopping rate ``J = -U_e''(z) / (2 ω_m sqrt(m1 m2))``
in rad/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import CONSTANTS
from .elliptic import carlson_rd, carlson_rf
from .errors import DomainError, EvaluationError, InvalidParameterError, PrecisionError

COUPLING_PRECISION = 1e-4


@dataclass(frozen=True)
class DiskPair:
    radius: float
    charge_q1: float
    charge_q2: float
    separation: float
    mass_m1: float
    mass_m2: float
    omega_m: float

    def __post_init__(self):
        for name in ("radius", "charge_q1", "charge_q2", "separation", "mass_m1", "mass_m2", "omega_m"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        for name in ("radius", "separation", "mass_m1", "mass_m2", "omega_m"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be > 0, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class CouplingResult:
    j: float  # signed, rad/s
    j_star: float | None  # |J| / gamma
    curvature: float  # d²U_e/dz², J/m²
    curvature_error: float


def disk_potential_energy(pair: DiskPair, z: float | None = None, k_e: float = CONSTANTS.k_e) -> float:
    """Interaction energy in joules at separation ``z`` (default: the pair's)."""
    z = pair.separation if z is None else z
    prefactor = 4.0 * k_e * pair.charge_q1 * pair.charge_q2 / pair.radius
    a = abs(z) / pair.radius
    if a == 0.0:
        # Coincident disks: a*E(-4/a²) -> 2 and a*K(-4/a²) -> 0.
        return prefactor * 4.0 / (3.0 * math.pi)
    m = -4.0 / (a * a)
    # (4 - a²)E + (4 + a²)K rewritten with K - E = (m/3) R_D so that the
    # a² terms do not cancel against each other at large separation.
    rf = carlson_rf(0.0, 1.0 - m, 1.0)
    rd = carlson_rd(0.0, 1.0 - m, 1.0)
    bracket = 8.0 * rf - (4.0 / 3.0) * (1.0 + m) * rd
    return prefactor * a * (bracket - 3.0 * math.pi) / (6.0 * math.pi)


def second_derivative(f, z: float, h0: float) -> tuple[float, float]:
    """Central second difference, Richardson-extrapolated over ``h0, h0/2, h0/4``.

    Returns ``(value, error_estimate)``; the estimate is the change between the
    last two extrapolation levels.
    """
    if not (h0 > 0 and (z == 0 or h0 < abs(z) / 4.0)):
        raise InvalidParameterError(f"step h0={h0} must satisfy 0 < h0 < |z|/4 (z={z})")
    f0 = f(z)
    diffs = []
    for h in (h0, 0.5 * h0, 0.25 * h0):
        fp, fm = f(z + h), f(z - h)
        if not all(math.isfinite(v) for v in (f0, fp, fm)):
            raise EvaluationError(f"non-finite sample near z={z} (h={h})")
        diffs.append((fp - 2.0 * f0 + fm) / (h * h))
    level1 = [(4.0 * diffs[i + 1] - diffs[i]) / 3.0 for i in range(2)]
    value = (16.0 * level1[1] - level1[0]) / 15.0
    return value, abs(value - level1[1])


def coupling_strength(pair: DiskPair, gamma: float | None = None, h0: float | None = None,
                      k_e: float = CONSTANTS.k_e) -> CouplingResult:
    z = pair.separation
    h0 = z / 16.0 if h0 is None else h0
    curv, err = second_derivative(lambda s: disk_potential_energy(pair, s, k_e), z, h0)
    if err > COUPLING_PRECISION * abs(curv):
        raise PrecisionError(
            f"curvature error estimate {err:.3e} exceeds {COUPLING_PRECISION:g} relative of {curv:.3e}"
        )
    j = -0.5 * curv / (pair.omega_m * math.sqrt(pair.mass_m1 * pair.mass_m2))
    j_star = None if gamma is None else abs(j) / gamma
    return CouplingResult(j=j, j_star=j_star, curvature=curv, curvature_error=err)


def point_charge_coupling(q1: float, q2: float, d: float, m1: float, m2: float, omega_m: float,
                          k_e: float = CONSTANTS.k_e) -> float:
    """Point-charge hopping rate ``k_e q1 q2 / d³ / (ω_m sqrt(m1 m2))``."""
    if not d > 0:
        raise InvalidParameterError(f"d must be > 0, got {d}")
    return k_e * q1 * q2 / d**3 / (omega_m * math.sqrt(m1 * m2))


def thermal_occupation(temperature: float, omega: float, constants=CONSTANTS) -> float:
    """Bose occupation ``1 / (exp(ħω / k_B T) - 1)``."""
    if not temperature > 0:
        raise DomainError(f"temperature must be > 0, got {temperature}")
    if not omega > 0:
        raise DomainError(f"omega must be > 0, got {omega}")
    x = constants.hbar * omega / (constants.k_B * temperature)
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def characteristic_temperature(omega: float, constants=CONSTANTS) -> float:
    """``T0 = ħω / k_B``."""
    return constants.hbar * omega / constants.k_B
