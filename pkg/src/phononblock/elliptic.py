"""Complete elliptic integrals through Carlson's symmetric forms.

Parameter convention: ``K(m) = ∫_0^{π/2} (1 - m sin²θ)^{-1/2} dθ``.  The
duplication algorithm stays accurate for large negative ``m``, where the
integrand is sharply peaked and direct quadrature is unreliable.
"""
from __future__ import annotations

import math

from scipy.special import elliprd, elliprf

from .errors import DomainError

def carlson_rf(x: float, y: float, z: float) -> float:
    """R_F(x, y, z) for nonnegative arguments, at most one of them zero."""
    if min(x, y, z) < 0 or (x + y == 0) or (x + z == 0) or (y + z == 0):
        raise DomainError(f"R_F undefined for ({x}, {y}, {z})")
    return float(elliprf(x, y, z))


def carlson_rd(x: float, y: float, z: float) -> float:
    """R_D(x, y, z) with ``z > 0`` and at most one of ``x, y`` zero."""
    if min(x, y) < 0 or z <= 0 or (x + y == 0):
        raise DomainError(f"R_D undefined for ({x}, {y}, {z})")
    return float(elliprd(x, y, z))


def ellipk(m: float) -> float:
    """Complete elliptic integral of the first kind, ``m < 1``."""
    m = float(m)
    if not m < 1.0:
        raise DomainError(f"K(m) requires m < 1, got {m}")
    return carlson_rf(0.0, 1.0 - m, 1.0)


def ellipe(m: float) -> float:
    """Complete elliptic integral of the second kind, ``m <= 1``."""
    m = float(m)
    if m > 1.0 or math.isnan(m):
        raise DomainError(f"E(m) requires m <= 1, got {m}")
    if m == 1.0:
        return 1.0
    y = 1.0 - m
    return carlson_rf(0.0, y, 1.0) - (m / 3.0) * carlson_rd(0.0, y, 1.0)
