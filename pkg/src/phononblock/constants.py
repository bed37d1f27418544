"""Physical constants (SI)."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as _c

# Printed value of the temperature-per-frequency factor; equals 0.04 h/k_B
# to 5e-5 relative.  Kept verbatim so the design tables reproduce exactly.
BETA_PRINTED = 1.9196e-12


@dataclass(frozen=True)
class PhysicalConstants:
    k_e: float = 1.0 / (4.0 * math.pi * _c.epsilon_0)
    h: float = _c.h
    hbar: float = _c.hbar
    k_B: float = _c.k
    beta: float = BETA_PRINTED


CONSTANTS = PhysicalConstants()
