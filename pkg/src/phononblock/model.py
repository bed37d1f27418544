"""Rotating-frame Hamiltonian of two coupled, driven mechanical modes.

All rates are in units of the decay rate (``gamma = 1`` by default):

    H = Δ (b1†b1 + b2†b2) + J (b1†b2 + b2†b1) + F (b1† + b1) + U K2

where ``K2`` is the Kerr term on mode 2, ``b2†b2†b2b2`` by default or
``(b2†b2)^2`` with ``kerr="number_squared"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import scipy.sparse as sp

from .errors import InvalidParameterError
from .fock import FockBasis, Operator, lowering

KERR_FORMS = ("normal_ordered", "number_squared")
REGIME_THRESHOLD = 1e-2


@dataclass(frozen=True)
class RwaParams:
    delta: float
    j: float
    f: float
    u: float
    gamma: float = 1.0
    n_th: float = 0.0

    def __post_init__(self):
        for name in ("delta", "j", "f", "u", "gamma", "n_th"):
            value = getattr(self, name)
            if not isinstance(value, Real) or isinstance(value, bool):
                raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if self.gamma <= 0:
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma}")
        if self.n_th < 0:
            raise InvalidParameterError(f"n_th must be >= 0, got {self.n_th}")

    def replace(self, **changes) -> RwaParams:
        fields = {k: getattr(self, k) for k in ("delta", "j", "f", "u", "gamma", "n_th")}
        fields.update({k: float(v) for k, v in changes.items()})
        return RwaParams(**fields)


@dataclass(frozen=True)
class RegimeReport:
    j_ratio: float
    u_ratio: float
    threshold: float
    j_warn: bool
    u_warn: bool

    @property
    def ok(self) -> bool:
        return not (self.j_warn or self.u_warn)


def kerr_operator(basis: FockBasis, kerr: str = "normal_ordered") -> Operator:
    if kerr not in KERR_FORMS:
        raise InvalidParameterError(f"kerr must be one of {KERR_FORMS}, got {kerr!r}")
    b2 = lowering(basis, 2)
    if kerr == "normal_ordered":
        return b2.dag() @ b2.dag() @ b2 @ b2
    n2 = b2.dag() @ b2
    return n2 @ n2


def build_rwa_hamiltonian(
    params: RwaParams, basis: FockBasis, kerr: str = "normal_ordered"
) -> Operator:
    b1 = lowering(basis, 1)
    b2 = lowering(basis, 2)
    n_tot = b1.dag() @ b1 + b2.dag() @ b2
    hop = b1.dag() @ b2 + b2.dag() @ b1
    drive = b1.dag() + b1
    h = params.delta * n_tot + params.j * hop + params.f * drive
    if params.u != 0.0:
        h = h + params.u * kerr_operator(basis, kerr)
    # Numerically exact hermiticity: average with the adjoint.
    return 0.5 * (h + h.dag())


def check_regime(
    params: RwaParams,
    omega_d: float,
    rate_unit: float | None = None,
    threshold: float = REGIME_THRESHOLD,
) -> RegimeReport:
    """Compare J and U with the drive frequency.

    ``rate_unit`` converts the nondimensional rates to the units of
    ``omega_d`` (the physical decay rate, when ``params.gamma == 1``).  Without
    it the rates are assumed to share units with ``omega_d`` already.
    """
    if not (omega_d > 0 and math.isfinite(omega_d)):
        raise InvalidParameterError(f"omega_d must be a positive finite number, got {omega_d!r}")
    scale = 1.0 if rate_unit is None else rate_unit / params.gamma
    j_ratio = abs(params.j) * scale / omega_d
    u_ratio = abs(params.u) * scale / omega_d
    return RegimeReport(
        j_ratio=j_ratio,
        u_ratio=u_ratio,
        threshold=threshold,
        j_warn=j_ratio > threshold,
        u_warn=u_ratio > threshold,
    )


def mode_sign_flip(basis: FockBasis) -> Operator:
    """Parity unitary of mode 2, mapping ``b2 -> -b2``."""
    n1, n2 = basis.levels
    diag = [(-1.0) ** n for _ in range(n1) for n in range(n2)]
    return Operator(sp.diags(diag, 0, format="csr"), basis)


__all__ = [
    "RwaParams",
    "RegimeReport",
    "build_rwa_hamiltonian",
    "check_regime",
    "kerr_operator",
    "mode_sign_flip",
]
