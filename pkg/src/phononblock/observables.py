"""Phonon statistics of a two-mode density matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, UndefinedStatisticsError
from .fock import FockBasis, lowering
from .lindblad import DensityMatrix

OCCUPATION_GUARD = 1e-12


@dataclass(frozen=True)
class PhononStats:
    g2_mode1: float
    mean_n1: float
    mean_n2: float
    p_number_mode1: np.ndarray
    top_level_population: float = 0.0


def _basis(rho: DensityMatrix, basis: FockBasis | None) -> FockBasis:
    basis = basis if basis is not None else rho.basis
    if basis is None:
        raise InvalidDimensionError("a FockBasis is required for a basis-free density matrix")
    if basis.dim != rho.dim:
        raise InvalidDimensionError(f"basis dim {basis.dim} != state dim {rho.dim}")
    return basis


def _expect(op, rho: DensityMatrix) -> complex:
    # Tr(A rho) = sum_ij A_ij rho_ji
    a = op.data
    return complex((a.multiply(rho.data.T)).sum())


def mean_phonons(rho: DensityMatrix, basis: FockBasis | None = None, mode: int = 1) -> float:
    basis = _basis(rho, basis)
    b = lowering(basis, mode)
    return float(_expect(b.dag() @ b, rho).real)


def g2_zero(rho: DensityMatrix, basis: FockBasis | None = None, mode: int = 1) -> float:
    """Equal-time correlation ``<b†b†bb> / <b†b>^2``."""
    basis = _basis(rho, basis)
    b = lowering(basis, mode)
    bd = b.dag()
    n = _expect(bd @ b, rho).real
    if n <= OCCUPATION_GUARD:
        raise UndefinedStatisticsError(
            f"mode {mode} occupation {n:.3e} is below the guard {OCCUPATION_GUARD:g}"
        )
    pairs = _expect(bd @ bd @ b @ b, rho).real
    return float(pairs / n**2)


def number_distribution(rho: DensityMatrix, basis: FockBasis | None = None, mode: int = 1) -> np.ndarray:
    """Marginal phonon-number probabilities of one mode."""
    basis = _basis(rho, basis)
    n1, n2 = basis.levels
    diag = np.real(np.diag(rho.data)).reshape(n1, n2)
    return diag.sum(axis=1) if mode == 1 else diag.sum(axis=0)


def g2_from_distribution(p) -> float:
    """``sum k(k-1) p_k / (sum k p_k)^2``; a second route to ``g2_zero``."""
    p = np.asarray(p, dtype=float)
    k = np.arange(p.size)
    n = float(np.dot(k, p))
    if n <= OCCUPATION_GUARD:
        raise UndefinedStatisticsError(f"occupation {n:.3e} is below the guard {OCCUPATION_GUARD:g}")
    return float(np.dot(k * (k - 1), p) / n**2)


def phonon_stats(rho: DensityMatrix, basis: FockBasis | None = None) -> PhononStats:
    basis = _basis(rho, basis)
    p1 = number_distribution(rho, basis, 1)
    p2 = number_distribution(rho, basis, 2)
    return PhononStats(
        g2_mode1=g2_zero(rho, basis, 1),
        mean_n1=mean_phonons(rho, basis, 1),
        mean_n2=mean_phonons(rho, basis, 2),
        p_number_mode1=p1,
        top_level_population=float(max(p1[-1], p2[-1])),
    )
