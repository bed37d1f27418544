"""Truncated Fock-space operators for two bosonic modes.

States are ordered mode-1-major: ``|m n>`` sits at ``m * (n_max_2 + 1) + n``,
which is the ordering produced by ``kron(op_1, op_2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np
import scipy.sparse as sp

from .errors import InvalidDimensionError


@dataclass(frozen=True)
class FockBasis:
    """Product basis with phonon numbers ``0..n_max_1`` and ``0..n_max_2``."""

    n_max_1: int = 10
    n_max_2: int = 10

    def __post_init__(self):
        for name in ("n_max_1", "n_max_2"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidDimensionError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise InvalidDimensionError(f"{name} must be >= 1, got {value}")

    @property
    def levels(self) -> tuple[int, int]:
        return self.n_max_1 + 1, self.n_max_2 + 1

    @property
    def dim(self) -> int:
        return (self.n_max_1 + 1) * (self.n_max_2 + 1)

    def index(self, m: int, n: int) -> int:
        if not (0 <= m <= self.n_max_1 and 0 <= n <= self.n_max_2):
            raise InvalidDimensionError(f"state |{m}{n}> outside basis {self}")
        return m * (self.n_max_2 + 1) + n

    def label(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.dim:
            raise InvalidDimensionError(f"index {k} outside basis of dim {self.dim}")
        return divmod(k, self.n_max_2 + 1)

    def labels(self) -> list[tuple[int, int]]:
        return [self.label(k) for k in range(self.dim)]


class Operator:
    """Square complex matrix, optionally tied to a two-mode basis.

    Single-mode operators carry ``basis=None``.  Storage is CSR; the object is
    treated as immutable, so arithmetic always returns new operators.
    """

    __slots__ = ("_data", "_basis")
    __array_ufunc__ = None  # make numpy scalars defer to __rmul__

    def __init__(self, data, basis: FockBasis | None = None):
        mat = sp.csr_matrix(data, dtype=complex)
        if mat.shape[0] != mat.shape[1]:
            raise InvalidDimensionError(f"operator must be square, got {mat.shape}")
        if basis is not None and mat.shape[0] != basis.dim:
            raise InvalidDimensionError(
                f"operator dimension {mat.shape[0]} does not match basis dim {basis.dim}"
            )
        mat.sum_duplicates()
        self._data = mat
        self._basis = basis

    @property
    def data(self) -> sp.csr_matrix:
        return self._data

    @property
    def basis(self) -> FockBasis | None:
        return self._basis

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def toarray(self) -> np.ndarray:
        return self._data.toarray()

    def dag(self) -> Operator:
        return Operator(self._data.conj().T, self._basis)

    def is_hermitian(self, atol: float = 0.0) -> bool:
        diff = self._data - self._data.conj().T
        return diff.nnz == 0 or float(np.max(np.abs(diff.data))) <= atol

    def _check(self, other: Operator) -> FockBasis | None:
        if not isinstance(other, Operator):
            raise TypeError(f"expected Operator, got {type(other).__name__}")
        if self.dim != other.dim:
            raise InvalidDimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if self._basis is not None and other._basis is not None and self._basis != other._basis:
            raise InvalidDimensionError(f"basis mismatch: {self._basis} vs {other._basis}")
        return self._basis if self._basis is not None else other._basis

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        basis = self._check(other)
        return Operator(self._data + other._data, basis)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        basis = self._check(other)
        return Operator(self._data - other._data, basis)

    def __neg__(self):
        return Operator(-self._data, self._basis)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return Operator(self._data * scalar, self._basis)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        basis = self._check(other)
        return Operator(self._data @ other._data, basis)

    def __repr__(self):
        return f"Operator(dim={self.dim}, nnz={self._data.nnz}, basis={self._basis})"


def annihilation(n_levels: int) -> Operator:
    """Lowering operator on ``n_levels`` Fock states: ``a[n-1, n] = sqrt(n)``."""
    if isinstance(n_levels, bool) or not isinstance(n_levels, (int, np.integer)) or n_levels < 2:
        raise InvalidDimensionError(f"n_levels must be an integer >= 2, got {n_levels!r}")
    return Operator(sp.diags(np.sqrt(np.arange(1, n_levels)), 1, format="csr"))


def creation(n_levels: int) -> Operator:
    return annihilation(n_levels).dag()


def number(n_levels: int) -> Operator:
    a = annihilation(n_levels)
    return a.dag() @ a


def identity(dim: int, basis: FockBasis | None = None) -> Operator:
    return Operator(sp.identity(dim, dtype=complex, format="csr"), basis)


def embed(basis: FockBasis, mode: int, single_mode_op: Operator) -> Operator:
    """Lift a single-mode operator to the two-mode space (``a⊗I`` or ``I⊗a``)."""
    if mode not in (1, 2):
        raise InvalidDimensionError(f"mode must be 1 or 2, got {mode!r}")
    n1, n2 = basis.levels
    expected = n1 if mode == 1 else n2
    if single_mode_op.dim != expected:
        raise InvalidDimensionError(
            f"mode {mode} has {expected} levels but operator has dim {single_mode_op.dim}"
        )
    if mode == 1:
        mat = sp.kron(single_mode_op.data, sp.identity(n2, format="csr"), format="csr")
    else:
        mat = sp.kron(sp.identity(n1, format="csr"), single_mode_op.data, format="csr")
    return Operator(mat, basis)


def lowering(basis: FockBasis, mode: int) -> Operator:
    """``b_mode`` on the two-mode basis."""
    levels = basis.levels[0] if mode == 1 else basis.levels[1]
    return embed(basis, mode, annihilation(levels))


def number_op(basis: FockBasis, mode: int) -> Operator:
    b = lowering(basis, mode)
    return b.dag() @ b


# Functional spellings of the operator algebra.

def adjoint(a: Operator) -> Operator:
    return a.dag()


def add(a: Operator, b: Operator) -> Operator:
    return a + b


def scale(a: Operator, c: complex) -> Operator:
    return a * c


def matmul(a: Operator, b: Operator) -> Operator:
    return a @ b


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a
