"""Liouvillian assembly, steady states and an explicit time-evolution oracle.

Vectorization is column stacking, ``vec(rho)[i + dim*j] = rho[i, j]``, so
``vec(A X B) = (B^T ⊗ A) vec(X)``.  The dissipator convention is

    D[A] rho = 2 A rho A† - A†A rho - rho A†A

and the master equation is ``L rho = -i[H, rho] + sum_k c_k D[A_k] rho``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from numbers import Complex, Real

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg.lapack import ztrsyl

from .errors import (
    DegenerateSteadyStateError,
    InvalidDimensionError,
    InvalidInputError,
    SolverFailureError,
    StepSizeError,
)
from .fock import FockBasis, Operator, lowering
from .model import RwaParams

log = logging.getLogger(__name__)

HERMITIAN_RTOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8
RESIDUAL_TOL = 1e-8
DEGENERACY_TOL = 1e-12
DIRECT_MAX_DIM = 36
EIGEN_SHIFT = 1e-6
INNER_TOL = 1e-10
INNER_ACCEPT = 1e-6
# Safety margin inside the RK4 stability interval (2*sqrt(2) on the imaginary axis).
RK4_STABILITY = 2.5
SYLVESTER_BLOCK = 64


def vec(mat) -> np.ndarray:
    return np.asarray(mat).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def spre(a) -> sp.csr_matrix:
    """Superoperator of left multiplication, ``X -> A X``."""
    a = sp.csr_matrix(a)
    return sp.kron(sp.identity(a.shape[0], format="csr"), a, format="csr")


def spost(b) -> sp.csr_matrix:
    """Superoperator of right multiplication, ``X -> X B``."""
    b = sp.csr_matrix(b)
    return sp.kron(b.T, sp.identity(b.shape[0], format="csr"), format="csr")


def _raw(a):
    return a.data if isinstance(a, Operator) else sp.csr_matrix(a, dtype=complex)


class Superoperator:
    """Sparse ``dim^2 x dim^2`` generator.

    Besides the matrix it optionally remembers the Lindblad data it was built
    from (a Hamiltonian and weighted jump operators).  That lets ``apply`` act
    on ``dim x dim`` matrices directly and gives the steady-state solver a
    Lyapunov preconditioner.  Combining superoperators by ``+`` or by real
    scaling keeps the generator; anything else drops it.
    """

    __array_ufunc__ = None

    def __init__(self, data, basis: FockBasis | None = None, hamiltonian=None, jumps=None,
                 has_generator: bool = False):
        mat = sp.csr_matrix(data, dtype=complex)
        d2 = mat.shape[0]
        dim = math.isqrt(d2)
        if mat.shape[0] != mat.shape[1] or dim * dim != d2:
            raise InvalidDimensionError(f"superoperator shape {mat.shape} is not dim^2 x dim^2")
        if basis is not None and basis.dim != dim:
            raise InvalidDimensionError(f"superoperator dim {dim} does not match basis dim {basis.dim}")
        self.data = mat
        self.basis = basis
        self.dim = dim
        self.hamiltonian = hamiltonian
        self.jumps = tuple(jumps or ())
        self.has_generator = has_generator
        self._g = None

    @classmethod
    def zero(cls, dim: int, basis: FockBasis | None = None) -> Superoperator:
        return cls(sp.csr_matrix((dim * dim, dim * dim), dtype=complex), basis,
                   has_generator=True)

    def __add__(self, other):
        if not isinstance(other, Superoperator):
            return NotImplemented
        if other.dim != self.dim:
            raise InvalidDimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        basis = self.basis if self.basis is not None else other.basis
        if self.has_generator and other.has_generator:
            if self.hamiltonian is None:
                ham = other.hamiltonian
            elif other.hamiltonian is None:
                ham = self.hamiltonian
            else:
                ham = self.hamiltonian + other.hamiltonian
            return Superoperator(self.data + other.data, basis, ham,
                                 self.jumps + other.jumps, True)
        return Superoperator(self.data + other.data, basis)

    def __mul__(self, scalar):
        if not isinstance(scalar, Complex):
            return NotImplemented
        if isinstance(scalar, Real) and self.has_generator:
            s = float(scalar)
            ham = None if self.hamiltonian is None else self.hamiltonian * s
            jumps = tuple((c * s, a) for c, a in self.jumps)
            return Superoperator(self.data * s, self.basis, ham, jumps, True)
        return Superoperator(self.data * scalar, self.basis)

    __rmul__ = __mul__

    @property
    def norm_max(self) -> float:
        return float(np.max(np.abs(self.data.data))) if self.data.nnz else 0.0

    def effective_generator(self) -> sp.csr_matrix:
        """``G = -iH - sum_k c_k A_k†A_k`` so that ``L X = G X + X G† + sum 2c A X A†``."""
        if not self.has_generator:
            raise InvalidInputError("superoperator carries no generator data")
        if self._g is None:
            g = sp.csr_matrix((self.dim, self.dim), dtype=complex)
            if self.hamiltonian is not None:
                g = g - 1j * self.hamiltonian
            for c, a in self.jumps:
                g = g - c * (a.conj().T @ a)
            self._g = sp.csr_matrix(g)
        return self._g

    def apply(self, rho, hermitian: bool = False) -> np.ndarray:
        """``L rho`` for a ``dim x dim`` matrix.

        ``hermitian=True`` promises ``rho == rho†`` and saves two products.
        """
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise InvalidDimensionError(f"expected {(self.dim, self.dim)} matrix, got {rho.shape}")
        if not self.has_generator:
            return unvec(self.data @ vec(rho), self.dim)
        g = self.effective_generator()
        gr = g @ rho
        if hermitian:
            out = gr + gr.conj().T
            for c, a in self.jumps:
                out += (2.0 * c) * (a @ (a @ rho).conj().T)
            return out
        rd = rho.conj().T
        out = gr + (g @ rd).conj().T
        for c, a in self.jumps:
            out += (2.0 * c) * (a @ (a @ rd).conj().T)
        return out

    def matvec(self, v) -> np.ndarray:
        return self.data @ v

    def trace_defect(self) -> float:
        """``max |vec(I)† L|``; zero for a trace-preserving generator."""
        row = self.data.T @ vec(np.eye(self.dim))
        return float(np.max(np.abs(row))) if row.size else 0.0

    def spectral_bound(self) -> float:
        """Upper bound on the spectral radius, used to choose RK4 steps."""
        if self.has_generator:
            bound = 0.0
            if self.hamiltonian is not None and self.hamiltonian.nnz:
                h = self.hamiltonian.toarray()
                ev = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
                bound += float(ev[-1] - ev[0])
            for c, a in self.jumps:
                bound += 4.0 * abs(c) * float(sla.norm(a.toarray(), 2)) ** 2
            return bound
        if self.data.nnz == 0:
            return 0.0
        return float(spla.onenormest(self.data))

    def __repr__(self):
        return f"Superoperator(dim={self.dim}, nnz={self.data.nnz}, generator={self.has_generator})"


def hamiltonian_part(h) -> Superoperator:
    """``rho -> -i[H, rho]``."""
    basis = h.basis if isinstance(h, Operator) else None
    hm = _raw(h)
    data = -1j * (spre(hm) - spost(hm))
    return Superoperator(data, basis, hamiltonian=hm, has_generator=True)


def dissipator(a) -> Superoperator:
    """``rho -> 2 A rho A† - A†A rho - rho A†A``."""
    basis = a.basis if isinstance(a, Operator) else None
    am = _raw(a)
    if am.shape[0] != am.shape[1]:
        raise InvalidDimensionError(f"Lindblad operator must be square, got {am.shape}")
    ada = am.conj().T @ am
    data = 2.0 * sp.kron(am.conj(), am, format="csr") - spre(ada) - spost(ada)
    return Superoperator(data, basis, jumps=((1.0, am),), has_generator=True)


def lindblad_superoperator(h, jumps) -> Superoperator:
    """``-i[H, .] + sum_k rate_k D[A_k]`` for ``jumps = [(rate_k, A_k), ...]``."""
    L = hamiltonian_part(h)
    for rate, a in jumps:
        if rate != 0.0:
            L = L + float(rate) * dissipator(a)
    return L


def build_liouvillian(h: Operator, params: RwaParams, basis: FockBasis) -> Superoperator:
    """Thermal two-mode master equation at equal temperature for both modes."""
    if h.dim != basis.dim:
        raise InvalidDimensionError(f"Hamiltonian dim {h.dim} does not match basis dim {basis.dim}")
    scale = float(np.max(np.abs(h.data.data))) if h.data.nnz else 0.0
    if not h.is_hermitian(atol=1e-12 * max(scale, 1.0)):
        raise InvalidInputError("Hamiltonian is not hermitian")
    jumps = []
    for mode in (1, 2):
        b = lowering(basis, mode)
        jumps.append((0.5 * params.gamma * (params.n_th + 1.0), b))
        jumps.append((0.5 * params.gamma * params.n_th, b.dag()))
    L = lindblad_superoperator(h, jumps)
    L.basis = basis
    return L


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state; validated on construction."""

    basis: FockBasis | None
    data: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        rho = np.array(self.data, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidDimensionError(f"density matrix must be square, got {rho.shape}")
        if self.basis is not None and rho.shape[0] != self.basis.dim:
            raise InvalidDimensionError(f"density matrix dim {rho.shape[0]} != basis dim {self.basis.dim}")
        top = float(np.max(np.abs(rho)))
        if float(np.max(np.abs(rho - rho.conj().T))) > HERMITIAN_RTOL * top:
            raise InvalidInputError("density matrix is not hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidInputError(f"density matrix trace is {tr}, expected 1")
        lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if lam < -POSITIVITY_TOL:
            raise InvalidInputError(f"density matrix has negative eigenvalue {lam:.3e}")
        rho.flags.writeable = False
        object.__setattr__(self, "data", rho)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data)[0])

    @classmethod
    def from_matrix(cls, rho, basis=None, info=None) -> DensityMatrix:
        """Hermitize and trace-normalize ``rho`` before validating it."""
        rho = np.asarray(rho, dtype=complex)
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if not np.isfinite(tr) or tr == 0.0:
            raise InvalidInputError(f"cannot normalize matrix with trace {tr}")
        return cls(basis, rho / tr, dict(info or {}))


def fock_state(basis: FockBasis, m: int, n: int) -> DensityMatrix:
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    k = basis.index(m, n)
    rho[k, k] = 1.0
    return DensityMatrix(basis, rho)


def thermal_state(basis: FockBasis, n_th_1: float, n_th_2: float | None = None) -> DensityMatrix:
    """Product of truncated (renormalized) geometric distributions."""
    n_th_2 = n_th_1 if n_th_2 is None else n_th_2
    probs = []
    for n_th, levels in zip((n_th_1, n_th_2), basis.levels):
        if n_th < 0:
            raise InvalidInputError(f"n_th must be >= 0, got {n_th}")
        p = (n_th / (1.0 + n_th)) ** np.arange(levels)
        probs.append(p / p.sum())
    return DensityMatrix(basis, np.diag(np.kron(probs[0], probs[1])).astype(complex))


def trace_distance(a, b) -> float:
    ma = a.data if isinstance(a, DensityMatrix) else np.asarray(a)
    mb = b.data if isinstance(b, DensityMatrix) else np.asarray(b)
    diff = ma - mb
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


# ---------------------------------------------------------------------------
# steady state

class _LyapunovPreconditioner:
    """Inverse of ``X -> (G - s/2) X + X (G - s/2)†`` via a Schur form."""

    def __init__(self, g: np.ndarray, shift: float = 0.0):
        gs = g - 0.5 * shift * np.eye(g.shape[0])
        self.t, self.q = sla.schur(gs, output="complex")
        ev = np.diag(self.t)
        self.ok = bool(np.all(ev.real < 0.0))
        self.dim = g.shape[0]

    def solve(self, x: np.ndarray) -> np.ndarray:
        c = self.q.conj().T @ x @ self.q
        y = _triangular_lyapunov(self.t, c, 0, self.dim, 0, self.dim)
        return self.q @ y @ self.q.conj().T


def _triangular_lyapunov(t, c, i0, i1, j0, j1):
    """Solve ``T_ii X + X T_jj† = C`` on diagonal blocks of upper-triangular ``T``.

    Recursive splitting pushes the work into matrix products; LAPACK's
    unblocked ztrsyl is only used on blocks of at most SYLVESTER_BLOCK.
    """
    m, n = i1 - i0, j1 - j0
    if m <= SYLVESTER_BLOCK and n <= SYLVESTER_BLOCK:
        y, scale, info = ztrsyl(t[i0:i1, i0:i1], t[j0:j1, j0:j1], c, trana="N", tranb="C")
        if info < 0:
            raise SolverFailureError(f"ztrsyl rejected argument {-info}")
        return y / scale
    if m >= n:
        h = i0 + m // 2
        x2 = _triangular_lyapunov(t, c[h - i0:], h, i1, j0, j1)
        x1 = _triangular_lyapunov(t, c[:h - i0] - t[i0:h, h:i1] @ x2, i0, h, j0, j1)
        return np.vstack([x1, x2])
    h = j0 + n // 2
    x2 = _triangular_lyapunov(t, c[:, h - j0:], i0, i1, h, j1)
    x1 = _triangular_lyapunov(t, c[:, :h - j0] - x2 @ t[j0:h, h:j1].conj().T, i0, i1, j0, h)
    return np.hstack([x1, x2])


def _gmres_right(apply_a, precond, b, dim, tol, maxiter, restart):
    """Right-preconditioned GMRES, so the reported residual is the true one."""
    n = dim * dim

    def amv(y):
        return vec(apply_a(precond.solve(unvec(y, dim))))

    op = spla.LinearOperator((n, n), matvec=amv, dtype=complex)
    count = [0]

    def cb(_):
        count[0] += 1

    y, info = spla.gmres(op, b, rtol=tol, atol=0.0, restart=restart, maxiter=maxiter,
                         callback=cb, callback_type="pr_norm")
    x = vec(precond.solve(unvec(y, dim)))
    return x, info, count[0]


def _trace_row_system(L: Superoperator):
    d = L.dim
    trace_row = sp.csr_matrix(vec(np.eye(d)).reshape(1, -1).astype(complex))
    a = sp.vstack([trace_row, L.data[1:]], format="csc")
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    return a, rhs


def _choose_solver(L: Superoperator, solver: str) -> str:
    if solver not in ("auto", "direct", "krylov"):
        raise InvalidInputError(f"unknown solver {solver!r}")
    if solver == "auto":
        return "krylov" if (L.has_generator and L.dim > DIRECT_MAX_DIM) else "direct"
    if solver == "krylov" and not L.has_generator:
        raise InvalidInputError("krylov solver needs a superoperator built from Lindblad data")
    return solver


def _linear_direct(L: Superoperator):
    a, rhs = _trace_row_system(L)
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(f"trace-constrained system is singular: {exc}") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyStateError("trace-constrained system is numerically singular")
    return x, {"iterations": 0}


def _linear_krylov(L: Superoperator, tol, maxiter, restart):
    d = L.dim
    pre = _LyapunovPreconditioner(L.effective_generator().toarray())
    if not pre.ok:
        log.info("Lyapunov preconditioner unavailable; falling back to sparse LU")
        return _linear_direct(L)

    def apply_a(x):
        y = L.apply(x)
        y[0, 0] = np.trace(x)
        return y

    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    x, info, its = _gmres_right(apply_a, pre, rhs, d, tol, maxiter, restart)
    if info != 0:
        res = float(np.linalg.norm(vec(apply_a(unvec(x, d))) - rhs))
        raise SolverFailureError(f"GMRES did not converge (info={info}, residual={res:.3e})",
                                 residual=res, iterations=its)
    return x, {"iterations": its}


def _shifted_solver(L: Superoperator, shift: float, solver: str):
    """Return ``v -> (L - shift)^-1 v``.

    The shifted operator is nearly singular, so GMRES stagnates near
    ``eps * cond``; inverse iteration only needs the direction, and inner
    solves are accepted at a relative residual of ``INNER_ACCEPT``.
    """
    d = L.dim
    if solver == "krylov":
        pre = _LyapunovPreconditioner(L.effective_generator().toarray(), shift)
        if pre.ok:
            def apply_shifted(y):
                return L.apply(y) - shift * y

            def solve(v):
                x, info, its = _gmres_right(apply_shifted, pre, v, d, INNER_TOL, 3, 60)
                if info != 0:
                    res = float(np.linalg.norm(vec(apply_shifted(unvec(x, d))) - v))
                    if res > INNER_ACCEPT * float(np.linalg.norm(v)):
                        raise SolverFailureError(
                            f"inner GMRES stalled at relative residual {res:.3e}",
                            residual=res, iterations=its)
                return x
            return solve
    lu = spla.splu((L.data - shift * sp.identity(d * d, format="csc")).tocsc())
    return lu.solve


def _eigen_inverse_iteration(L: Superoperator, solver, seed, max_outer=50):
    """Block (size 2) inverse iteration around a small negative shift.

    The leading Ritz vector is the steady state; the second Ritz value
    estimates the gap used for the degeneracy check.
    """
    d = L.dim
    scale = L.norm_max
    shift = -EIGEN_SHIFT * scale
    solve = _shifted_solver(L, shift, solver)
    rng = np.random.default_rng(seed)
    x = np.column_stack([
        vec(np.eye(d)) / d,
        rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d),
    ])
    x, _ = np.linalg.qr(x)
    prev = None
    theta = None
    for it in range(1, max_outer + 1):
        y = np.column_stack([solve(x[:, 0]), solve(x[:, 1])])
        x, _ = np.linalg.qr(y)
        lx = np.column_stack([L.data @ x[:, 0], L.data @ x[:, 1]])
        theta, w = np.linalg.eig(x.conj().T @ lx)
        order = np.argsort(np.abs(theta))
        theta, w = theta[order], w[:, order]
        v = x @ w[:, 0]
        rho = unvec(v, d)
        tr = np.trace(rho)
        if tr == 0:
            continue
        rho = rho / tr
        res = float(np.linalg.norm(L.data @ vec(rho)))
        settled = prev is not None and abs(abs(theta[1]) - prev) <= 1e-3 * abs(theta[1])
        if it >= 3 and res <= 0.1 * RESIDUAL_TOL * scale and settled:
            break
        prev = abs(theta[1])
    if abs(theta[1]) < DEGENERACY_TOL * scale:
        raise DegenerateSteadyStateError(
            f"second-smallest |eigenvalue| {abs(theta[1]):.3e} below {DEGENERACY_TOL:g} x scale {scale:.3e}"
        )
    return vec(rho), {"iterations": it, "eigenvalues": (complex(theta[0]), complex(theta[1])),
                      "shift": shift}


def steady_state(
    L: Superoperator,
    method: str = "linear",
    solver: str = "auto",
    tol: float = 1e-12,
    maxiter: int = 50,
    restart: int = 200,
    seed: int = 0,
) -> DensityMatrix:
    """Null vector of ``L`` normalized to unit trace.

    ``method="linear"`` replaces the first row of ``L vec(rho) = 0`` by the
    trace condition and solves the square system; ``method="eigen"`` runs a
    shifted inverse iteration for the eigenvalue closest to zero.  ``solver``
    selects sparse LU (``"direct"``) or Lyapunov-preconditioned GMRES
    (``"krylov"``) for the linear algebra; ``"auto"`` uses GMRES above
    dimension 36 when the generator data is available.
    """
    if method not in ("linear", "eigen"):
        raise InvalidInputError(f"unknown steady-state method {method!r}")
    scale = L.norm_max
    if L.trace_defect() > 1e-10 * max(scale, 1e-300):
        raise InvalidInputError("superoperator is not trace preserving")
    kind = _choose_solver(L, solver)
    if method == "linear":
        if kind == "direct":
            x, info = _linear_direct(L)
        else:
            x, info = _linear_krylov(L, tol, maxiter, restart)
    else:
        x, info = _eigen_inverse_iteration(L, kind, seed)
    d = L.dim
    raw = unvec(x, d)
    raw_residual = float(np.linalg.norm(L.data @ x))
    rho = 0.5 * (raw + raw.conj().T)
    tr = np.trace(rho).real
    if not np.isfinite(tr) or tr == 0.0:
        raise DegenerateSteadyStateError(f"steady-state candidate has trace {tr}")
    rho = rho / tr
    residual = float(np.linalg.norm(L.data @ vec(rho)))
    log.debug("steady_state %s/%s: raw residual %.3e, residual %.3e", method, kind,
              raw_residual, residual)
    if residual > RESIDUAL_TOL * scale:
        raise SolverFailureError(
            f"steady-state residual {residual:.3e} exceeds {RESIDUAL_TOL:g} x |L|max = "
            f"{RESIDUAL_TOL * scale:.3e}",
            residual=residual, iterations=info.get("iterations"),
        )
    info.update(method=method, solver=kind, residual=residual, raw_residual=raw_residual,
                norm_max=scale)
    try:
        return DensityMatrix(L.basis, rho, info)
    except InvalidInputError as exc:
        raise SolverFailureError(f"steady state failed validation: {exc}", residual=residual) from exc


# ---------------------------------------------------------------------------
# time evolution oracle

def _rk4(L: Superoperator, rho: np.ndarray, dt: float, steps: int) -> np.ndarray:
    half = 0.5 * dt
    # L preserves hermiticity and the RK stages use real weights.
    for _ in range(steps):
        k1 = L.apply(rho, hermitian=True)
        k2 = L.apply(rho + half * k1, hermitian=True)
        k3 = L.apply(rho + half * k2, hermitian=True)
        k4 = L.apply(rho + dt * k3, hermitian=True)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return rho


def evolve(
    rho0: DensityMatrix,
    L: Superoperator,
    t_final: float,
    dt: float,
    check_step: bool = False,
    drift_tol: float = 1e-6,
) -> DensityMatrix:
    """Classical RK4 integration of ``d rho/dt = L rho`` from ``rho0``.

    The step is shrunk so that an integer number of steps lands on
    ``t_final``.  Steps beyond the RK4 stability interval (estimated from
    ``L.spectral_bound``) are rejected up front.  With ``check_step`` the run is
    repeated at ``dt/2`` and the two end states must agree to ``drift_tol`` in
    trace distance.
    """
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    if not t_final >= dt:
        raise StepSizeError(f"t_final ({t_final}) must be >= dt ({dt})")
    if rho0.dim != L.dim:
        raise InvalidDimensionError(f"state dim {rho0.dim} does not match superoperator dim {L.dim}")
    steps = int(math.ceil(t_final / dt - 1e-9))
    h = t_final / steps
    bound = L.spectral_bound()
    if h * bound > RK4_STABILITY:
        raise StepSizeError(
            f"dt={h:.3e} too large for spectral bound {bound:.3e}; use dt <= {RK4_STABILITY / bound:.3e}"
        )
    start = np.array(rho0.data)
    rho = _rk4(L, start, h, steps)
    if not np.all(np.isfinite(rho)):
        raise StepSizeError("integration diverged; use a smaller dt")
    drift = abs(np.trace(rho) - np.trace(start))
    if drift > drift_tol:
        raise StepSizeError(f"trace drift {drift:.3e} exceeds {drift_tol:g}; use a smaller dt")
    info = {"t_final": t_final, "dt": h, "steps": steps, "trace_drift": float(drift)}
    if check_step:
        fine = _rk4(L, start, 0.5 * h, 2 * steps)
        dist = trace_distance(rho, fine)
        info["step_halving_distance"] = dist
        if dist > drift_tol:
            raise StepSizeError(f"step halving changed the state by {dist:.3e}; use a smaller dt")
    try:
        return DensityMatrix.from_matrix(rho, rho0.basis, info)
    except InvalidInputError as exc:
        raise StepSizeError(f"integrated state is not a valid density matrix ({exc}); "
                            "use a smaller dt") from exc
