"""Master-equation engine on the truncated Fock (x) M-level space.

Basis ordering: index = n * M + i, with n the photon number and i the qubit
level.  All operators are dense numpy arrays wrapped with their Hilbert
configuration.  The integrator keeps rho dense; banded generators go through
a compiled RK4 kernel, anything else through CSR products.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from ._kernels import lindblad_rhs, rk4_step, row_diagonals
from .circuit import KerrParameters
from .transmon import QubitDissipation, TransmonSpectrum

__all__ = [
    "HilbertConfig",
    "OperatorMatrix",
    "DensityMatrix",
    "DriveTerm",
    "TimeDependentHamiltonian",
    "IntegrationError",
    "TruncationError",
    "destroy",
    "number",
    "qubit_operator",
    "identity",
    "build_static_hamiltonian",
    "add_drive",
    "add_qubit_drive",
    "qubit_raising",
    "embed_fock",
    "collapse_operators",
    "dissipator",
    "Liouvillian",
    "evolve",
    "expectation",
    "partial_trace_resonator",
    "partial_trace_qubit",
    "thermal_state",
    "coherent_state",
    "product_state",
    "qubit_population",
    "suggest_n_fock",
    "change_frame",
    "excitation_number",
]

DEFAULT_MAX_DIM = 600


class IntegrationError(RuntimeError):
    pass


class TruncationError(RuntimeError):
    pass


def _max_dim_from_env() -> int:
    v = os.environ.get("KERRSIM_MAX_DIM")
    return int(v) if v else DEFAULT_MAX_DIM


@dataclass(frozen=True)
class HilbertConfig:
    """Fock truncation, qubit levels and the rotating-frame frequency (rad/s).

    Resonator and qubit share one frame frequency so that the exchange term
    stays static; qubit level i is shifted by i * frame.
    """

    n_fock: int
    m_levels: int = 1
    frame: float = 0.0
    max_dim: int = field(default_factory=_max_dim_from_env)

    def __post_init__(self):
        if self.n_fock < 4:
            raise ValueError("n_fock must be >= 4")
        if self.m_levels < 1:
            raise ValueError("m_levels must be >= 1")
        if self.dim > self.max_dim:
            raise ValueError(f"Hilbert dimension {self.dim} exceeds the cap {self.max_dim} "
                             "(raise KERRSIM_MAX_DIM to allow it)")

    @property
    def dim(self) -> int:
        return self.n_fock * self.m_levels

    def with_frame(self, frame: float) -> "HilbertConfig":
        return HilbertConfig(self.n_fock, self.m_levels, frame, self.max_dim)


@dataclass(frozen=True)
class OperatorMatrix:
    data: np.ndarray
    hilbert: HilbertConfig
    role: str = "observable"

    def __post_init__(self):
        d = self.hilbert.dim
        if self.data.shape != (d, d):
            raise ValueError(f"operator shape {self.data.shape} does not match dim {d}")
        if self.role not in ("hamiltonian", "collapse", "observable"):
            raise ValueError(f"unknown role {self.role!r}")

    @property
    def dag(self) -> np.ndarray:
        return self.data.conj().T


@dataclass
class DensityMatrix:
    data: np.ndarray
    hilbert: HilbertConfig

    def __post_init__(self):
        d = self.hilbert.dim
        if self.data.shape != (d, d):
            raise ValueError(f"density matrix shape {self.data.shape} does not match dim {d}")

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def validate(self, herm_tol: float = 1e-10, trace_tol: float = 1e-8,
                 pos_tol: float = 1e-7) -> None:
        r = self.data
        herm = np.max(np.abs(r - r.conj().T))
        if herm > herm_tol:
            raise IntegrationError(f"density matrix not Hermitian ({herm:.2e})")
        tr = np.trace(r)
        if abs(tr - 1) > trace_tol:
            raise IntegrationError(f"trace deviates from 1 by {abs(tr - 1):.2e}")
        lam = np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0]
        if lam < -pos_tol:
            raise IntegrationError(f"negative eigenvalue {lam:.2e}")

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])


# --- basic operators -------------------------------------------------------

def _a_small(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def destroy(h: HilbertConfig) -> np.ndarray:
    return np.kron(_a_small(h.n_fock), np.eye(h.m_levels))


def number(h: HilbertConfig) -> np.ndarray:
    return np.kron(np.diag(np.arange(h.n_fock, dtype=complex)), np.eye(h.m_levels))


def identity(h: HilbertConfig) -> np.ndarray:
    return np.eye(h.dim, dtype=complex)


def qubit_operator(h: HilbertConfig, i: int, j: int) -> np.ndarray:
    """Identity on the resonator times |i><j| on the qubit."""
    q = np.zeros((h.m_levels, h.m_levels), complex)
    q[i, j] = 1.0
    return np.kron(np.eye(h.n_fock), q)


def excitation_number(h: HilbertConfig) -> np.ndarray:
    """Diagonal of a^dag a + sum_i i |i><i| (the frame generator)."""
    n = np.repeat(np.arange(h.n_fock), h.m_levels)
    i = np.tile(np.arange(h.m_levels), h.n_fock)
    return (n + i).astype(float)


def build_static_hamiltonian(kerr: KerrParameters, spectrum: TransmonSpectrum | None,
                             g_list: Sequence[float] | None, h: HilbertConfig,
                             include_Kp: bool = True) -> OperatorMatrix:
    """H/hbar in the frame rotating at ``h.frame`` (rad/s)."""
    N, M = h.n_fock, h.m_levels
    n = np.arange(N, dtype=float)
    Kp = kerr.Kp if include_Kp else 0.0
    e_res = (kerr.omega_r - h.frame) * n + 0.5 * kerr.K * n * (n - 1) \
        + (Kp / 3.0) * n * (n - 1) * (n - 2)
    if M > 1:
        if spectrum is None or spectrum.M < M:
            raise ValueError("spectrum with at least m_levels levels required")
        e_q = np.asarray(spectrum.omega[:M], float) - h.frame * np.arange(M)
    else:
        e_q = np.zeros(1)
    H = np.diag((e_res[:, None] + e_q[None, :]).ravel()).astype(complex)
    if M > 1 and g_list is not None:
        g = np.asarray(g_list, float)
        if len(g) < M - 1:
            raise ValueError("need M-1 couplings")
        # a^dag |i><i+1| : |n,i+1> -> sqrt(n+1) |n+1,i>
        for nn in range(N - 1):
            for i in range(M - 1):
                r = (nn + 1) * M + i
                c = nn * M + i + 1
                H[r, c] += g[i] * math.sqrt(nn + 1)
                H[c, r] += g[i] * math.sqrt(nn + 1)
    return OperatorMatrix(H, h, "hamiltonian")


# --- time dependence ------------------------------------------------------

@dataclass
class DriveTerm:
    """eps(t) exp(-i w t) A + h.c., with w = omega_d - frame."""

    operator: np.ndarray
    envelope: Callable[[float], complex] | complex
    omega_rot: float = 0.0
    max_amplitude: float | None = None

    def coefficient(self, t: float) -> complex:
        env = self.envelope(t) if callable(self.envelope) else self.envelope
        if self.omega_rot == 0.0:
            return complex(env)
        return complex(env) * complex(math.cos(self.omega_rot * t), -math.sin(self.omega_rot * t))

    def bound(self) -> float:
        if self.max_amplitude is not None:
            return abs(self.max_amplitude)
        if callable(self.envelope):
            return abs(self.envelope(0.0))
        return abs(self.envelope)


@dataclass
class TimeDependentHamiltonian:
    static: OperatorMatrix
    drives: list = field(default_factory=list)

    @property
    def hilbert(self) -> HilbertConfig:
        return self.static.hilbert


def add_drive(H: OperatorMatrix | TimeDependentHamiltonian, omega_d: float,
              envelope: Callable[[float], complex] | complex,
              max_amplitude: float | None = None) -> TimeDependentHamiltonian:
    """Append a resonator drive eps(t) e^{-i(omega_d - frame) t} a^dag + h.c."""
    if isinstance(H, OperatorMatrix):
        H = TimeDependentHamiltonian(H, [])
    h = H.hilbert
    term = DriveTerm(destroy(h).conj().T, envelope, omega_d - h.frame, max_amplitude)
    return TimeDependentHamiltonian(H.static, list(H.drives) + [term])


def qubit_raising(h: HilbertConfig, n_matrix: np.ndarray | None = None) -> np.ndarray:
    """sum_i r_i |i+1><i| with r_i = <i|N|i+1>/<0|N|1> (charge-coupled drive)."""
    M = h.m_levels
    if M < 2:
        raise ValueError("qubit drive needs m_levels >= 2")
    A = np.zeros((h.dim, h.dim), complex)
    for i in range(M - 1):
        r = 1.0 if n_matrix is None else abs(n_matrix[i, i + 1] / n_matrix[0, 1])
        A += r * qubit_operator(h, i + 1, i)
    return A


def add_qubit_drive(H: OperatorMatrix | TimeDependentHamiltonian, omega_s: float,
                    envelope: Callable[[float], complex] | complex,
                    n_matrix: np.ndarray | None = None,
                    max_amplitude: float | None = None) -> TimeDependentHamiltonian:
    """Append eps_s(t) e^{-i(omega_s - frame) t} sigma_+ + h.c. (Rabi rate 2 eps_s on 0-1)."""
    if isinstance(H, OperatorMatrix):
        H = TimeDependentHamiltonian(H, [])
    h = H.hilbert
    term = DriveTerm(qubit_raising(h, n_matrix), envelope, omega_s - h.frame, max_amplitude)
    return TimeDependentHamiltonian(H.static, list(H.drives) + [term])


def embed_fock(rho: DensityMatrix, n_fock: int) -> DensityMatrix:
    """Zero-pad (or truncate) the resonator space to ``n_fock`` levels."""
    h = rho.hilbert
    M = h.m_levels
    new = HilbertConfig(n_fock, M, h.frame, max(h.max_dim, n_fock * M))
    R = rho.data.reshape(h.n_fock, M, h.n_fock, M)
    k = min(n_fock, h.n_fock)
    out = np.zeros((n_fock, M, n_fock, M), complex)
    out[:k, :, :k, :] = R[:k, :, :k, :]
    return DensityMatrix(out.reshape(n_fock * M, n_fock * M), new)


def collapse_operators(kerr: KerrParameters, dissipation: QubitDissipation | None,
                       h: HilbertConfig) -> list[OperatorMatrix]:
    a = destroy(h)
    ops = []
    if kerr.kappa > 0:
        ops.append(OperatorMatrix(math.sqrt(kerr.kappa * (kerr.n_th + 1)) * a, h, "collapse"))
        if kerr.n_th > 0:
            ops.append(OperatorMatrix(math.sqrt(kerr.kappa * kerr.n_th) * a.conj().T, h, "collapse"))
    if dissipation is not None and h.m_levels > 1:
        for i in range(h.m_levels - 1):
            rate = dissipation.relaxation(i)
            if rate > 0:
                ops.append(OperatorMatrix(math.sqrt(rate) * qubit_operator(h, i, i + 1), h, "collapse"))
        gp = list(dissipation.gamma_phi) + [0.0] * h.m_levels
        for i in range(h.m_levels):
            if gp[i] > 0:
                ops.append(OperatorMatrix(math.sqrt(2 * gp[i]) * qubit_operator(h, i, i), h, "collapse"))
    return ops


def dissipator(A: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """D[A]rho = A rho A^dag - (A^dag A rho + rho A^dag A)/2."""
    Ad = A.conj().T
    AdA = Ad @ A
    return A @ rho @ Ad - 0.5 * (AdA @ rho + rho @ AdA)


# --- integrator ------------------------------------------------------------

class Liouvillian:
    """Right-hand side of the master equation with cached pieces.

    H_eff = H - (i/2) sum c^dag c is kept as a few row-indexed diagonals when
    possible (exchange and drive terms sit on +-(M-1) and +-M), which feeds a
    compiled kernel; otherwise CSR products are used.  The generator is
    dX = -i H_eff X + (-i H_eff X^dag)^dag + sum c X c^dag.

    """

    max_diagonals = 16

    def __init__(self, H: OperatorMatrix | TimeDependentHamiltonian, c_ops: Sequence):
        if isinstance(H, OperatorMatrix):
            H = TimeDependentHamiltonian(H, [])
        self.hilbert = H.hilbert
        self.H = H
        d = self.hilbert.dim
        H0 = H.static.data
        C = np.zeros((d, d), complex)
        jumps_single, self._jump_dense = [], []
        for c in c_ops:
            m = c.data if isinstance(c, OperatorMatrix) else np.asarray(c)
            C += m.conj().T @ m
            rows, cols = np.nonzero(m)
            offs = np.unique(cols - rows)
            if offs.size == 1:
                jumps_single.append(row_diagonals(m, offs))
            elif offs.size > 1:
                self._jump_dense.append(sp.csr_matrix(m))
        if jumps_single:
            self._jk = np.array([ks[0] for ks, _ in jumps_single], dtype=np.int64)
            self._U = np.vstack([V for _, V in jumps_single])
        else:
            self._jk = np.zeros(0, dtype=np.int64)
            self._U = np.zeros((0, d), complex)
        self.damping = C
        Heff = H0 - 0.5j * C
        mats = [Heff] + [t.operator for t in H.drives] + [t.operator.conj().T for t in H.drives]
        offsets = {0}
        for A in mats:
            rows, cols = np.nonzero(A)
            offsets.update(np.unique(cols - rows).tolist())
        offsets = sorted(offsets)
        self._banded = len(offsets) <= self.max_diagonals
        self._H0 = H0
        if self._banded:
            self._ks, self._V0 = row_diagonals(Heff, offsets)
            self._drive_ops = [(t, row_diagonals(t.operator, offsets)[1],
                                row_diagonals(t.operator.conj().T, offsets)[1]) for t in H.drives]
        else:
            self._heff = sp.csr_matrix(Heff)
            self._drive_ops = [(t, sp.csr_matrix(t.operator), sp.csr_matrix(t.operator.conj().T))
                               for t in H.drives]

    def rate_bound(self) -> float:
        """Upper estimate of the largest |eigenvalue| of the generator."""
        drive = 0.0
        rot = 0.0
        for t, _, _ in self._drive_ops:
            drive += 2 * t.bound() * math.sqrt(self.hilbert.n_fock)
            rot = max(rot, abs(t.omega_rot))
        damp = float(np.max(np.real(np.diag(self.damping)))) if self.damping.size else 0.0
        w = np.linalg.eigvalsh(self._H0)
        return (w[-1] - w[0]) + 2 * drive + rot + damp

    def _coefficients(self, t: float):
        V = self._V0
        for term, VA, VAd in self._drive_ops:
            c = term.coefficient(t)
            if c != 0:
                V = V + c * VA + c.conjugate() * VAd
        return V

    def _heff_apply_sparse(self, t: float, X: np.ndarray) -> np.ndarray:
        Y = self._heff @ X
        for term, A, Ad in self._drive_ops:
            c = term.coefficient(t)
            if c != 0:
                Y += c * (A @ X)
                Y += c.conjugate() * (Ad @ X)
        return Y

    def rhs(self, t: float, X: np.ndarray, hermitian: bool = True) -> np.ndarray:
        if self._banded:
            out = lindblad_rhs(self._ks, self._coefficients(t), self._jk, self._U, X, hermitian)
        else:
            L = -1j * self._heff_apply_sparse(t, X)
            if hermitian:
                out = L + np.conj(np.ascontiguousarray(L.T))
            else:
                R = -1j * self._heff_apply_sparse(t, np.conj(np.ascontiguousarray(X.T)))
                out = L + np.conj(np.ascontiguousarray(R.T))
            d = X.shape[0]
            for k, V in zip(self._jk, self._U):
                lo, hi = (0, d - k) if k >= 0 else (-k, d)
                u = V[lo:hi]
                out[lo:hi, lo:hi] += np.outer(u, u.conj()) * X[lo + k:hi + k, lo + k:hi + k]
        for A in self._jump_dense:
            # A X A^dag = A (A X^dag)^dag
            out += A @ (A @ X.conj().T).conj().T
        return out

    def step(self, t: float, X: np.ndarray, h: float, hermitian: bool = True) -> np.ndarray:
        """Advance X by one RK4 step of size h (in place when compiled)."""
        if self._banded and not self._jump_dense:
            rk4_step(self._ks, self._coefficients(t), self._coefficients(t + h / 2),
                     self._coefficients(t + h), self._jk, self._U, X, h, hermitian)
            return X
        k1 = self.rhs(t, X, hermitian)
        k2 = self.rhs(t + h / 2, X + (h / 2) * k1, hermitian)
        k3 = self.rhs(t + h / 2, X + (h / 2) * k2, hermitian)
        k4 = self.rhs(t + h, X + h * k3, hermitian)
        X = X + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if hermitian:
            X = 0.5 * (X + np.conj(np.ascontiguousarray(X.T)))
        return X

    def dense_superoperator(self, t: float = 0.0) -> np.ndarray:
        """Full d^2 x d^2 generator (row-major vec); only for small test systems."""
        d = self.hilbert.dim
        cols = []
        for k in range(d * d):
            E = np.zeros(d * d, complex)
            E[k] = 1.0
            cols.append(self.rhs(t, E.reshape(d, d), hermitian=False).ravel())
        return np.array(cols).T


def _top_population(X: np.ndarray, h: HilbertConfig) -> float:
    diag = np.real(np.diag(X))
    M = h.m_levels
    return float(diag[(h.n_fock - 2) * M:].sum())


def evolve(rho0: DensityMatrix | np.ndarray, H, c_ops: Sequence, t_grid: Sequence[float],
           dt: float | None = None, *, safety: float = 1.0, hermitian: bool = True,
           trunc_tol: float = 1e-5, check_every: int = 200, validate: bool = True,
           liouvillian: Liouvillian | None = None, observer: Callable | None = None,
           store: bool = True) -> list:
    """Fixed-step RK4 integration with snapshots at ``t_grid``.

    The step is ``dt`` when given, otherwise ``safety / rate_bound``; each
    interval between grid points is split into equal steps.  With
    ``hermitian=False`` an arbitrary operator is propagated (used for
    two-time correlations) and the physical checks are skipped.
    ``observer(t, X)`` is called at every grid point; with ``store=False``
    only the final state is kept.
    """
    L = liouvillian if liouvillian is not None else Liouvillian(H, c_ops)
    h = L.hilbert
    if isinstance(rho0, DensityMatrix):
        X = rho0.data.astype(complex, copy=True)
    else:
        X = np.array(rho0, dtype=complex)
    t_grid = np.asarray(t_grid, float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    h_max = dt if dt is not None else safety / L.rate_bound()
    wrap = (lambda A: DensityMatrix(A, h)) if hermitian else (lambda A: A)
    if observer is not None:
        observer(t_grid[0], X)
    out = [wrap(X.copy())] if store else []
    tr0 = np.trace(X)
    step_count = 0
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        nsteps = max(1, int(math.ceil((t1 - t0) / h_max - 1e-9)))
        hs = (t1 - t0) / nsteps
        for n in range(nsteps):
            X = L.step(t0 + n * hs, X, hs, hermitian)
            step_count += 1
            if hermitian and step_count % check_every == 0:
                _check(X, h, trunc_tol, tr0)
        if hermitian:
            _check(X, h, trunc_tol, tr0)
        if observer is not None:
            observer(t1, X)
        if store or t1 == t_grid[-1]:
            snap = wrap(X.copy())
            if hermitian and validate:
                snap.validate()
            out.append(snap)
    return out


def _check(X, h, trunc_tol, tr0):
    tr = np.trace(X)
    if abs(tr - tr0) > 1e-6:
        raise IntegrationError(f"trace drifted by {abs(tr - tr0):.2e}; reduce the time step")
    if not np.all(np.isfinite(X)):
        raise IntegrationError("non-finite state; reduce the time step")
    top = _top_population(X, h)
    if top > trunc_tol:
        raise TruncationError(f"population {top:.2e} in the top two Fock levels "
                              f"exceeds {trunc_tol:.1e}; increase n_fock")


# --- states and observables -----------------------------------------------

def expectation(op, rho) -> complex:
    A = op.data if isinstance(op, OperatorMatrix) else np.asarray(op)
    R = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if A.shape != R.shape:
        raise ValueError("dimension mismatch")
    return complex(np.sum(A.T * R))


def partial_trace_resonator(rho: DensityMatrix) -> np.ndarray:
    """Trace out the qubit; returns the n_fock x n_fock resonator matrix."""
    h = rho.hilbert
    R = rho.data.reshape(h.n_fock, h.m_levels, h.n_fock, h.m_levels)
    return np.einsum("aibi->ab", R)


def partial_trace_qubit(rho: DensityMatrix) -> np.ndarray:
    h = rho.hilbert
    R = rho.data.reshape(h.n_fock, h.m_levels, h.n_fock, h.m_levels)
    return np.einsum("aiaj->ij", R)


def qubit_population(rho: DensityMatrix, i: int) -> float:
    h = rho.hilbert
    return float(np.real(np.diag(rho.data)[i:: h.m_levels].sum()))


def thermal_state(n_th: float, h: HilbertConfig, qubit_level: int = 0) -> DensityMatrix:
    """Truncated, renormalized geometric distribution times |level><level|."""
    n = np.arange(h.n_fock)
    if n_th == 0:
        p = (n == 0).astype(float)
    else:
        p = (n_th / (1 + n_th)) ** n
        p /= p.sum()
    q = np.zeros(h.m_levels)
    q[qubit_level] = 1.0
    return DensityMatrix(np.diag(np.kron(p, q)).astype(complex), h)


def coherent_state(alpha: complex, n_fock: int) -> np.ndarray:
    """Fock amplitudes of |alpha>, renormalized on the truncated space."""
    c = np.empty(n_fock, complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2)
    for k in range(1, n_fock):
        c[k] = c[k - 1] * alpha / math.sqrt(k)
    return c / np.linalg.norm(c)


def product_state(res: np.ndarray, qubit: np.ndarray | int, h: HilbertConfig) -> DensityMatrix:
    """rho_res (x) rho_qubit; vectors are promoted to projectors."""
    res = np.asarray(res, complex)
    if res.ndim == 1:
        res = np.outer(res, res.conj())
    if isinstance(qubit, (int, np.integer)):
        q = np.zeros((h.m_levels, h.m_levels), complex)
        q[qubit, qubit] = 1.0
    else:
        q = np.asarray(qubit, complex)
        if q.ndim == 1:
            q = np.outer(q, q.conj())
    return DensityMatrix(np.kron(res, q), h)


def suggest_n_fock(n_max: float) -> int:
    r = math.sqrt(max(n_max, 0.0))
    # Kerr-broadened states at large n, Poisson tail at small n
    return int(math.ceil(max(1.5 * n_max + 5 * r, n_max + 6 * r + 6)))


def change_frame(rho: DensityMatrix, new_frame: float, t: float) -> DensityMatrix:
    """Re-express a state taken at time t in a frame rotating at ``new_frame``."""
    h = rho.hilbert
    N = excitation_number(h)
    ph = np.exp(1j * (new_frame - h.frame) * t * N)
    data = ph[:, None] * rho.data * ph.conj()[None, :]
    return DensityMatrix(data, h.with_frame(new_frame))
