"""Backaction of the pumped Kerr resonator on a multilevel qubit.

Dispersive constants referenced to the pump frequency, qubit-state dependent
pointer states, Stark and Lamb shifts, and the effective two-level rates.
Sign convention: the resonator frequency with the qubit in level i is
omega_r + S_i, so a two-level pull is omega_r(1) - omega_r(0) = 2 chi.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .circuit import KerrParameters
from .semiclassical import _jacobian_terms, select_branch, steady_states
from .transmon import QubitDissipation, TransmonSpectrum

__all__ = [
    "BackactionWarning",
    "DispersiveConstants",
    "PointerStates",
    "LevelShifts",
    "BackactionRates",
    "dispersive_chi",
    "dispersive_constants",
    "pointer_states",
    "pointer_residuals",
    "stark_lamb_shifts",
    "rates",
    "linear_pointer_states",
    "stark_shift_01",
    "nbar_from_stark",
    "validity_flags",
    "backaction_point",
]

LAMBDA_MAX = 0.3
D2_MAX = 0.5


class BackactionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DispersiveConstants:
    """Pump-referenced constants; arrays indexed by qubit level.

    lambda_p, chi_p have length M-1 (transition i -> i+1); S_p, K_p length M.
    """

    lambda_p: np.ndarray
    chi_p: np.ndarray
    S_p: np.ndarray
    K_p: np.ndarray
    omega_p: float
    g: np.ndarray
    omega: np.ndarray
    chi: float = float("nan")
    s_bar: float = float("nan")
    n_crit: float = float("nan")

    @property
    def M(self) -> int:
        return len(self.S_p)


@dataclass(frozen=True)
class PointerStates:
    alpha_p: np.ndarray
    alpha_s: np.ndarray
    branch: tuple
    omega_p: float

    @property
    def n(self) -> np.ndarray:
        return np.abs(self.alpha_p) ** 2

    @property
    def D(self) -> float:
        return float(abs(self.alpha_p[1] - self.alpha_p[0])) if len(self.alpha_p) > 1 else 0.0


@dataclass(frozen=True)
class LevelShifts:
    omega_pp: np.ndarray      # omega_i''
    omega_ppp: np.ndarray     # omega_i'''
    omega_r_prime: np.ndarray  # Kerr-shifted resonator seen from level i
    lambda_r: np.ndarray
    L_r: np.ndarray


@dataclass(frozen=True)
class BackactionRates:
    gamma_down: float
    gamma_up: float
    gamma_phi_tp: float
    shifts: LevelShifts

    @property
    def Gamma_2_pred(self) -> float:
        return 0.5 * self.gamma_down + 0.5 * self.gamma_up + self.gamma_phi_tp


# --- constants ------------------------------------------------------------

def dispersive_chi(spectrum: TransmonSpectrum, g_list, omega_r: float):
    """(chi, s_bar, n_crit, chi01, chi12) from resonator-referenced detunings."""
    g = np.asarray(g_list, float)
    w = np.asarray(spectrum.omega, float)
    delta = w[1] - w[0] - omega_r
    if delta == 0:
        raise ZeroDivisionError("qubit resonant with the resonator (Delta = 0)")
    chi01 = g[0] ** 2 / delta
    if spectrum.M >= 3 and len(g) >= 2 and g[1] != 0:
        d12 = w[2] - w[1] - omega_r
        if d12 == 0:
            raise ZeroDivisionError("1-2 transition resonant with the resonator")
        chi12 = g[1] ** 2 / d12
    else:
        chi12 = 0.0
    chi = chi01 - chi12 / 2
    return chi, -chi12 / 2, delta**2 / (4 * g[0] ** 2), chi01, chi12


def _get(a, i):
    return a[i] if 0 <= i < len(a) else 0.0


def dispersive_constants(spectrum: TransmonSpectrum, g_list, omega_p: float,
                         M: int | None = None, omega_r: float | None = None) -> DispersiveConstants:
    """lambda_i, chi_i, S_i and the fourth-order K_i, all at the pump frequency.

    Indices outside 0..M-2 for lambda/chi contribute zero.  ``omega_r`` (if
    given) fills the resonator-referenced chi, s_bar and n_crit fields.
    """
    M = spectrum.M if M is None else int(M)
    if M > spectrum.M:
        raise ValueError("M exceeds the number of computed levels")
    w = np.asarray(spectrum.omega[:M], float)
    g = np.asarray(g_list, float)[: M - 1]
    lam = np.zeros(M - 1)
    for i in range(M - 1):
        den = w[i + 1] - w[i] - omega_p
        if den == 0:
            raise ZeroDivisionError(f"pump resonant with the {i}-{i + 1} transition")
        lam[i] = -g[i] / den
    chi_p = -g * lam
    S = np.array([-(_get(chi_p, i) - _get(chi_p, i - 1)) for i in range(M)])
    l2 = lam**2
    K = np.empty(M)
    for i in range(M):
        K[i] = (-4 * S[i] * (_get(l2, i) + _get(l2, i - 1))
                - (3 * _get(chi_p, i + 1) * _get(l2, i) - _get(chi_p, i) * _get(l2, i + 1))
                + 3 * (_get(chi_p, i - 2) * _get(l2, i - 1) - _get(chi_p, i - 1) * _get(l2, i - 2)))
    chi = s_bar = n_crit = float("nan")
    if omega_r is not None:
        chi, s_bar, n_crit, _, _ = dispersive_chi(spectrum, g_list, omega_r)
    return DispersiveConstants(lam, chi_p, S, K, float(omega_p), g, w, chi, s_bar, n_crit)


# --- pointer states -------------------------------------------------------

def _branches(branch, M):
    if branch is None:
        return ("L",) * M
    if isinstance(branch, str):
        return (branch,) * M
    b = tuple(branch)
    if len(b) != M:
        raise ValueError("one branch label per level required")
    return b


def pointer_states(constants: DispersiveConstants, kerr: KerrParameters, epsilon_p: float,
                   epsilon_s: float = 0.0, omega_s: float | None = None,
                   branch=None, strict: bool | None = None) -> PointerStates:
    """Solve the per-level amplitude conditions for alpha_p,i and alpha_s,i.

    Level i sees detuning omega_r - omega_p + S_i, Kerr K + K_i/3! and K'.
    ``branch`` is None (adiabatic continuation from low power: L while it
    exists), one label for all levels, or a label per level.  An explicit
    label that is absent raises unless ``strict=False``.
    """
    if strict is None:
        strict = branch is not None
    if kerr.kappa <= 0:
        raise ValueError("kappa must be positive")
    M = constants.M
    labels = _branches(branch, M)
    delta = kerr.omega_r - constants.omega_p
    Omega = 2 * delta / kerr.kappa
    ap = np.zeros(M, complex)
    chosen = []
    for i in range(M):
        sols = steady_states(Omega, epsilon_p, kerr, include_Kp=True,
                             delta_shift=constants.S_p[i], K_shift=constants.K_p[i] / 6)
        s = select_branch(sols, labels[i], strict=strict)
        ap[i] = s.alpha
        chosen.append(s.branch)
    as_ = np.zeros(M, complex)
    if epsilon_s != 0:
        if omega_s is None:
            raise ValueError("omega_s required with a spectroscopy field")
        n = np.abs(ap) ** 2
        den = (kerr.omega_r - omega_s - 0.5j * kerr.kappa) + kerr.K * n + kerr.Kp * n**2
        as_ = -epsilon_s / den
    return PointerStates(ap, as_, tuple(chosen), constants.omega_p)


def pointer_residuals(constants: DispersiveConstants, kerr: KerrParameters, ps: PointerStates,
                      epsilon_p: float) -> np.ndarray:
    a = ps.alpha_p
    n = np.abs(a) ** 2
    f = ((kerr.omega_r - constants.omega_p + constants.S_p - 0.5j * kerr.kappa)
         + (kerr.K + constants.K_p / 6) * n + kerr.Kp * n**2) * a + epsilon_p
    return np.abs(f)


# --- shifts and rates -----------------------------------------------------

def stark_lamb_shifts(constants: DispersiveConstants, pointer: PointerStates,
                      kerr: KerrParameters) -> LevelShifts:
    """omega_i'' and omega_i''' with each level using its own |alpha_p,i|^2.

    omega_i'' carries the quartic term 1/4 K_i |alpha|^4 as in omega_i'''.
    lambda_i^r uses the Kerr-shifted resonator seen from the lower level i.
    """
    M = constants.M
    n = np.abs(pointer.alpha_p) ** 2
    w2 = constants.omega + constants.S_p * n + 0.25 * constants.K_p * n**2
    wr = kerr.omega_r + 2 * kerr.K * n + 3 * kerr.Kp * n**2
    lam_r = np.zeros(M - 1)
    for i in range(M - 1):
        den = w2[i + 1] - w2[i] - wr[i]
        if abs(den) < 1e-9 * kerr.omega_r:
            raise ZeroDivisionError(f"dressed resonance between levels {i} and {i + 1}")
        if abs(constants.g[i] / den) >= LAMBDA_MAX:
            warnings.warn(f"|lambda_{i}^r| >= {LAMBDA_MAX}; dispersive formulas unreliable",
                          BackactionWarning)
        lam_r[i] = -constants.g[i] / den
    L = np.array([0.0] + [-constants.g[i - 1] * lam_r[i - 1] for i in range(1, M)])
    return LevelShifts(w2, w2 + L, wr, lam_r, L)


def rates(constants: DispersiveConstants, pointer: PointerStates, kerr: KerrParameters,
          dissipation: QubitDissipation | None) -> BackactionRates:
    """Two-level effective rates; |alpha_p| is taken from level 0."""
    d = dissipation or QubitDissipation(0.0, ())
    gamma, gphi = d.gamma, d.gamma_phi01
    sh = stark_lamb_shifts(constants, pointer, kerr)
    a0, a1 = pointer.alpha_p[0], pointer.alpha_p[1]
    D2 = abs(a1 - a0) ** 2
    lam0 = constants.lambda_p[0]
    up = (2 * gphi + kerr.kappa * D2) * lam0**2 * abs(a0) ** 2
    down = gamma + up + sh.lambda_r[0] ** 2 * kerr.kappa
    chi = constants.chi_p
    dressed_decay = gamma * abs(2 * chi[0] * a0 - _get(chi, 1) * a1) ** 2 / (2 * constants.g[0] ** 2)
    gphi3 = gphi + 0.5 * kerr.kappa * D2 + dressed_decay
    return BackactionRates(float(down), float(up), float(gphi3), sh)


def stark_shift_01(constants: DispersiveConstants, pointer: PointerStates,
                   kerr: KerrParameters, per_level: bool = False) -> float:
    """Shift of omega_1''' - omega_0''' relative to zero pump field.

    By default both levels see the field of the initial state |0>,
    n = |alpha_p,0|^2, the single n that nbar_from_stark inverts.
    ``per_level=True`` evaluates each level at its own pointer amplitude.
    """
    if not per_level:
        a0 = np.full_like(pointer.alpha_p, pointer.alpha_p[0])
        pointer = PointerStates(a0, pointer.alpha_s, pointer.branch, pointer.omega_p)
    sh = stark_lamb_shifts(constants, pointer, kerr)
    zero = PointerStates(np.zeros_like(pointer.alpha_p), np.zeros_like(pointer.alpha_s),
                         pointer.branch, pointer.omega_p)
    sh0 = stark_lamb_shifts(constants, zero, kerr)
    return float((sh.omega_ppp[1] - sh.omega_ppp[0]) - (sh0.omega_ppp[1] - sh0.omega_ppp[0]))


def linear_pointer_states(chi: float, omega_r: float, omega_p: float, epsilon_p: float,
                          kappa: float):
    """Linear-resonator pointer states and measurement-induced rates.

    Level 0 sees omega_r - chi and level 1 omega_r + chi (pull 2 chi).
    Returns (alpha_0, alpha_1, D, Gamma_phi_m, delta_omega_a).
    """
    d = omega_r - omega_p
    z0 = (d - chi) - 0.5j * kappa
    z1 = (d + chi) - 0.5j * kappa
    a0 = -epsilon_p / z0
    a1 = -epsilon_p / z1
    # a1 - a0 = 2 chi eps / (z0 z1), free of cancellation when chi << kappa
    D = 2 * abs(chi) * abs(epsilon_p) / (abs(z0) * abs(z1))
    # a0 a1* = eps^2 z0* z1 / |z0 z1|^2 with Im(z0* z1) = chi kappa exactly
    w = abs(epsilon_p) ** 2 / (abs(z0) * abs(z1)) ** 2
    im = chi * kappa * w
    re = ((d - chi) * (d + chi) + 0.25 * kappa**2) * w
    return a0, a1, float(D), float(2 * chi * im), float(2 * chi * re)


def nbar_from_stark(delta_omega01: float, constants: DispersiveConstants) -> float:
    """Invert (S_1 - S_0) n + 1/4 (K_1 - K_0) n^2 = delta_omega01 on the monotone branch."""
    a = constants.S_p[1] - constants.S_p[0]
    b = 0.25 * (constants.K_p[1] - constants.K_p[0])
    y = float(delta_omega01)
    if y == 0:
        return 0.0
    if b == 0:
        n = y / a
        if n < 0:
            raise ValueError("no non-negative photon number gives this shift")
        return float(n)
    disc = a * a + 4 * b * y
    if disc < 0:
        raise ValueError("shift beyond the extremum of the quadratic Stark model")
    # stable form of the root continuous with y / a at small y
    q = -0.5 * (a + math.copysign(math.sqrt(disc), a))
    n = -y / q if q != 0 else float("nan")
    if not n >= 0:
        raise ValueError("no non-negative photon number gives this shift")
    # must lie on the monotone piece below the vertex
    vertex = -a / (2 * b)
    if vertex > 0 and n > vertex * (1 + 1e-12):
        raise ValueError("shift lies beyond the monotone branch")
    return float(n)


def validity_flags(constants: DispersiveConstants, pointer: PointerStates) -> list[str]:
    flags = []
    if np.any(np.abs(constants.lambda_p) >= LAMBDA_MAX):
        flags.append("lambda")
    if pointer.D**2 >= D2_MAX:
        flags.append("D2")
    return flags


def backaction_point(constants: DispersiveConstants, kerr: KerrParameters, epsilon_p: float,
                     dissipation: QubitDissipation | None, branch=None) -> dict:
    """One row of the analytic backaction sweep (rates in rad/s).

    The requested branch is followed where it exists, the other one elsewhere.
    """
    ps = pointer_states(constants, kerr, epsilon_p, branch=branch, strict=False)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BackactionWarning)
        r = rates(constants, ps, kerr, dissipation)
        stark = stark_shift_01(constants, ps, kerr)
    flags = validity_flags(constants, ps)
    if caught and "lambda" not in flags:
        flags.append("lambda_r")
    delta0 = kerr.omega_r - constants.omega_p + constants.S_p[0]
    A, B = _jacobian_terms(ps.alpha_p[0], delta0, kerr.kappa, kerr.K + constants.K_p[0] / 6, kerr.Kp)
    det = abs(A) ** 2 - abs(B) ** 2
    gain = float(abs(np.conj(A) + B) / abs(det) * kerr.kappa / 2) if det != 0 else float("inf")
    return dict(n0=float(ps.n[0]), n1=float(ps.n[1]), D=ps.D, branch0=ps.branch[0],
                stark=stark, gamma_phi=r.gamma_phi_tp, gamma_up=r.gamma_up,
                gamma_down=r.gamma_down, Gamma2=r.Gamma_2_pred, gain=gain,
                flags=flags, pointer=ps, rates=r)
