"""Classical steady state of the pumped Kerr resonator.

The field obeys, in the frame of the pump,
    [i(delta + K n + K' n^2) + kappa/2] alpha = -i eps,   n = |alpha|^2,
with delta = omega_r - omega_p = Omega kappa / 2.  Taking the modulus gives
the real polynomial |eps|^2 = n [(delta + K n + K' n^2)^2 + kappa^2/4].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .circuit import CONST, KerrParameters

__all__ = [
    "DriveSpec",
    "SteadyStateSolution",
    "Thresholds",
    "CriticalPoint",
    "reduced_detuning",
    "pump_frequency",
    "epsilon_from_dbm",
    "dbm_from_epsilon",
    "response_polynomial",
    "steady_states",
    "select_branch",
    "bifurcation_thresholds",
    "critical_point",
    "small_signal_gain",
    "junction_current",
    "stability_diagram",
    "DEFAULT_ATTENUATION_DB",
]

DEFAULT_ATTENUATION_DB = 110.8
OMEGA_C = math.sqrt(3.0)


@dataclass(frozen=True)
class DriveSpec:
    omega_d: float
    epsilon: complex
    label: str = "pump"

    def __post_init__(self):
        if self.label not in ("pump", "spectroscopy", "readout"):
            raise ValueError(f"unknown drive label {self.label!r}")


@dataclass(frozen=True)
class SteadyStateSolution:
    alpha: complex
    n: float
    stable: bool
    branch: str  # "L", "H" or "unstable"


@dataclass(frozen=True)
class Thresholds:
    """Drive amplitudes bounding the bistable window, plus the turning-point photon numbers."""

    eps_minus: float
    eps_plus: float
    n_low_turn: float
    n_high_turn: float

    def powers_dbm(self, omega_p: float, kappa: float,
                   attenuation_db: float = DEFAULT_ATTENUATION_DB) -> tuple[float, float]:
        return (dbm_from_epsilon(self.eps_minus, omega_p, kappa, attenuation_db),
                dbm_from_epsilon(self.eps_plus, omega_p, kappa, attenuation_db))


@dataclass(frozen=True)
class CriticalPoint:
    Omega_c: float
    eps_c: float
    n_c: float

    def power_dbm(self, kerr: KerrParameters, attenuation_db: float = DEFAULT_ATTENUATION_DB) -> float:
        omega_p = pump_frequency(self.Omega_c, kerr)
        return dbm_from_epsilon(self.eps_c, omega_p, kerr.kappa, attenuation_db)


def reduced_detuning(omega_p: float, kerr: KerrParameters) -> float:
    """Omega = 2Q(1 - omega_p/omega_r)."""
    return 2 * kerr.Q * (1 - omega_p / kerr.omega_r)


def pump_frequency(Omega: float, kerr: KerrParameters) -> float:
    """Inverse of :func:`reduced_detuning`."""
    return kerr.omega_r * (1 - Omega / (2 * kerr.Q))


def epsilon_from_dbm(p_dbm, omega_p: float, kappa: float,
                     attenuation_db: float = DEFAULT_ATTENUATION_DB):
    """Drive amplitude eps = sqrt(kappa P_in / (hbar omega_p)), P_in after attenuation."""
    p_in = 10 ** ((np.asarray(p_dbm, float) - attenuation_db - 30) / 10)
    return np.sqrt(kappa * p_in / (CONST.hbar * omega_p))


def dbm_from_epsilon(eps, omega_p: float, kappa: float,
                     attenuation_db: float = DEFAULT_ATTENUATION_DB):
    p_in = np.abs(np.asarray(eps, float)) ** 2 * CONST.hbar * omega_p / kappa
    with np.errstate(divide="ignore"):
        return 10 * np.log10(p_in) + 30 + attenuation_db


def _detuning_poly(delta: float, K: float, Kp: float) -> Polynomial:
    return Polynomial([delta, K, Kp])


def response_polynomial(delta: float, kappa: float, K: float, Kp: float = 0.0) -> Polynomial:
    """f(n) = n[(delta + K n + K' n^2)^2 + kappa^2/4]."""
    d = _detuning_poly(delta, K, Kp)
    return Polynomial([0, 1]) * (d * d + kappa**2 / 4)


def _alpha_from_n(n: float, eps: complex, delta: float, kappa: float, K: float, Kp: float) -> complex:
    return -eps / ((delta + K * n + Kp * n * n) - 0.5j * kappa)


def _monotone_pieces(f: Polynomial, n_max: float) -> list[float]:
    crit = f.deriv().roots()
    pts = sorted(float(r.real) for r in crit
                 if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)) and 0 < r.real < n_max)
    return [0.0] + pts + [n_max]


def _solve_n(delta: float, kappa: float, K: float, Kp: float, eps2: float) -> list[float]:
    """All non-negative real roots of f(n) = eps2 by bracketing on monotone pieces."""
    if eps2 == 0:
        return [0.0]
    if K == 0 and Kp == 0:
        return [eps2 / (delta**2 + kappa**2 / 4)]
    f = response_polynomial(delta, kappa, K, Kp)
    n_max = 4 * eps2 / kappa**2 * (1 + 1e-9) + 1e-12
    edges = _monotone_pieces(f, n_max)
    roots = []
    for a, b in zip(edges[:-1], edges[1:]):
        fa, fb = f(a) - eps2, f(b) - eps2
        if fa == 0:
            roots.append(a)
            continue
        if fa * fb < 0:
            roots.append(brentq(lambda x: f(x) - eps2, a, b, xtol=1e-300, rtol=1e-14, maxiter=500))
    if not roots:
        # double root exactly at a turning point
        roots = [edges[np.argmin([abs(f(x) - eps2) for x in edges])]]
    out = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > 1e-12 * max(1.0, r):
            out.append(r)
    return out


def _inflection_n(delta: float, K: float) -> float:
    return -2 * delta / (3 * K) if K != 0 else math.inf


def steady_states(Omega: float, epsilon_p: complex, kerr: KerrParameters,
                  include_Kp: bool = False, delta_shift: float = 0.0,
                  K_shift: float = 0.0) -> list[SteadyStateSolution]:
    """All classical steady states at reduced detuning Omega and drive eps.

    ``delta_shift`` and ``K_shift`` add to the detuning and Kerr term (used by
    the qubit-state dependent pointer-state equations).  Solutions are ordered
    by photon number; with three roots the middle one is unstable.
    """
    kappa = kerr.kappa
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    delta = Omega * kappa / 2 + delta_shift
    K = kerr.K + K_shift
    Kp = kerr.Kp if include_Kp else 0.0
    eps = complex(epsilon_p)
    ns = _solve_n(delta, kappa, K, Kp, abs(eps) ** 2)
    sols = []
    if len(ns) == 3:
        labels = [("L", True), ("unstable", False), ("H", True)]
    elif len(ns) == 2:
        # tangency: the double root is marginal, the other one stable
        fp = response_polynomial(delta, kappa, K, Kp).deriv()
        marginal = int(np.argmin([abs(fp(n)) for n in ns]))
        labels = [("L", True), ("H", True)]
        labels[marginal] = ("unstable", False)
    else:
        n_infl = _inflection_n(delta, K)
        lab = "H" if (K != 0 and 0 < n_infl < ns[0]) else "L"
        labels = [(lab, True)]
    for n, (lab, st) in zip(ns, labels):
        sols.append(SteadyStateSolution(alpha=_alpha_from_n(n, eps, delta, kappa, K, Kp),
                                        n=float(n), stable=st, branch=lab))
    return sols


def select_branch(solutions: list[SteadyStateSolution], branch: str,
                  strict: bool = False) -> SteadyStateSolution:
    """Pick a stable branch.

    Without ``strict`` a single stable root serves both requests (a sweep
    follows the requested branch while it exists).
    """
    stable = [s for s in solutions if s.stable]
    if len(stable) == 1 and not strict:
        return stable[0]
    for s in stable:
        if s.branch == branch:
            return s
    raise ValueError(f"branch {branch!r} absent")


def bifurcation_thresholds(Omega: float, kerr: KerrParameters, include_Kp: bool = False,
                           delta_shift: float = 0.0, K_shift: float = 0.0) -> Thresholds | None:
    """Edges of the bistable window, or None when there is none.

    eps_plus is where the L branch ends (upper threshold), eps_minus where the
    H branch ends.
    """
    kappa = kerr.kappa
    delta = Omega * kappa / 2 + delta_shift
    K = kerr.K + K_shift
    Kp = kerr.Kp if include_Kp else 0.0
    if K == 0 and Kp == 0:
        return None
    f = response_polynomial(delta, kappa, K, Kp)
    crit = f.deriv().roots()
    turns = sorted(float(r.real) for r in crit if abs(r.imag) < 1e-12 * max(1.0, abs(r.real)) and r.real > 0)
    if len(turns) < 2:
        return None
    n1, n2 = turns[0], turns[1]
    e_plus, e_minus = f(n1), f(n2)
    if not e_plus > e_minus:
        return None
    return Thresholds(eps_minus=math.sqrt(max(e_minus, 0.0)), eps_plus=math.sqrt(e_plus),
                      n_low_turn=n1, n_high_turn=n2)


def critical_point(kerr: KerrParameters) -> CriticalPoint:
    """Onset of bistability for the Kerr-only response (K' ignored)."""
    if kerr.K == 0:
        raise ValueError("no bifurcation for a linear resonator")
    kappa = kerr.kappa
    # sign of the detuning must oppose K for the bend to reach positive n
    delta = -np.sign(kerr.K) * OMEGA_C * kappa / 2
    n_c = -2 * delta / (3 * kerr.K)
    eps_c = math.sqrt(n_c * ((delta + kerr.K * n_c) ** 2 + kappa**2 / 4))
    return CriticalPoint(Omega_c=float(np.sign(delta)) * OMEGA_C, eps_c=eps_c, n_c=n_c)


def _jacobian_terms(alpha: complex, delta: float, kappa: float, K: float, Kp: float):
    n = abs(alpha) ** 2
    A = 1j * (delta + 2 * K * n + 3 * Kp * n * n) + kappa / 2
    B = 1j * (K + 2 * Kp * n) * alpha**2
    return A, B


def small_signal_gain(Omega: float, epsilon_p: float, kerr: KerrParameters, branch: str = "L",
                      include_Kp: bool = False) -> float:
    """|d alpha / d eps| on the selected branch, times kappa/2.

    Equals 1 for a linear resonator pumped on resonance.  Raises
    ``ZeroDivisionError`` exactly at a turning point.
    """
    sols = steady_states(Omega, epsilon_p, kerr, include_Kp=include_Kp)
    s = select_branch(sols, branch)
    delta = Omega * kerr.kappa / 2
    Kp = kerr.Kp if include_Kp else 0.0
    A, B = _jacobian_terms(s.alpha, delta, kerr.kappa, kerr.K, Kp)
    det = abs(A) ** 2 - abs(B) ** 2
    if abs(det) < 1e-14 * kerr.kappa**2:
        raise ZeroDivisionError("gain diverges at a bifurcation threshold")
    return float(abs(np.conj(A) + B) / abs(det) * kerr.kappa / 2)


def junction_current(alpha: complex, kerr: KerrParameters) -> float:
    """Amplitude of the oscillating junction current sqrt(hbar/(pi Z0)) omega_r |alpha|."""
    if not np.isfinite(kerr.Z0):
        raise ValueError("KerrParameters carries no Z0")
    return float(math.sqrt(CONST.hbar / (math.pi * kerr.Z0)) * kerr.omega_r * abs(alpha))


def stability_diagram(kerr: KerrParameters, omegas, powers_dbm,
                      attenuation_db: float = DEFAULT_ATTENUATION_DB) -> list[dict]:
    """Region tags on a (Omega, P) grid.  Rows are dicts ready for CSV output."""
    rows = []
    for Om in omegas:
        wp = pump_frequency(Om, kerr)
        for P in powers_dbm:
            eps = float(epsilon_from_dbm(P, wp, kerr.kappa, attenuation_db))
            sols = steady_states(Om, eps, kerr)
            stable = [s for s in sols if s.stable]
            if len(sols) == 3:
                region = "bistable"
            else:
                region = "mono-" + stable[0].branch
            rows.append(dict(omega_reduced=float(Om), power_dbm=float(P), n_roots=len(sols),
                             n_low=stable[0].n, n_high=stable[-1].n, region=region))
    return rows
