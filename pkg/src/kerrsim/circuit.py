"""Junction + coplanar resonator -> effective Kerr oscillator constants.

All frequencies are angular (rad/s). Conversions to GHz/MHz live in the
config layer only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.constants as sc

__all__ = [
    "PhysicalConstants",
    "CONST",
    "JunctionResonatorSpec",
    "KerrParameters",
    "derive_equivalent_circuit",
    "kerr_constants",
    "thermal_occupation",
    "bare_frequency_for_loaded",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """Exact SI constants (2019 redefinition)."""

    hbar: float = sc.hbar
    e: float = sc.e
    k_B: float = sc.k
    h: float = sc.h

    @property
    def phi0(self) -> float:
        """Reduced flux quantum hbar/2e."""
        return self.hbar / (2.0 * self.e)

    @property
    def R_K(self) -> float:
        """Resistance quantum h/e^2."""
        return self.h / self.e**2


CONST = PhysicalConstants()


@dataclass(frozen=True)
class JunctionResonatorSpec:
    """Physical inputs of the junction-embedded resonator.

    Parameters
    ----------
    I0 : junction critical current (A)
    omega1 : bare resonator angular frequency without junction (rad/s)
    Z0 : characteristic impedance (Ohm)
    Q : quality factor
    T : bath temperature (K); zero is allowed
    """

    I0: float
    omega1: float
    Z0: float
    Q: float
    T: float = 0.0

    def validate(self) -> None:
        for name in ("I0", "omega1", "Z0", "Q"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if self.Q <= 1:
            raise ValueError(f"Q must exceed 1, got {self.Q}")
        if self.T < 0:
            raise ValueError(f"T must be non-negative, got {self.T}")


@dataclass(frozen=True)
class KerrParameters:
    """Effective single-mode Kerr oscillator.

    Only ``omega_r``, ``K``, ``Kp`` and ``kappa`` are needed by the dynamics;
    the circuit fields are ``nan`` when the object is built directly from
    frequencies (desk-scale systems).
    """

    omega_r: float
    K: float
    Kp: float
    kappa: float
    p: float = float("nan")
    L_J: float = float("nan")
    L_e: float = float("nan")
    L_t: float = float("nan")
    C_e: float = float("nan")
    Z_e: float = float("nan")
    Z0: float = float("nan")
    n_th: float = 0.0
    T: float = 0.0

    @property
    def Q(self) -> float:
        return self.omega_r / self.kappa

    def with_temperature(self, T: float) -> "KerrParameters":
        return replace(self, T=T, n_th=thermal_occupation(self.omega_r, T))

    def with_omega_r(self, omega_r: float) -> "KerrParameters":
        # keeps kappa fixed (shifts of a few MHz do not change the loss rate)
        return replace(self, omega_r=omega_r)

    @classmethod
    def from_frequencies(cls, f_r: float, kerr: float, kappa: float, kerr5: float = 0.0,
                         T: float = 0.0, Z0: float = float("nan")) -> "KerrParameters":
        """Build from ordinary frequencies in Hz (f_r, K/2pi, kappa/2pi, K'/2pi)."""
        w = 2 * np.pi
        return cls(omega_r=w * f_r, K=w * kerr, Kp=w * kerr5, kappa=w * kappa, Z0=Z0,
                   T=T, n_th=thermal_occupation(w * f_r, T))


def thermal_occupation(omega: float, T: float) -> float:
    """Bose occupation 1/(exp(hbar w / k_B T) - 1); zero at T = 0."""
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if T == 0:
        return 0.0
    x = CONST.hbar * omega / (CONST.k_B * T)
    return float(1.0 / np.expm1(x))


def kerr_constants(p: float, omega_r: float, Z_e: float) -> tuple[float, float]:
    """Third- and fifth-order nonlinear constants (K, K') in rad/s."""
    if not 0 <= p < 1:
        raise ValueError(f"participation ratio must lie in [0, 1), got {p}")
    if p == 0:
        return 0.0, 0.0
    K = -np.pi * p**3 * omega_r * Z_e / CONST.R_K
    Kp = (2.0 / (3.0 * p)) * (K**2 / omega_r) * (10 * p - 9)
    return float(K), float(Kp)


def derive_equivalent_circuit(spec: JunctionResonatorSpec) -> KerrParameters:
    """Lumped series-LC equivalent of the junction-embedded resonator."""
    spec.validate()
    L_J = CONST.phi0 / spec.I0
    L_e = np.pi * spec.Z0 / (2 * spec.omega1)
    C_e = 2.0 / (np.pi * spec.Z0 * spec.omega1)
    L_t = L_J + L_e
    p = L_J / L_t
    omega_r = 1.0 / math.sqrt(L_t * C_e)
    Z_e = math.sqrt(L_t / C_e)
    K, Kp = kerr_constants(p, omega_r, Z_e)
    return KerrParameters(
        omega_r=omega_r, K=K, Kp=Kp, kappa=omega_r / spec.Q, p=p,
        L_J=L_J, L_e=L_e, L_t=L_t, C_e=C_e, Z_e=Z_e, Z0=spec.Z0,
        n_th=thermal_occupation(omega_r, spec.T), T=spec.T,
    )


def bare_frequency_for_loaded(omega_r: float, I0: float, Z0: float) -> float:
    """Bare resonator frequency omega1 whose junction-loaded mode sits at omega_r.

    From omega_r^-2 = L_t C_e with x = 1/omega1:
    x^2 + (2 L_J / (pi Z0)) x - omega_r^-2 = 0, positive root.
    """
    if omega_r <= 0 or I0 <= 0 or Z0 <= 0:
        raise ValueError("omega_r, I0, Z0 must be positive")
    b = 2 * (CONST.phi0 / I0) / (np.pi * Z0)
    c = -1.0 / omega_r**2
    # numerically stable positive root
    x = 2 * (-c) / (b + math.sqrt(b * b - 4 * c))
    return 1.0 / x
