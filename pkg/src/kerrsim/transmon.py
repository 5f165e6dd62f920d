"""Cooper-pair box in the charge basis: spectrum, matrix elements, couplings."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .circuit import CONST

__all__ = [
    "TransmonSpec",
    "TransmonSpectrum",
    "QubitDissipation",
    "effective_EJ",
    "diagonalize_cpb",
    "vacuum_voltage",
    "coupling_constants",
    "scaled_couplings",
    "fit_transmon",
]


@dataclass(frozen=True)
class TransmonSpec:
    """Split Cooper-pair box parameters.

    Energies are given as angular frequencies E/hbar (rad/s).  ``E_C`` is the
    charging energy of a Cooper pair, (2e)^2/2C, so that for a transmon
    hbar*omega_01 ~ sqrt(2 E_J E_C) and the anharmonicity is ~ -E_C/4.
    """

    E_J0: float
    E_C: float
    N_g: float = 0.0
    flux_ratio: float = 0.0
    n_charge_cutoff: int = 15
    M: int = 3

    def validate(self) -> None:
        if self.E_J0 <= 0 or self.E_C <= 0:
            raise ValueError("E_J0 and E_C must be positive")
        if self.n_charge_cutoff < 10:
            raise ValueError("n_charge_cutoff must be >= 10")
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if self.M > 2 * self.n_charge_cutoff - 3:
            raise ValueError(
                f"M = {self.M} exceeds the reliable window 2*n_cutoff - 3 = "
                f"{2 * self.n_charge_cutoff - 3}")


@dataclass(frozen=True)
class TransmonSpectrum:
    """Lowest M levels: omega[0] = 0, n_matrix[i, j] = <i|N|j> (real, gauge fixed)."""

    omega: np.ndarray
    n_matrix: np.ndarray
    E_J_eff: float = float("nan")

    @property
    def M(self) -> int:
        return len(self.omega)

    @property
    def omega01(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def anharmonicity(self) -> float:
        if self.M < 3:
            raise ValueError("anharmonicity needs three levels")
        return float(self.omega[2] - 2 * self.omega[1] + self.omega[0])

    @classmethod
    def ladder(cls, omega01: float, anharmonicity: float, M: int = 3) -> "TransmonSpectrum":
        """Weakly anharmonic ladder with harmonic matrix elements sqrt(i+1)."""
        i = np.arange(M)
        omega = omega01 * i + anharmonicity * i * (i - 1) / 2
        n = np.zeros((M, M))
        for k in range(M - 1):
            n[k, k + 1] = n[k + 1, k] = np.sqrt(k + 1)
        return cls(omega=omega, n_matrix=n)


@dataclass(frozen=True)
class QubitDissipation:
    """Relaxation rate gamma (1->0) and pure dephasing rates per level (rad/s).

    ``gamma_phi[i]`` is the rate attached to level i.  The default convention
    used by :meth:`uniform` sets level 0 to zero and every excited level to the
    same value, so that the 0-1 coherence decays at gamma_phi.
    """

    gamma: float = 0.0
    gamma_phi: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.gamma < 0 or any(g < 0 for g in self.gamma_phi):
            raise ValueError("rates must be non-negative")

    @classmethod
    def uniform(cls, gamma: float, gamma_phi: float, M: int) -> "QubitDissipation":
        return cls(gamma=gamma, gamma_phi=tuple([0.0] + [gamma_phi] * (M - 1)))

    @classmethod
    def from_times(cls, T1: float | None, Tphi: float | None, M: int) -> "QubitDissipation":
        g = 0.0 if not T1 else 1.0 / T1
        gp = 0.0 if not Tphi else 1.0 / Tphi
        return cls.uniform(g, gp, M)

    def relaxation(self, i: int) -> float:
        """gamma_{i+1,i} = (i+1) gamma."""
        return (i + 1) * self.gamma

    @property
    def gamma_phi01(self) -> float:
        """Pure dephasing rate of the 0-1 coherence (D[sqrt(2 g_i)|i><i|] adds g_0 + g_1)."""
        gp = list(self.gamma_phi) + [0.0, 0.0]
        return gp[0] + gp[1]


def effective_EJ(E_J0: float, flux_ratio: float) -> float:
    """SQUID Josephson energy 2 E_J0 |cos(pi Phi/Phi0)|."""
    return 2.0 * E_J0 * abs(np.cos(np.pi * flux_ratio))


def _charge_hamiltonian(E_J: float, E_C: float, N_g: float, ncut: int) -> np.ndarray:
    N = np.arange(-ncut, ncut + 1, dtype=float)
    H = np.diag(E_C * (N - N_g) ** 2)
    off = -0.5 * E_J * np.ones(2 * ncut)
    H += np.diag(off, 1) + np.diag(off, -1)
    return H


def diagonalize_cpb(spec: TransmonSpec) -> TransmonSpectrum:
    """Lowest M eigenpairs of the charge-basis Hamiltonian.

    Returns frequencies offset so omega[0] = 0 and <i|N|j> in the eigenbasis
    with the sign gauge <i|N|i+1> > 0.
    """
    spec.validate()
    E_J = effective_EJ(spec.E_J0, spec.flux_ratio)
    ncut = spec.n_charge_cutoff
    H = _charge_hamiltonian(E_J, spec.E_C, spec.N_g, ncut)
    try:
        w, v = scipy.linalg.eigh(H, subset_by_index=[0, spec.M - 1])
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError(f"charge-basis eigensolve failed: {exc}") from exc
    N = np.arange(-ncut, ncut + 1, dtype=float)
    # fix gauge: walk up the ladder, flipping so <i|N|i+1> > 0
    for i in range(spec.M - 1):
        el = v[:, i] @ (N * v[:, i + 1])
        if el < 0:
            v[:, i + 1] *= -1
    nmat = v.T @ (N[:, None] * v)
    nmat = 0.5 * (nmat + nmat.T)
    return TransmonSpectrum(omega=w - w[0], n_matrix=nmat, E_J_eff=E_J)


def vacuum_voltage(omega_r: float, Z0: float) -> float:
    """Vacuum voltage fluctuation delta V0 = omega_r sqrt(hbar Z0 / pi)."""
    return omega_r * np.sqrt(CONST.hbar * Z0 / np.pi)


def coupling_constants(spectrum: TransmonSpectrum, beta: float, deltaV0: float) -> np.ndarray:
    """Nearest-neighbour couplings g_{i,i+1} = 2 e beta <i|N|i+1> dV0 / hbar (rad/s)."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    n = spectrum.n_matrix
    els = np.array([n[i, i + 1] for i in range(spectrum.M - 1)])
    return 2 * CONST.e * beta * els * deltaV0 / CONST.hbar


def scaled_couplings(spectrum: TransmonSpectrum, g01: float) -> np.ndarray:
    """Couplings from a measured g = g_{0,1}, scaled by matrix-element ratios."""
    n = spectrum.n_matrix
    base = n[0, 1]
    if base == 0:
        raise ValueError("<0|N|1> vanishes; cannot scale g")
    return np.array([g01 * n[i, i + 1] / base for i in range(spectrum.M - 1)])


def fit_transmon(omega01: float, anharmonicity: float, *, N_g: float = 0.0,
                 n_charge_cutoff: int = 15, M: int = 3, tol: float = 2 * np.pi * 1e3,
                 max_iter: int = 50) -> TransmonSpec:
    """Invert (E_J, E_C) -> (omega_01, anharmonicity) by 2-D Newton iteration.

    Returns a spec at zero flux (E_J0 = E_J / 2).  ``tol`` is in rad/s.
    """
    if anharmonicity >= 0 or omega01 <= 0:
        raise ValueError("expects omega01 > 0 and negative anharmonicity")
    M_fit = max(M, 3)

    def model(x):
        EJ, EC = np.exp(x)
        s = diagonalize_cpb(TransmonSpec(EJ / 2, EC, N_g, 0.0, n_charge_cutoff, M_fit))
        return np.array([s.omega01, s.anharmonicity])

    target = np.array([omega01, anharmonicity])
    EC0 = -4.0 * anharmonicity
    EJ0 = (omega01 + EC0 / 4) ** 2 / (2 * EC0)
    x = np.log([EJ0, EC0])
    for _ in range(max_iter):
        f = model(x) - target
        if np.all(np.abs(f) < tol):
            EJ, EC = np.exp(x)
            return TransmonSpec(EJ / 2, EC, N_g, 0.0, n_charge_cutoff, M)
        J = np.empty((2, 2))
        for k in range(2):
            dx = np.zeros(2)
            dx[k] = 1e-6
            J[:, k] = (model(x + dx) - model(x - dx)) / 2e-6
        step = np.linalg.solve(J, -f)
        x = x + np.clip(step, -0.5, 0.5)
    raise RuntimeError("transmon fit did not converge")
