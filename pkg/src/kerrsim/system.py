"""Resonator + transmon system bundle and shipped parameter presets."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .circuit import KerrParameters
from .lindblad import HilbertConfig, build_static_hamiltonian, collapse_operators
from .semiclassical import DEFAULT_ATTENUATION_DB
from .transmon import QubitDissipation, TransmonSpectrum, scaled_couplings

__all__ = ["System", "desk_kerr", "desk_bare", "desk_readout", "desk_backaction",
           "reference_device", "PRESETS"]

TWO_PI = 2 * np.pi


@dataclass(frozen=True, eq=False)
class System:
    """Everything the master equation needs, in rad/s.

    ``g`` holds the couplings g_i of the i <-> i+1 transitions (length M-1).
    ``n_fock = None`` lets the experiments pick the truncation from the
    semiclassical photon number of the sweep.
    """

    kerr: KerrParameters
    spectrum: TransmonSpectrum | None = None
    g: tuple = ()
    dissipation: QubitDissipation | None = None
    n_fock: int | None = None
    attenuation_db: float = DEFAULT_ATTENUATION_DB
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        if self.spectrum is not None and len(self.g) < self.spectrum.M - 1:
            raise ValueError("need one coupling per adjacent level pair")

    @property
    def m_levels(self) -> int:
        return 1 if self.spectrum is None else self.spectrum.M

    def replace(self, **kw) -> "System":
        return replace(self, **kw)

    def with_temperature(self, T: float) -> "System":
        return replace(self, kerr=self.kerr.with_temperature(T))

    def with_gamma(self, gamma: float) -> "System":
        d = self.dissipation or QubitDissipation.uniform(0.0, 0.0, self.m_levels)
        return replace(self, dissipation=QubitDissipation(gamma, d.gamma_phi))

    def hilbert(self, frame: float = 0.0, n_fock: int | None = None) -> HilbertConfig:
        nf = n_fock or self.n_fock
        if nf is None:
            raise ValueError("n_fock not set")
        return HilbertConfig(int(nf), self.m_levels, frame)

    def hamiltonian(self, h: HilbertConfig):
        return build_static_hamiltonian(self.kerr, self.spectrum, self.g or None, h)

    def collapse(self, h: HilbertConfig):
        return collapse_operators(self.kerr, self.dissipation, h)

    # --- exact low-photon dressing ---------------------------------------

    @cached_property
    def _dressed(self) -> np.ndarray:
        """E[n, i]: eigenenergies labelled by maximal overlap with |n, i>."""
        M = self.m_levels
        nf = 8
        h = HilbertConfig(nf, M, 0.0, max_dim=10**6)
        H = build_static_hamiltonian(self.kerr, self.spectrum, self.g or None, h).data
        w, v = np.linalg.eigh(H)
        E = np.full((4, M), np.nan)
        for n in range(4):
            for i in range(M):
                k = int(np.argmax(np.abs(v[n * M + i]) ** 2))
                E[n, i] = w[k]
        return E

    def resonator_frequency(self, level: int = 0) -> float:
        """omega_r dressed by qubit level ``level`` (single-photon transition)."""
        E = self._dressed
        return float(E[1, level] - E[0, level])

    def effective_kerr(self, level: int = 0) -> float:
        E = self._dressed
        return float(E[2, level] - 2 * E[1, level] + E[0, level])

    def kerr_for_level(self, level: int = 0) -> KerrParameters:
        """Bare-resonator parameters seen with the qubit frozen in ``level``."""
        if self.m_levels == 1:
            return self.kerr
        return replace(self.kerr, omega_r=self.resonator_frequency(level),
                       K=self.effective_kerr(level))

    def cavity_pull(self) -> float:
        """Exact low-photon pull omega_r(|1>) - omega_r(|0>)."""
        return self.resonator_frequency(1) - self.resonator_frequency(0)

    def qubit_frequency(self) -> float:
        """Dressed 0-1 transition with the resonator in vacuum."""
        E = self._dressed
        return float(E[0, 1] - E[0, 0])


# --- presets --------------------------------------------------------------

DESK_F_R = 6.4535e9


def desk_kerr(T: float = 0.0) -> KerrParameters:
    """kappa/2pi = 5 MHz, K/2pi = -0.5 MHz, omega_r/2pi = 6.4535 GHz."""
    return KerrParameters.from_frequencies(DESK_F_R, -0.5e6, 5e6, T=T)


def desk_bare(T: float = 0.0) -> System:
    return System(desk_kerr(T), name="desk_bare")


def _desk_transmon(g_mhz: float, gamma: float, gamma_phi: float, detuning_mhz=-750.0,
                   anharm_mhz=-400.0, T: float = 0.0, name="desk") -> System:
    kerr = desk_kerr(T)
    spec = TransmonSpectrum.ladder(kerr.omega_r + TWO_PI * detuning_mhz * 1e6,
                                   TWO_PI * anharm_mhz * 1e6, 3)
    g = scaled_couplings(spec, TWO_PI * g_mhz * 1e6)
    diss = QubitDissipation.uniform(gamma, gamma_phi, 3)
    return System(kerr, spec, tuple(g), diss, name=name)


def desk_readout(gamma: float = 1.0 / 1e-6, T: float = 0.0) -> System:
    """Strong pull (2 chi/2pi about -3 MHz) for latching readout; T1 = 1 us by default."""
    return _desk_transmon(57.0, gamma, 0.0, T=T, name="desk_readout")


def desk_backaction(gamma: float = TWO_PI * 0.3e6, gamma_phi: float = TWO_PI * 0.3e6,
                    T: float = 0.0, g_mhz: float = 29.4) -> System:
    """Weak pull (2 chi/2pi about -0.8 MHz, n_crit about 160) for pull and Stark shift runs.

    ``g_mhz = 20.8`` halves the pull, keeping D^2 below 0.5 through the
    dephasing peak.
    """
    return _desk_transmon(g_mhz, gamma, gamma_phi, T=T, name="desk_backaction")


def reference_device() -> System:
    """Published device values; the anharmonicity is chosen to give chi/2pi ~ -0.8 MHz."""
    f_r, Q = 6.4535e9, 685.0
    kerr = KerrParameters.from_frequencies(f_r, -625e3, f_r / Q)
    spec = TransmonSpectrum.ladder(kerr.omega_r - TWO_PI * 732e6, -TWO_PI * 320e6, 3)
    g = scaled_couplings(spec, TWO_PI * 44e6)
    return System(kerr, spec, tuple(g), QubitDissipation.uniform(0.0, 0.0, 3),
                  attenuation_db=110.8, name="reference_device")


PRESETS = {
    "desk_bare": desk_bare,
    "desk_readout": desk_readout,
    "desk_backaction": desk_backaction,
    "reference_device": reference_device,
}
