"""Husimi Q distribution and phase-space switching probability."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .circuit import KerrParameters
from .semiclassical import steady_states

__all__ = [
    "PhaseSpaceGrid",
    "Separatrix",
    "coherent_amplitudes",
    "q_function",
    "auto_grid",
    "switching_probability",
    "default_separatrix",
]


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Q values on a rectangular grid.

    Stored values follow Q(alpha) = <alpha|rho|alpha>, without the 1/pi that
    would make it a probability density.
    """

    re: np.ndarray
    im: np.ndarray
    q: np.ndarray  # shape (len(im), len(re))

    @property
    def cell(self) -> float:
        return float((self.re[1] - self.re[0]) * (self.im[1] - self.im[0]))

    def total(self) -> float:
        """(1/pi) * integral of Q, which approximates tr(rho)."""
        return float(self.q.sum() * self.cell / np.pi)

    def alphas(self) -> np.ndarray:
        return self.re[None, :] + 1j * self.im[:, None]

    def rows(self):
        A = self.alphas()
        for a, v in zip(A.ravel(), self.q.ravel()):
            yield dict(re=float(a.real), im=float(a.imag), q=float(v))


@dataclass(frozen=True)
class Separatrix:
    """Line through ``point`` with unit ``normal`` pointing to the high side."""

    point: complex
    normal: complex

    def side(self, alpha):
        return np.real((np.asarray(alpha) - self.point) * np.conj(self.normal))

    def shifted(self, distance: float) -> "Separatrix":
        return Separatrix(self.point + distance * self.normal, self.normal)


def coherent_amplitudes(alphas: np.ndarray, n_fock: int) -> np.ndarray:
    """Matrix C[n, k] = exp(-|a_k|^2/2) a_k^n / sqrt(n!) by upward recursion."""
    a = np.asarray(alphas, complex).ravel()
    C = np.empty((n_fock, a.size), complex)
    C[0] = np.exp(-np.abs(a) ** 2 / 2)
    for n in range(1, n_fock):
        C[n] = C[n - 1] * a / np.sqrt(n)
    return C


def q_function(rho_res: np.ndarray, re: np.ndarray, im: np.ndarray,
               expected_max: float | None = None) -> PhaseSpaceGrid:
    """Evaluate Q on the grid re x im for a resonator density matrix."""
    rho_res = np.asarray(rho_res)
    n = rho_res.shape[0]
    re = np.asarray(re, float)
    im = np.asarray(im, float)
    if expected_max is not None:
        ext = min(np.abs(re).max(), np.abs(im).max())
        if ext < expected_max + 3.0:
            warnings.warn("phase-space grid extent is smaller than 3 sigma beyond "
                          "the largest semiclassical amplitude", RuntimeWarning)
    A = re[None, :] + 1j * im[:, None]
    C = coherent_amplitudes(A, n)
    q = np.real(np.sum(C.conj() * (rho_res @ C), axis=0)).reshape(A.shape)
    return PhaseSpaceGrid(re, im, np.clip(q, 0.0, None))


def auto_grid(rho_res: np.ndarray, points: int = 121, margin: float = 4.0):
    """Square grid centred at zero covering the mean field plus the spread."""
    n = rho_res.shape[0]
    nbar = float(np.real(np.sum(np.arange(n) * np.diag(rho_res))))
    r = np.sqrt(max(nbar, 0.0)) + margin + 2.0 * np.sqrt(np.sqrt(max(nbar, 1.0)))
    r = max(r, np.sqrt(n) + margin)
    ax = np.linspace(-r, r, points)
    return ax, ax


def switching_probability(rho_res: np.ndarray, separatrix: Separatrix, points: int = 121,
                          grid: PhaseSpaceGrid | None = None) -> float:
    """Weight of Q on the high side of the separatrix, normalized by the total."""
    if grid is None:
        re, im = auto_grid(rho_res, points)
        grid = q_function(rho_res, re, im)
    side = separatrix.side(grid.alphas())
    w = grid.q * grid.cell / np.pi
    total = w.sum()
    if total <= 0:
        raise ValueError("empty Q distribution")
    high = w[side > 0].sum() + 0.5 * w[side == 0].sum()
    return float(np.clip(high / total, 0.0, 1.0))


def separatrix_between(alpha_L: complex, alpha_H: complex) -> Separatrix:
    d = alpha_H - alpha_L
    if abs(d) < 1e-9:
        raise ValueError("L and H amplitudes coincide; no separatrix")
    return Separatrix(point=0.5 * (alpha_L + alpha_H), normal=d / abs(d))


def default_separatrix(kerr: KerrParameters, Omega: float, eps_hold: float,
                       delta_shift: float = 0.0) -> Separatrix:
    """Perpendicular bisector of the classical L and H amplitudes at the hold point."""
    sols = steady_states(Omega, eps_hold, kerr, delta_shift=delta_shift)
    if len(sols) != 3:
        raise ValueError("hold point is not bistable; latching is impossible")
    return separatrix_between(sols[0].alpha, sols[2].alpha)
