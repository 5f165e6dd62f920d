"""Piecewise-linear readout envelope: ramp, measure plateau, fall, hold."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .semiclassical import DEFAULT_ATTENUATION_DB, epsilon_from_dbm

__all__ = ["PulseProfile"]


@dataclass(frozen=True)
class PulseProfile:
    """Drive amplitude envelope eps_p(t) in rad/s.

    The amplitude rises linearly from zero to ``eps_measure`` in ``t_rise``,
    stays there for ``t_measure``, moves linearly to ``eps_hold`` in
    ``t_fall`` and stays at ``eps_hold`` for ``t_hold``.  A non-zero fall time
    keeps the envelope continuous; it defaults to a tenth of the rise time.
    """

    t_rise: float
    t_measure: float
    t_hold: float
    eps_measure: float
    eps_hold: float
    t_fall: float | None = None

    def __post_init__(self):
        if self.t_fall is None:
            object.__setattr__(self, "t_fall", 0.1 * self.t_rise)
        for name in ("t_rise", "t_measure", "t_hold", "t_fall"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.t_rise <= 0 or self.t_fall <= 0:
            raise ValueError("t_rise and t_fall must be positive for a continuous envelope")

    @classmethod
    def from_dbm(cls, t_rise, t_measure, t_hold, p_measure_dbm, p_hold_dbm, omega_p, kappa,
                 attenuation_db=DEFAULT_ATTENUATION_DB, t_fall=None) -> "PulseProfile":
        em = float(epsilon_from_dbm(p_measure_dbm, omega_p, kappa, attenuation_db))
        eh = float(epsilon_from_dbm(p_hold_dbm, omega_p, kappa, attenuation_db))
        return cls(t_rise, t_measure, t_hold, em, eh, t_fall)

    def with_measure(self, eps_measure: float) -> "PulseProfile":
        return PulseProfile(self.t_rise, self.t_measure, self.t_hold, eps_measure,
                            self.eps_hold, self.t_fall)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.cumsum([0.0, self.t_rise, self.t_measure, self.t_fall, self.t_hold])

    @property
    def hold_start(self) -> float:
        return float(self.breakpoints[3])

    @property
    def duration(self) -> float:
        return float(self.breakpoints[4])

    def __call__(self, t):
        b = self.breakpoints
        x = [b[0], b[1], b[2], b[3], b[4]]
        y = [0.0, self.eps_measure, self.eps_measure, self.eps_hold, self.eps_hold]
        return np.interp(t, x, y) if np.ndim(t) else float(np.interp(t, x, y))

    @property
    def max_amplitude(self) -> float:
        return max(abs(self.eps_measure), abs(self.eps_hold))
