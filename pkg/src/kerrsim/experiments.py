"""Protocols built on the master-equation engine.

S-curves and their temperature dependence, JBA qubit readout, cavity pull,
Rabi oscillations and pumped qubit spectroscopy.  Every sweep point is an
independent job; ``workers > 1`` fans them out to a process pool and the
results are reassembled in input order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import backaction as ba
from .fitting import FitError, FitResult, damped_sine_fit, erf_fit, lorentzian_fit
from .husimi import Separatrix, default_separatrix, switching_probability
from .lindblad import (DensityMatrix, Liouvillian, add_drive, add_qubit_drive, change_frame,
                       coherent_state, embed_fock, evolve, partial_trace_resonator,
                       product_state, qubit_operator, qubit_population, suggest_n_fock,
                       thermal_state)
from .pulse import PulseProfile
from .semiclassical import (bifurcation_thresholds, dbm_from_epsilon, select_branch,
                            steady_states)
from .system import System

__all__ = [
    "SCurve",
    "ReadoutResult",
    "CavityPullResult",
    "RabiResult",
    "SpectroscopyLine",
    "pump_for",
    "default_pulse",
    "separatrix_for",
    "auto_n_fock",
    "run_scurve",
    "scurve_width_vs_temperature",
    "readout_contrast",
    "cavity_pull_from_scurves",
    "cavity_pull_experiment",
    "rabi_experiment",
    "pumped_spectroscopy",
    "spectroscopy_branches",
    "backaction_sweep",
]

DEFAULT_SAFETY = 1.0


# --- helpers --------------------------------------------------------------

def pump_for(system: System, Omega: float) -> float:
    """Pump frequency at reduced detuning Omega from the |0>-dressed resonator."""
    return system.resonator_frequency(0) - Omega * system.kerr.kappa / 2


def _omega_level(system: System, omega_p: float, level: int) -> float:
    return 2 * (system.resonator_frequency(level) - omega_p) / system.kerr.kappa


def default_pulse(system: System, Omega: float, hold_fraction: float = 0.25,
                  t_rise: float = 2.0, t_measure: float = 6.0, t_fall: float = 3.0,
                  t_hold: float = 7.0, level: int = 0) -> PulseProfile:
    """Desk readout envelope; times in units of 1/kappa.

    The hold amplitude sits at ``hold_fraction`` of the bistable window in
    eps^2 for the given qubit level.
    """
    kappa = system.kerr.kappa
    kerr = system.kerr_for_level(level)
    th = bifurcation_thresholds(Omega if level == 0 else
                                _omega_level(system, pump_for(system, Omega), level), kerr)
    if th is None:
        raise ValueError("no bistable window at this detuning")
    e2 = th.eps_minus**2 + hold_fraction * (th.eps_plus**2 - th.eps_minus**2)
    eh = math.sqrt(e2)
    return PulseProfile(t_rise / kappa, t_measure / kappa, t_hold / kappa, eh, eh, t_fall / kappa)


def separatrix_for(system: System, omega_p: float, eps_hold: float, level: int = 0) -> Separatrix:
    """Bisector at the hold point for ``level``; falls back to level 0 when not bistable."""
    for lev in (level, 0):
        try:
            return default_separatrix(system.kerr_for_level(lev), _omega_level(system, omega_p, lev),
                                      eps_hold)
        except ValueError:
            continue
    raise ValueError("hold point is not bistable; latching is impossible")


def auto_n_fock(system: System, omega_p: float, eps_max: float, levels=(0,)) -> int:
    """Truncation from the largest stable semiclassical photon number."""
    n_max = 0.0
    for lev in levels:
        kerr = system.kerr_for_level(lev)
        sols = steady_states(_omega_level(system, omega_p, lev), eps_max, kerr)
        n_max = max(n_max, max(s.n for s in sols if s.stable))
    n_max += 3 * system.kerr.n_th
    return max(10, suggest_n_fock(n_max))


def _pool_map(fn, jobs, workers):
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(fn, *j) for j in jobs]
        return [f.result() for f in futs]


# --- S-curves -------------------------------------------------------------

@dataclass
class SCurve:
    eps: np.ndarray
    p_s: np.ndarray            # end of hold
    p_s_start: np.ndarray      # start of hold
    power_dbm: np.ndarray
    Omega: float
    omega_p: float
    pulse: PulseProfile
    prep: int | None
    T: float
    n_fock: int
    system_name: str = ""
    min_eigenvalue: float = 0.0

    def erf(self) -> FitResult:
        return erf_fit(self.power_dbm, self.p_s)

    @property
    def width_db(self) -> float:
        return float(self.erf()["width"])

    @property
    def monotonicity_violation(self) -> float:
        """Largest drop of p_s between any lower and higher drive point."""
        p = self.p_s[np.argsort(self.eps)]
        return float(max(0.0, np.max(np.maximum.accumulate(p) - p)))

    @property
    def hold_drift(self) -> np.ndarray:
        return np.abs(self.p_s - self.p_s_start)

    def rows(self):
        for e, P, a, b in zip(self.eps, self.power_dbm, self.p_s_start, self.p_s):
            yield dict(eps=float(e), power_dbm=float(P), p_s_hold_start=float(a), p_s=float(b))


def _scurve_job(system: System, pulse: PulseProfile, omega_p: float, prep, n_fock: int,
                safety: float, sep: Separatrix, rho0: DensityMatrix | None = None):
    h = system.hilbert(frame=omega_p, n_fock=n_fock)
    H = add_drive(system.hamiltonian(h), omega_p, pulse, max_amplitude=pulse.max_amplitude)
    if rho0 is None:
        rho0 = thermal_state(system.kerr.n_th, h, qubit_level=prep or 0)
    snaps = evolve(rho0, H, system.collapse(h), [0.0, pulse.hold_start, pulse.duration],
                   safety=safety)
    ps = [switching_probability(partial_trace_resonator(s), sep) for s in snaps[1:]]
    lam = min(s.min_eigenvalue() for s in snaps)
    return ps[0], ps[1], lam


def run_scurve(system: System, pulse: PulseProfile, Omega: float, eps_list, prep: int | None = None,
               *, omega_p: float | None = None, n_fock: int | None = None,
               safety: float = DEFAULT_SAFETY, workers: int = 1,
               separatrix: Separatrix | None = None) -> SCurve:
    """p_s(eps_m) for one preparation; ``pulse.eps_measure`` is replaced per point.

    ``Omega`` is taken from the |0>-dressed resonator unless ``omega_p`` is given.
    The L/H split defaults to the bisector of the prepared level at the hold.
    """
    eps_list = np.asarray(eps_list, float)
    wp = pump_for(system, Omega) if omega_p is None else float(omega_p)
    if prep is not None and prep >= system.m_levels:
        raise ValueError("preparation level outside the qubit space")
    levels = tuple(range(system.m_levels)) if system.m_levels > 1 else (0,)
    nf = n_fock or system.n_fock or auto_n_fock(system, wp, max(eps_list.max(), pulse.eps_hold),
                                                levels)
    sep = separatrix or separatrix_for(system, wp, pulse.eps_hold, prep or 0)
    jobs = [(system, pulse.with_measure(float(e)), wp, prep, nf, safety, sep) for e in eps_list]
    res = _pool_map(_scurve_job, jobs, workers)
    p0 = np.array([r[0] for r in res])
    p1 = np.array([r[1] for r in res])
    P = dbm_from_epsilon(eps_list, wp, system.kerr.kappa, system.attenuation_db)
    return SCurve(eps_list, p1, p0, np.asarray(P), _omega_level(system, wp, 0), wp, pulse, prep,
                  system.kerr.T, nf, system.name, float(min(r[2] for r in res)))


def scurve_width_vs_temperature(system: System, pulse: PulseProfile, Omega: float, eps_list,
                                temperatures, **kw) -> list[tuple[float, float, SCurve]]:
    """(T, erf width in dB, curve) per temperature; thermal state and thermal bath."""
    out = []
    for T in temperatures:
        c = run_scurve(system.with_temperature(T), pulse, Omega, eps_list, **kw)
        out.append((float(T), c.width_db, c))
    return out


# --- readout --------------------------------------------------------------

@dataclass
class ReadoutResult:
    contrast: float
    best_eps: float
    best_power_dbm: float
    curves: dict
    contrast_curve: np.ndarray


def readout_contrast(system: System, pulse: PulseProfile, Omega: float, eps_list,
                     shelving: bool = False, reference: SCurve | None = None,
                     **kw) -> ReadoutResult:
    """Best p_s(excited) - p_s(|0>) over the sweep; shelving prepares |2>.

    Both preparations are classified with the |0> bisector at the hold.
    """
    excited = 2 if shelving else 1
    if system.m_levels <= excited:
        raise ValueError("not enough qubit levels for this preparation")
    wp = pump_for(system, Omega) if kw.get("omega_p") is None else kw["omega_p"]
    kw.setdefault("separatrix", separatrix_for(system, wp, pulse.eps_hold, 0))
    c0 = reference if reference is not None else run_scurve(system, pulse, Omega, eps_list, 0, **kw)
    ce = run_scurve(system, pulse, Omega, eps_list, excited, **kw)
    if not np.allclose(c0.eps, ce.eps):
        raise ValueError("reference curve uses a different drive grid")
    diff = ce.p_s - c0.p_s
    i = int(np.argmax(diff))
    return ReadoutResult(float(diff[i]), float(ce.eps[i]), float(ce.power_dbm[i]),
                         {0: c0, excited: ce}, diff)


# --- cavity pull ----------------------------------------------------------

@dataclass
class CavityPullResult:
    delta_omega: float
    offsets: np.ndarray
    distances: np.ndarray
    two_chi: float = float("nan")

    @property
    def relative_error(self) -> float:
        return abs(self.delta_omega - self.two_chi) / abs(self.two_chi)


def _l2(a: SCurve, b: SCurve) -> float:
    if a.eps.shape == b.eps.shape and np.allclose(a.eps, b.eps):
        return float(np.sqrt(np.mean((a.p_s - b.p_s) ** 2)))
    lo, hi = max(a.eps.min(), b.eps.min()), min(a.eps.max(), b.eps.max())
    if hi <= lo:
        raise ValueError("S-curves do not overlap in drive")
    x = np.linspace(lo, hi, 101)
    return float(np.sqrt(np.mean((np.interp(x, a.eps, a.p_s) - np.interp(x, b.eps, b.p_s)) ** 2)))


def cavity_pull_from_scurves(shifted, target: SCurve) -> CavityPullResult:
    """delta_omega minimizing the L2 distance between |0> at omega_m - delta_omega and |1> at omega_m.

    ``shifted`` maps offsets (rad/s) to |0> S-curves.  The minimum is refined by
    a parabola through the best sample and its neighbours.
    """
    items = sorted(shifted.items() if isinstance(shifted, dict) else shifted, key=lambda kv: kv[0])
    offs = np.array([k for k, _ in items], float)
    dist = np.array([_l2(c, target) for _, c in items])
    i = int(np.argmin(dist))
    if dist[i] == 0.0:
        return CavityPullResult(float(offs[i]), offs, dist)
    if i == 0 or i == len(offs) - 1:
        raise ValueError("no minimum inside the offset sweep")
    x, y = offs[i - 1:i + 2], dist[i - 1:i + 2]**2
    c2, c1, _ = np.polyfit(x, y, 2)
    best = -c1 / (2 * c2) if c2 > 0 else offs[i]
    return CavityPullResult(float(np.clip(best, x[0], x[-1])), offs, dist)


def cavity_pull_experiment(system: System, pulse: PulseProfile, Omega: float, eps_list,
                           offsets, **kw) -> tuple[CavityPullResult, SCurve, dict]:
    """Runs |1> at omega_m and |0> at omega_m - delta for each offset."""
    wm = pump_for(system, Omega)
    nf = kw.pop("n_fock", None) or auto_n_fock(
        system, wm - max(np.abs(offsets)), max(np.max(eps_list), pulse.eps_hold), (0, 1))
    c1 = run_scurve(system, pulse, Omega, eps_list, 1, omega_p=wm, n_fock=nf, **kw)
    shifted = {float(d): run_scurve(system, pulse, Omega, eps_list, 0, omega_p=wm - d,
                                    n_fock=nf, **kw) for d in offsets}
    res = cavity_pull_from_scurves(shifted, c1)
    chi = ba.dispersive_chi(system.spectrum, system.g, system.kerr.omega_r)[0]
    res.two_chi = 2 * chi
    return res, c1, shifted


# --- Rabi -----------------------------------------------------------------

@dataclass
class RabiResult:
    t: np.ndarray
    p: np.ndarray
    fit: FitResult | None
    readout: str
    fit_error: str = ""


def rabi_experiment(system: System, eps_s: float, durations, readout: str = "ideal",
                    pulse: PulseProfile | None = None, Omega: float | None = None,
                    omega_s: float | None = None, n_fock_drive: int = 6,
                    safety: float = DEFAULT_SAFETY, workers: int = 1) -> RabiResult:
    """Resonant qubit drive of variable length, then ideal or JBA readout.

    The drive sits at the dressed qubit frequency with the resonator in
    vacuum; ``ideal`` reports 1 - P(|0>), ``jba`` the switching probability.
    """
    if system.m_levels < 2:
        raise ValueError("Rabi needs a qubit")
    t = np.asarray(sorted(durations), float)
    ws = system.qubit_frequency() if omega_s is None else omega_s
    h = system.hilbert(frame=ws, n_fock=n_fock_drive)
    H = add_qubit_drive(system.hamiltonian(h), ws, complex(eps_s),
                        system.spectrum.n_matrix, max_amplitude=abs(eps_s))
    rho0 = thermal_state(0.0, h, 0)
    grid = np.concatenate([[0.0], t[t > 0]])
    snaps = evolve(rho0, H, system.collapse(h), grid, safety=safety)
    states = [snaps[0]] * int(np.sum(t <= 0)) + snaps[1:]
    if readout == "ideal":
        p = np.array([1.0 - qubit_population(s, 0) for s in states])
    elif readout == "jba":
        if pulse is None or Omega is None:
            raise ValueError("JBA readout needs a pulse and Omega")
        wp = pump_for(system, Omega)
        nf = system.n_fock or auto_n_fock(system, wp, max(pulse.eps_measure, pulse.eps_hold),
                                          tuple(range(system.m_levels)))
        sep = separatrix_for(system, wp, pulse.eps_hold, 0)
        jobs = [(system, pulse, wp, None, nf, safety, sep,
                 change_frame(embed_fock(s, nf), wp, tt)) for s, tt in zip(states, t)]
        p = np.array([r[1] for r in _pool_map(_scurve_job, jobs, workers)])
    else:
        raise ValueError("readout must be 'ideal' or 'jba'")
    fit, err = None, ""
    if eps_s != 0:
        try:
            fit = damped_sine_fit(t, p)
        except FitError as exc:
            err = str(exc)
    return RabiResult(t, p, fit, readout, err)


# --- spectroscopy ---------------------------------------------------------

@dataclass
class SpectroscopyLine:
    omega_s: np.ndarray
    signal: np.ndarray
    fit: FitResult | None
    mode: str
    branch: str
    n_mean: float
    meta: dict = field(default_factory=dict)

    @property
    def center(self) -> float:
        return float(self.fit["center"])

    @property
    def fwhm_hz(self) -> float:
        """Full width at half maximum in Hz (ordinary frequency)."""
        return float(self.fit["fwhm"]) / (2 * np.pi)

    @property
    def Gamma2(self) -> float:
        """pi * w with w the FWHM in Hz; rad/s."""
        return np.pi * self.fwhm_hz

    @property
    def accepted(self) -> bool:
        return self.fit is not None and self.fit.rms < 0.1 * abs(self.fit["amplitude"])


def _pumped_state(system: System, h, omega_p: float, eps_p: float, branch: str):
    """Initial coherent state on the requested classical branch with the qubit in |0>."""
    if eps_p == 0:
        return thermal_state(system.kerr.n_th, h, 0), "L"
    kerr = system.kerr_for_level(0)
    sols = steady_states(_omega_level(system, omega_p, 0), eps_p, kerr)
    s = select_branch(sols, branch)
    return product_state(coherent_state(s.alpha, h.n_fock), 0, h), s.branch


def _spectro_n_fock(system: System, omega_p: float, eps_p: float) -> int:
    if eps_p == 0:
        return system.n_fock or 6
    return system.n_fock or auto_n_fock(system, omega_p, eps_p, (0,))


def pumped_spectroscopy(system: System, Omega: float, eps_p: float, *, branch: str = "L",
                        mode: str = "linear_response", omega_s=None, eps_s: float | None = None,
                        t_eq: float | None = None, t_window: float | None = None,
                        tol: float = 1e-3, t_max: float = 20e-6, sample_dt: float | None = None,
                        points: int = 81, safety: float = DEFAULT_SAFETY) -> SpectroscopyLine:
    """Qubit line under a resonator pump of amplitude eps_p at reduced detuning Omega.

    ``linear_response`` (default) propagates sigma_+ rho_ss and Fourier
    transforms <sigma_-(t) sigma_+(0)>; the signal is the weak-probe
    absorption spectrum.  ``sweep`` drives the qubit at each omega_s for
    ``t_window`` and records the excited population (slow; exact at finite
    eps_s).  ``sample_dt`` defaults to a spacing that resolves the line's
    rotation in the pump frame.  The pump runs for ``t_eq`` (default 10/kappa) before probing.
    """
    kappa = system.kerr.kappa
    wp = pump_for(system, Omega)
    t_eq = 10.0 / kappa if t_eq is None else t_eq
    nf = _spectro_n_fock(system, wp, eps_p)
    if mode == "linear_response":
        return _linear_response(system, wp, eps_p, branch, nf, t_eq, tol, t_max, sample_dt,
                                omega_s, points, safety, Omega)
    if mode == "sweep":
        if omega_s is None or eps_s is None:
            raise ValueError("sweep mode needs omega_s and eps_s")
        return _sweep(system, wp, eps_p, branch, nf, t_eq, np.asarray(omega_s, float), eps_s,
                      t_window, safety, Omega)
    raise ValueError("mode must be 'linear_response' or 'sweep'")


def _equilibrate(system, h, wp, eps_p, branch, t_eq, safety):
    H = add_drive(system.hamiltonian(h), wp, complex(eps_p), max_amplitude=abs(eps_p))
    L = Liouvillian(H, system.collapse(h))
    rho0, lab = _pumped_state(system, h, wp, eps_p, branch)
    if eps_p != 0 and t_eq > 0:
        rho = evolve(rho0, None, None, [0.0, t_eq], safety=safety, liouvillian=L, store=False)[-1]
    else:
        rho = rho0
    return L, rho, lab


def _linear_response(system, wp, eps_p, branch, nf, t_eq, tol, t_max, sample_dt, omega_s,
                     points, safety, Omega):
    frame = wp if eps_p != 0 else system.qubit_frequency()
    h = system.hilbert(frame=frame, n_fock=nf)
    L, rho, lab = _equilibrate(system, h, wp, eps_p, branch, t_eq, safety)
    M = h.m_levels
    n_mean = float(np.real(np.sum(np.repeat(np.arange(nf), M) * np.diag(rho.data))))
    X = qubit_operator(h, 1, 0) @ rho.data
    # connected part: drops the elastic <sigma_+><sigma_-> term at the pump
    X = X - np.trace(X) * rho.data
    idx1 = np.arange(nf) * M + 1
    idx0 = np.arange(nf) * M
    if sample_dt is None:
        # about 8 samples per period of the bare line in this frame
        rot = abs(system.qubit_frequency() - frame) + system.kerr.kappa
        sample_dt = min(1e-9, 2 * np.pi / (8 * rot))
    ts, cs = [], []

    def obs(t, Y):
        ts.append(t)
        cs.append(complex(np.sum(Y[idx1, idx0])))

    chunk = 500 * sample_dt
    t0 = 0.0
    c0 = None
    while True:
        grid = t0 + sample_dt * np.arange(int(round(chunk / sample_dt)) + 1)
        if ts:
            ts.pop(), cs.pop()  # chunk start duplicates the previous end
        X = evolve(X, None, None, grid, safety=safety, hermitian=False, liouvillian=L,
                   observer=obs, store=False)[-1]
        t0 = grid[-1]
        c0 = abs(cs[0]) if c0 is None else c0
        if abs(cs[-1]) < tol * c0 or t0 >= t_max:
            break
    t = np.array(ts)
    C = np.array(cs)
    # demodulate at the mean phase velocity to keep the integrand slow
    ph = np.unwrap(np.angle(C))
    wts = np.abs(C)
    nu = -np.polyfit(t, ph, 1, w=wts)[0]          # C ~ exp(-i nu t), nu = omega_line - frame
    Cd = C * np.exp(1j * nu * t)
    decay = max(-np.polyfit(t[wts > 0.05 * c0], np.log(wts[wts > 0.05 * c0]), 1)[0], 1e3)
    if omega_s is None:
        omega_s = frame + nu + np.linspace(-8 * decay, 8 * decay, points)
    omega_s = np.asarray(omega_s, float)
    w = np.full(t.size, sample_dt)
    w[0] = w[-1] = 0.5 * sample_dt
    S = np.real(np.exp(1j * np.outer(omega_s - frame - nu, t)) @ (Cd * w))
    S = S / abs(cs[0]) * decay  # peak close to 1
    fit = _try_fit(omega_s, S)
    return SpectroscopyLine(omega_s, S, fit, "linear_response", lab, n_mean,
                            dict(Omega=Omega, eps_p=eps_p, omega_p=wp, n_fock=nf,
                                 t_corr=float(t[-1]), frame=frame))


def _sweep(system, wp, eps_p, branch, nf, t_eq, omega_s, eps_s, t_window, safety, Omega):
    d = system.dissipation
    gamma1 = d.gamma if d is not None else 0.0
    if t_window is None:
        t_window = 10.0 / max(gamma1, 1e-3 * system.kerr.kappa)
    sig = []
    lab = branch
    n_mean = 0.0
    for ws in omega_s:
        frame = ws if eps_p == 0 else wp
        h = system.hilbert(frame=frame, n_fock=nf)
        _, rho, lab = _equilibrate(system, h, wp, eps_p, branch, t_eq, safety)
        n_mean = float(np.real(np.sum(np.repeat(np.arange(nf), h.m_levels) * np.diag(rho.data))))
        H = add_drive(system.hamiltonian(h), wp, complex(eps_p), max_amplitude=abs(eps_p)) \
            if eps_p != 0 else system.hamiltonian(h)
        H = add_qubit_drive(H, ws, complex(eps_s), system.spectrum.n_matrix,
                            max_amplitude=abs(eps_s))
        r = evolve(rho, H, system.collapse(h), [0.0, t_window], safety=safety, store=False)[-1]
        sig.append(1.0 - qubit_population(r, 0))
    sig = np.array(sig)
    return SpectroscopyLine(omega_s, sig, _try_fit(omega_s, sig), "sweep", lab, n_mean,
                            dict(Omega=Omega, eps_p=eps_p, omega_p=wp, n_fock=nf, eps_s=eps_s,
                                 t_window=t_window))


def _try_fit(x, y):
    try:
        return lorentzian_fit(x, y)
    except FitError:
        return None


def spectroscopy_branches(system: System, Omega: float, eps_p: float, **kw) -> list[SpectroscopyLine]:
    """One line per stable classical branch (two inside the bistable window)."""
    wp = pump_for(system, Omega)
    sols = steady_states(_omega_level(system, wp, 0), eps_p, system.kerr_for_level(0))
    labels = [s.branch for s in sols if s.stable]
    return [pumped_spectroscopy(system, Omega, eps_p, branch=b, **kw) for b in labels]


# --- analytic backaction sweep -------------------------------------------

def backaction_sweep(system: System, Omega: float, eps_list, branch=None) -> list[dict]:
    """Analytic pointer states, Stark shift and rates along a pump sweep."""
    wp = pump_for(system, Omega)
    const = ba.dispersive_constants(system.spectrum, system.g, wp, omega_r=system.kerr.omega_r)
    rows = []
    for e in eps_list:
        r = ba.backaction_point(const, system.kerr, float(e), system.dissipation, branch=branch)
        r["eps"] = float(e)
        r["power_dbm"] = float(dbm_from_epsilon(e, wp, system.kerr.kappa, system.attenuation_db))
        rows.append(r)
    return rows
