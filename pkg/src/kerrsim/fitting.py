"""Least-squares line-shape fits: Lorentzian, erf step, damped sine."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

__all__ = ["FitResult", "FitError", "lorentzian", "erf_step", "damped_sine",
           "lorentzian_fit", "erf_fit", "damped_sine_fit"]


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitResult:
    params: dict
    rms: float
    nfev: int

    def __getitem__(self, key):
        return self.params[key]


def lorentzian(x, center, fwhm, amplitude, offset):
    hw = 0.5 * fwhm
    return offset + amplitude * hw**2 / ((x - center) ** 2 + hw**2)


def erf_step(x, center, width, floor, ceiling):
    """floor + (ceiling - floor) * Phi((x - center)/width), Phi the normal CDF."""
    return floor + (ceiling - floor) * 0.5 * (1 + erf((x - center) / (np.sqrt(2) * width)))


def damped_sine(t, amplitude, freq, decay, phase, offset):
    """amplitude * exp(-t/decay) * sin(freq t + phase) + offset (freq angular)."""
    return amplitude * np.exp(-t / decay) * np.sin(freq * t + phase) + offset


def _prepare(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 8:
        raise FitError("need at least 8 points")
    o = np.argsort(x)
    return x[o], y[o]


def _run(model, x, y, p0, scale, max_nfev=2000):
    xs = (x - scale[0]) / scale[1]
    ys = y

    def resid(p):
        return model(xs, *p) - ys

    def jac(p):
        # MINPACK steps scale with |p| and stall on tiny nonzero starts; use a floor
        J = np.empty((xs.size, len(p)))
        for j in range(len(p)):
            h = 1e-7 * max(1.0, abs(p[j]))
            dp = np.zeros(len(p))
            dp[j] = h
            J[:, j] = (model(xs, *(p + dp)) - model(xs, *(p - dp))) / (2 * h)
        return J

    res = least_squares(resid, np.asarray(p0, float), jac=jac, method="lm", xtol=1e-15,
                        ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(f"fit did not converge: {res.message}")
    rms = float(np.sqrt(np.mean(res.fun**2)))
    return res.x, rms, res.nfev


def lorentzian_fit(x, y) -> FitResult:
    """Peak (or dip) Lorentzian; returns center, fwhm, amplitude, offset."""
    x, y = _prepare(x, y)
    loc, span = x.mean(), np.ptp(x) or 1.0
    off0 = float(np.median(np.concatenate([y[:2], y[-2:]])))
    dev = y - off0
    i = int(np.argmax(np.abs(dev)))
    amp0 = float(dev[i])
    half = np.abs(dev) >= 0.5 * abs(amp0)
    fw0 = max(float(np.ptp(x[half])), 2 * np.min(np.diff(x)))
    p0 = [(x[i] - loc) / span, fw0 / span, amp0, off0]
    p, rms, nfev = _run(lorentzian, x, y, p0, (loc, span))
    c, fw, a, o = p
    return FitResult(dict(center=c * span + loc, fwhm=abs(fw) * span, amplitude=a, offset=o),
                     rms, nfev)


def erf_fit(x, y) -> FitResult:
    """Rising error-function step; returns center, width (std), floor, ceiling."""
    x, y = _prepare(x, y)
    loc, span = x.mean(), np.ptp(x) or 1.0
    lo, hi = float(y.min()), float(y.max())
    mid = 0.5 * (lo + hi)
    c0 = float(np.interp(mid, np.maximum.accumulate(y) + 1e-12 * np.arange(y.size), x))
    q1 = float(np.interp(lo + 0.16 * (hi - lo), np.maximum.accumulate(y) + 1e-12 * np.arange(y.size), x))
    q3 = float(np.interp(lo + 0.84 * (hi - lo), np.maximum.accumulate(y) + 1e-12 * np.arange(y.size), x))
    w0 = max(0.5 * (q3 - q1), np.min(np.diff(x)) / 4)
    p0 = [(c0 - loc) / span, w0 / span, lo, hi]
    p, rms, nfev = _run(erf_step, x, y, p0, (loc, span))
    c, w, f, ce = p
    return FitResult(dict(center=c * span + loc, width=abs(w) * span, floor=f, ceiling=ce), rms, nfev)


def damped_sine_fit(t, y) -> FitResult:
    """Exponentially damped sine; frequency seeded from the FFT peak."""
    t, y = _prepare(t, y)
    span = np.ptp(t) or 1.0
    off0 = float(np.mean(y))
    yy = y - off0
    # uniform resampling for the FFT seed
    tu = np.linspace(t[0], t[-1], max(64, 4 * t.size))
    yu = np.interp(tu, t, yy)
    spec = np.abs(np.fft.rfft(yu * np.hanning(tu.size), n=8 * tu.size))
    freqs = np.fft.rfftfreq(8 * tu.size, d=tu[1] - tu[0]) * 2 * np.pi
    k = int(np.argmax(spec[1:])) + 1
    w0 = freqs[k] * span
    amp0 = float(np.sqrt(2) * np.std(yy)) or 1e-3
    best = None
    for ph in np.linspace(-np.pi, np.pi, 8, endpoint=False):
        try:
            p, rms, nfev = _run(damped_sine, t, y, [amp0, w0, 1.0, ph, off0], (t[0], span))
        except FitError:
            continue
        if best is None or rms < best[1] - 1e-15:
            best = (p, rms, nfev)
    if best is None:
        raise FitError("damped sine fit failed")
    (a, w, tau, ph, o), rms, nfev = best
    if w < 0:
        w, ph = -w, np.pi - ph
    if a < 0:
        a, ph = -a, ph + np.pi
    # back to the original time origin
    freq, decay = w / span, tau * span
    a = a * np.exp(t[0] / decay)
    ph = float(np.angle(np.exp(1j * (ph - freq * t[0]))))
    return FitResult(dict(amplitude=a, freq=freq, decay=decay, phase=ph, offset=o), rms, nfev)
