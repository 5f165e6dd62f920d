"""PNG figures for the CLI report path (matplotlib, Agg backend, imported lazily)."""
from __future__ import annotations

import numpy as np

__all__ = ["plot_stability", "plot_scurves", "plot_rabi", "plot_spectroscopy",
           "plot_backaction", "plot_readout"]


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _plt().close(fig)
    return path


def plot_stability(rows, path):
    plt = _plt()
    om = np.array([r["omega_reduced"] for r in rows])
    P = np.array([r["power_dbm"] for r in rows])
    code = np.array([{"mono-L": 0, "bistable": 1, "mono-H": 2}.get(r["region"], 0) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    sc = ax.scatter(om, P, c=code, cmap="viridis", s=8, vmin=0, vmax=2)
    ax.set_xlabel("reduced detuning Omega")
    ax.set_ylabel("pump power (dBm)")
    cb = fig.colorbar(sc, ax=ax, ticks=[0, 1, 2])
    cb.ax.set_yticklabels(["L", "bistable", "H"])
    return _save(fig, path)


def plot_scurves(curves, path, labels=None):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    for i, c in enumerate(curves):
        lab = labels[i] if labels else f"Omega = {c.Omega:.2f}"
        ax.plot(c.power_dbm, c.p_s, "o-", ms=3, label=lab)
    ax.set_xlabel("measurement power (dBm)")
    ax.set_ylabel("switching probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_readout(res, path):
    curves = [res.curves[k] for k in sorted(res.curves)]
    return plot_scurves(curves, path, labels=[f"prep |{k}>" for k in sorted(res.curves)])


def plot_rabi(res, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(res.t * 1e9, res.p, "o", ms=3)
    if res.fit is not None:
        from .fitting import damped_sine
        tt = np.linspace(res.t.min(), res.t.max(), 400)
        f = res.fit.params
        ax.plot(tt * 1e9, damped_sine(tt, f["amplitude"], f["freq"], f["decay"], f["phase"],
                                      f["offset"]), "-")
    ax.set_xlabel("drive duration (ns)")
    ax.set_ylabel("excited probability" if res.readout == "ideal" else "switching probability")
    return _save(fig, path)


def plot_spectroscopy(lines, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    for ln in lines:
        x = ln.omega_s / (2 * np.pi * 1e9)
        y = ln.signal / (np.max(np.abs(ln.signal)) or 1.0)
        ax.plot(x, y, "-", lw=1, label=f"{ln.branch}, n = {ln.n_mean:.1f}")
    ax.set_xlabel("probe frequency (GHz)")
    ax.set_ylabel("normalized absorption")
    if len(lines) <= 8:
        ax.legend(fontsize=7)
    return _save(fig, path)


def plot_backaction(rows, path):
    plt = _plt()
    P = np.array([r["power_dbm"] for r in rows])
    stark = np.array([r["stark"] for r in rows]) / (2 * np.pi * 1e6)
    G2 = np.array([r["Gamma2"] for r in rows]) / (2 * np.pi * 1e6)
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(5, 5), sharex=True)
    a1.plot(P, stark, "o-", ms=3)
    a1.set_ylabel("ac-Stark shift (MHz)")
    a2.plot(P, G2, "o-", ms=3)
    a2.set_ylabel("Gamma_2 / 2pi (MHz)")
    a2.set_xlabel("pump power (dBm)")
    return _save(fig, path)
