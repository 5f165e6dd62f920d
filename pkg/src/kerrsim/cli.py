"""Command line entry point: ``kerrsim <subcommand> --config run.ini --out DIR``.

Each subcommand writes one CSV per sweep into ``--out``; every CSV opens
with ``#`` lines echoing the engine version, the seed and the full config.
``--plot`` also renders PNG figures next to the CSVs.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import ConfigError, load_config, serialize_config

SUBCOMMANDS = ("circuit-params", "stability-diagram", "scurve", "readout", "spectroscopy",
               "rabi", "backaction")

TWO_PI = 2 * np.pi


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Writer:
    """CSV emitter with the config-echo header."""

    def __init__(self, out: str, cfg, seed: int):
        self.out = out
        self.header = [f"# kerrsim {__version__}", f"# seed = {seed}"]
        self.header += ["# " + ln if ln else "#" for ln in serialize_config(cfg).splitlines()]
        self.written: list[str] = []
        os.makedirs(out, exist_ok=True)

    def write(self, name: str, columns, rows) -> str:
        buf = io.StringIO()
        buf.write("\n".join(self.header) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
        path = os.path.join(self.out, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        self.written.append(path)
        return path

    def png(self, name: str) -> str:
        return os.path.join(self.out, name)


def _numerics(cfg):
    from .experiments import DEFAULT_SAFETY
    return dict(safety=cfg.get("numerics", "safety", DEFAULT_SAFETY))


def _omega_tag(Om: float) -> str:
    return f"{Om:.3f}".replace("-", "m").replace(".", "p")


# --- subcommands ----------------------------------------------------------

def cmd_circuit_params(cfg, args, out: Writer):
    from .backaction import dispersive_chi
    from .config import build_system
    s = build_system(cfg)
    k = s.kerr
    rows = [
        ("omega_r_ghz", k.omega_r / TWO_PI / 1e9),
        ("kappa_mhz", k.kappa / TWO_PI / 1e6),
        ("Q", k.Q),
        ("K_khz", k.K / TWO_PI / 1e3),
        ("Kp_hz", k.Kp / TWO_PI),
        ("p", k.p),
        ("n_th", k.n_th),
    ]
    if s.spectrum is not None:
        chi, s_bar, n_crit, _, _ = dispersive_chi(s.spectrum, s.g, k.omega_r)
        rows += [
            ("f01_ghz", s.spectrum.omega01 / TWO_PI / 1e9),
            ("anharmonicity_mhz", s.spectrum.anharmonicity / TWO_PI / 1e6),
            ("g01_mhz", s.g[0] / TWO_PI / 1e6),
            ("two_chi_mhz", 2 * chi / TWO_PI / 1e6),
            ("two_chi_exact_mhz", s.cavity_pull() / TWO_PI / 1e6),
            ("n_crit", n_crit),
        ]
    for name, v in rows:
        print(f"{name:>20s}  {v:.6g}")
    out.write("circuit_params.csv", ["quantity", "value"],
              [dict(quantity=n, value=float(v)) for n, v in rows])


def cmd_stability(cfg, args, out: Writer):
    from .config import build_system, omegas
    from .semiclassical import stability_diagram
    s = build_system(cfg)
    cfg.require("sweep", "p_start", "p_stop", "points")
    sw = cfg.sections["sweep"]
    P = np.linspace(sw["p_start"], sw["p_stop"], sw["points"])
    rows = stability_diagram(s.kerr, omegas(cfg), P, s.attenuation_db)
    out.write("stability_diagram.csv",
              ["omega_reduced", "power_dbm", "n_roots", "n_low", "n_high", "region"], rows)
    if args.plot:
        from .plotting import plot_stability
        plot_stability(rows, out.png("stability_diagram.png"))


SCURVE_COLS = ["eps", "power_dbm", "p_s_hold_start", "p_s"]


def cmd_scurve(cfg, args, out: Writer):
    from .config import build_pulse, build_system, omegas, sweep_eps
    from .experiments import run_scurve, scurve_width_vs_temperature
    s = build_system(cfg)
    prep = cfg.get("experiment", "prep")
    temps = cfg.get("sweep", "temperatures")
    curves = []
    for Om in omegas(cfg):
        pulse = build_pulse(cfg, s, Om)
        eps = sweep_eps(cfg, s, Om)
        if temps is not None:
            temps = temps if isinstance(temps, tuple) else (temps,)
            res = scurve_width_vs_temperature(s, pulse, Om, eps, temps, prep=prep,
                                              workers=args.workers, **_numerics(cfg))
            wrows = []
            for T, width, c in res:
                out.write(f"scurve_omega_{_omega_tag(Om)}_T_{T * 1e3:.0f}mK.csv",
                          SCURVE_COLS, c.rows())
                wrows.append(dict(T_mk=T * 1e3, width_db=width))
                curves.append(c)
            out.write(f"scurve_width_omega_{_omega_tag(Om)}.csv", ["T_mk", "width_db"], wrows)
        else:
            c = run_scurve(s, pulse, Om, eps, prep, workers=args.workers, **_numerics(cfg))
            out.write(f"scurve_omega_{_omega_tag(Om)}.csv", SCURVE_COLS, c.rows())
            curves.append(c)
    if args.plot:
        from .plotting import plot_scurves
        plot_scurves(curves, out.png("scurves.png"))


def cmd_readout(cfg, args, out: Writer):
    from .config import build_pulse, build_system, omegas, sweep_eps
    from .experiments import readout_contrast
    s = build_system(cfg)
    shelving = cfg.get("experiment", "shelving", False)
    summary = []
    for Om in omegas(cfg):
        pulse = build_pulse(cfg, s, Om)
        eps = sweep_eps(cfg, s, Om)
        res = readout_contrast(s, pulse, Om, eps, shelving=shelving, workers=args.workers,
                               **_numerics(cfg))
        k = 2 if shelving else 1
        c0, ce = res.curves[0], res.curves[k]
        rows = [dict(eps=e, power_dbm=P, p_s_0=a, p_s_excited=b, contrast=b - a)
                for e, P, a, b in zip(c0.eps, c0.power_dbm, c0.p_s, ce.p_s)]
        out.write(f"readout_omega_{_omega_tag(Om)}.csv",
                  ["eps", "power_dbm", "p_s_0", "p_s_excited", "contrast"], rows)
        summary.append(dict(omega_reduced=Om, excited_level=k, contrast=res.contrast,
                            best_power_dbm=res.best_power_dbm))
        print(f"Omega = {Om:.3f}: contrast {res.contrast:.4f} at {res.best_power_dbm:.2f} dBm")
        if args.plot:
            from .plotting import plot_readout
            plot_readout(res, out.png(f"readout_omega_{_omega_tag(Om)}.png"))
    out.write("readout_summary.csv", ["omega_reduced", "excited_level", "contrast",
                                      "best_power_dbm"], summary)


def cmd_spectroscopy(cfg, args, out: Writer):
    from .config import build_system, omegas, sweep_eps
    from .experiments import pumped_spectroscopy
    s = build_system(cfg)
    ex = cfg.sections.get("experiment", {})
    mode = ex.get("mode", "linear_response")
    branch = ex.get("branch", "L")
    omega_s = None
    if "f_s_start" in ex:
        cfg.require("experiment", "f_s_stop", "f_s_points")
        omega_s = TWO_PI * np.linspace(ex["f_s_start"], ex["f_s_stop"], ex["f_s_points"])
    kw = dict(mode=mode, branch=branch, omega_s=omega_s, **_numerics(cfg))
    if mode == "sweep":
        kw.update(eps_s=TWO_PI * ex["eps_s"] if "eps_s" in ex else None,
                  t_window=ex.get("t_window"))
    summary, lines = [], []
    for Om in omegas(cfg):
        for e in sweep_eps(cfg, s, Om):
            ln = pumped_spectroscopy(s, Om, float(e), **kw)
            lines.append(ln)
            fit = ln.fit is not None
            summary.append(dict(
                omega_reduced=Om, eps=float(e),
                power_dbm=_dbm(s, ln.meta["omega_p"], float(e)),
                branch=ln.branch, n_mean=ln.n_mean,
                center_ghz=ln.center / TWO_PI / 1e9 if fit else float("nan"),
                fwhm_mhz=ln.fwhm_hz / 1e6 if fit else float("nan"),
                gamma2_mhz=ln.Gamma2 / TWO_PI / 1e6 if fit else float("nan"),
                accepted=ln.accepted))
    out.write("spectroscopy_summary.csv", ["omega_reduced", "eps", "power_dbm", "branch",
                                           "n_mean", "center_ghz", "fwhm_mhz", "gamma2_mhz",
                                           "accepted"], summary)
    rows = [dict(index=i, f_s_ghz=w / TWO_PI / 1e9, signal=y)
            for i, ln in enumerate(lines) for w, y in zip(ln.omega_s, ln.signal)]
    out.write("spectroscopy_lines.csv", ["index", "f_s_ghz", "signal"], rows)
    if args.plot:
        from .plotting import plot_spectroscopy
        plot_spectroscopy(lines, out.png("spectroscopy.png"))


def _dbm(s, wp, e):
    from .semiclassical import dbm_from_epsilon
    return float(dbm_from_epsilon(e, wp, s.kerr.kappa, s.attenuation_db))


def cmd_rabi(cfg, args, out: Writer):
    from .config import build_pulse, build_system, omegas
    from .experiments import rabi_experiment
    s = build_system(cfg)
    cfg.require("experiment", "eps_s", "t_stop", "t_points")
    ex = cfg.sections["experiment"]
    t = np.linspace(0.0, ex["t_stop"], ex["t_points"])
    readout = ex.get("readout", "ideal")
    kw = {}
    if readout == "jba":
        Om = omegas(cfg)[0]
        kw = dict(pulse=build_pulse(cfg, s, Om), Omega=Om)
    res = rabi_experiment(s, TWO_PI * ex["eps_s"], t, readout=readout, workers=args.workers,
                          **kw, **_numerics(cfg))
    out.write("rabi.csv", ["t_ns", "p"], [dict(t_ns=a * 1e9, p=b) for a, b in zip(res.t, res.p)])
    if res.fit is not None:
        f = res.fit.params
        out.write("rabi_fit.csv", ["rabi_mhz", "decay_ns", "amplitude", "offset", "rms"],
                  [dict(rabi_mhz=f["freq"] / TWO_PI / 1e6, decay_ns=f["decay"] * 1e9,
                        amplitude=f["amplitude"], offset=f["offset"], rms=res.fit.rms)])
    if args.plot:
        from .plotting import plot_rabi
        plot_rabi(res, out.png("rabi.png"))


BACKACTION_COLS = ["power_dbm", "n0", "n1", "D", "stark_mhz", "gamma_phi_mhz", "gamma_up_mhz",
                   "gamma_down_mhz", "gain", "validity_flag"]


def cmd_backaction(cfg, args, out: Writer):
    from .config import build_system, omegas, sweep_eps
    from .experiments import backaction_sweep
    s = build_system(cfg)
    if s.spectrum is None:
        raise ConfigError("backaction needs a [transmon] section or a qubit preset")
    branch = cfg.get("experiment", "branch")
    for Om in omegas(cfg):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rows = backaction_sweep(s, Om, sweep_eps(cfg, s, Om), branch=branch)
        u = TWO_PI * 1e6
        csv_rows = [dict(power_dbm=r["power_dbm"], n0=r["n0"], n1=r["n1"], D=r["D"],
                         stark_mhz=r["stark"] / u, gamma_phi_mhz=r["gamma_phi"] / u,
                         gamma_up_mhz=r["gamma_up"] / u, gamma_down_mhz=r["gamma_down"] / u,
                         gain=r["gain"], validity_flag="|".join(r["flags"]) or "ok")
                    for r in rows]
        out.write(f"backaction_omega_{_omega_tag(Om)}.csv", BACKACTION_COLS, csv_rows)
        if args.plot:
            from .plotting import plot_backaction
            plot_backaction(rows, out.png(f"backaction_omega_{_omega_tag(Om)}.png"))


COMMANDS = {
    "circuit-params": cmd_circuit_params,
    "stability-diagram": cmd_stability,
    "scurve": cmd_scurve,
    "readout": cmd_readout,
    "spectroscopy": cmd_spectroscopy,
    "rabi": cmd_rabi,
    "backaction": cmd_backaction,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kerrsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kerrsim {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND")
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI run configuration")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--workers", type=int, default=1, help="worker processes")
        sp.add_argument("--seed", type=int, default=0, help="recorded in the CSV header")
        sp.add_argument("--plot", action="store_true", help="also write PNG figures")
    return p


def dispatch(command: str, cfg, args) -> int:
    if command not in COMMANDS:
        raise KeyError(command)
    np.random.seed(args.seed)
    max_dim = cfg.get("numerics", "max_dim")
    if max_dim is not None:
        os.environ["KERRSIM_MAX_DIM"] = str(max_dim)
    COMMANDS[command](cfg, args, Writer(args.out, cfg, args.seed))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] not in SUBCOMMANDS and not argv[0].startswith("-"):
        parser.print_usage(sys.stderr)
        if argv:
            print(f"error: unknown subcommand '{argv[0]}'", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        return dispatch(args.command, cfg, args)
    except (ConfigError, OSError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # any module error becomes one machine-readable line
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
