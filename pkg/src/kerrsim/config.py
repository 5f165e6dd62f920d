"""Run configuration: flat INI sections of ``key = value unit`` lines.

Values are stored in SI units (Hz, s, K, A, Ohm, dBm, rad/s for drive
amplitudes given in MHz) and serialized back in each key's canonical unit,
so ``parse_config(serialize_config(cfg)) == cfg``.  A value may be a
comma-separated list.  Comments start with ``#`` or ``;``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config", "load_config",
           "SCHEMA", "build_system", "build_pulse", "sweep_eps"]


class ConfigError(ValueError):
    """Config problem; ``line`` is 1-based or None when not tied to a line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# dimension -> {unit token: factor to SI}
UNITS = {
    "frequency": {"GHz": 1e9, "MHz": 1e6, "kHz": 1e3, "Hz": 1.0},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9},
    "temperature": {"K": 1.0, "mK": 1e-3},
    "current": {"A": 1.0, "uA": 1e-6, "µA": 1e-6, "nA": 1e-9},
    "impedance": {"ohm": 1.0, "Ohm": 1.0, "Ω": 1.0},
    "power": {"dBm": 1.0},
    "attenuation": {"dB": 1.0},
}

# key -> (dimension or 'number' | 'int' | 'text' | 'bool', canonical unit)
SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "circuit": {
        "preset": ("text", ""),
        "f_r": ("frequency", "GHz"),
        "q": ("number", ""),
        "kappa": ("frequency", "MHz"),
        "kerr": ("frequency", "MHz"),
        "kerr5": ("frequency", "MHz"),
        "i0": ("current", "nA"),
        "z0": ("impedance", "ohm"),
        "temperature": ("temperature", "mK"),
        "attenuation": ("attenuation", "dB"),
    },
    "transmon": {
        "model": ("text", ""),
        "ej": ("frequency", "GHz"),
        "ec": ("frequency", "GHz"),
        "f01": ("frequency", "GHz"),
        "anharmonicity": ("frequency", "MHz"),
        "ng": ("number", ""),
        "flux_ratio": ("number", ""),
        "levels": ("int", ""),
        "t1": ("time", "us"),
        "tphi": ("time", "us"),
    },
    "coupling": {
        "g": ("frequency", "MHz"),
        "beta": ("number", ""),
    },
    "pulse": {
        "t_rise": ("time", "ns"),
        "t_measure": ("time", "ns"),
        "t_fall": ("time", "ns"),
        "t_hold": ("time", "ns"),
        "hold_fraction": ("number", ""),
        "p_hold": ("power", "dBm"),
    },
    "sweep": {
        "omega": ("number", ""),
        "omega_start": ("number", ""),
        "omega_stop": ("number", ""),
        "omega_points": ("int", ""),
        "p_start": ("power", "dBm"),
        "p_stop": ("power", "dBm"),
        "rel_start": ("number", ""),
        "rel_stop": ("number", ""),
        "points": ("int", ""),
        "temperatures": ("temperature", "mK"),
    },
    "experiment": {
        "prep": ("int", ""),
        "shelving": ("bool", ""),
        "branch": ("text", ""),
        "mode": ("text", ""),
        "readout": ("text", ""),
        "eps_s": ("frequency", "MHz"),
        "f_s_start": ("frequency", "GHz"),
        "f_s_stop": ("frequency", "GHz"),
        "f_s_points": ("int", ""),
        "t_stop": ("time", "ns"),
        "t_points": ("int", ""),
        "t_window": ("time", "ns"),
    },
    "numerics": {
        "n_fock": ("int", ""),
        "safety": ("number", ""),
        "max_dim": ("int", ""),
    },
}

_SECTION = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_KEYVAL = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


@dataclass
class RunConfig:
    """Parsed config: section -> key -> value (float, int, str, bool or tuple)."""

    sections: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return section in self.sections
        return key in self.sections.get(section, {})

    def require(self, section: str, *keys: str):
        if section not in self.sections:
            raise ConfigError(f"missing section [{section}]")
        for k in keys:
            if k not in self.sections[section]:
                raise ConfigError(f"missing key '{k}' in [{section}]")

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.sections == other.sections


def _parse_scalar(kind: str, token: str, lineno: int, key: str):
    if kind == "text":
        return token
    if kind == "bool":
        t = token.lower()
        if t in ("yes", "true", "on", "1"):
            return True
        if t in ("no", "false", "off", "0"):
            return False
        raise ConfigError(f"'{key}' expects yes/no, got '{token}'", lineno)
    if kind == "int":
        try:
            return int(token)
        except ValueError:
            raise ConfigError(f"'{key}' expects an integer, got '{token}'", lineno) from None
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"'{key}' expects a number, got '{token}'", lineno) from None


def _parse_value(section: str, key: str, text: str, lineno: int):
    kind, _ = SCHEMA[section][key]
    text = text.strip()
    if not text:
        raise ConfigError(f"empty value for '{key}'", lineno)
    unit = None
    if kind in UNITS:
        m = re.match(r"^(.*?)\s*([^\s\d,.+\-]+)$", text)
        if not m or not m.group(1):
            raise ConfigError(f"'{key}' needs a {kind} unit", lineno)
        text, unit = m.group(1), m.group(2)
        if unit not in UNITS[kind]:
            raise ConfigError(f"unit '{unit}' is not a {kind} unit for '{key}' "
                              f"(use one of {', '.join(UNITS[kind])})", lineno)
    elif kind in ("number", "int"):
        if re.search(r"[A-Za-zµΩ]", text.replace("e", "").replace("E", "")):
            raise ConfigError(f"'{key}' is dimensionless; unexpected unit in '{text}'", lineno)
    parts = [p.strip() for p in text.split(",")]
    if any(not p for p in parts):
        raise ConfigError(f"malformed list for '{key}'", lineno)
    base = "number" if kind in UNITS else kind
    vals = [_parse_scalar(base, p, lineno, key) for p in parts]
    if unit is not None:
        vals = [v * UNITS[kind][unit] for v in vals]
    for v in vals:
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(f"non-finite value for '{key}'", lineno)
    return vals[0] if len(vals) == 1 else tuple(vals)


def parse_config(text: str) -> RunConfig:
    """Parse config text; raises ConfigError naming the first offending line."""
    sections: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            name = m.group(1).lower()
            if name not in SCHEMA:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            current = sections.setdefault(name, {})
            continue
        m = _KEYVAL.match(line)
        if not m:
            raise ConfigError(f"cannot parse '{raw.strip()}'", lineno)
        if current is None:
            raise ConfigError("key outside of any section", lineno)
        key = m.group(1).lower()
        section = next(s for s, d in sections.items() if d is current)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in [{section}]", lineno)
        if key in current:
            raise ConfigError(f"duplicate key '{key}'", lineno)
        current[key] = _parse_value(section, key, m.group(2), lineno)
    return RunConfig(sections)


def _format_scalar(v, kind, unit):
    if kind == "bool":
        return "yes" if v else "no"
    if kind in ("int", "text"):
        return str(v)
    if kind in UNITS:
        v = v / UNITS[kind][unit]
    return repr(float(v))


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text; every value in its key's canonical unit."""
    out = []
    for section in SCHEMA:
        if section not in cfg.sections:
            continue
        out.append(f"[{section}]")
        for key, v in cfg.sections[section].items():
            kind, unit = SCHEMA[section][key]
            vals = v if isinstance(v, tuple) else (v,)
            body = ", ".join(_format_scalar(x, kind, unit) for x in vals)
            out.append(f"{key} = {body} {unit}".rstrip())
        out.append("")
    return "\n".join(out)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# --- builders -------------------------------------------------------------

def _as_tuple(v):
    if v is None:
        return ()
    return v if isinstance(v, tuple) else (v,)


def build_system(cfg: RunConfig):
    """System from [circuit], [transmon], [coupling] (or a preset name)."""
    from .circuit import (JunctionResonatorSpec, KerrParameters, bare_frequency_for_loaded,
                          derive_equivalent_circuit)
    from .semiclassical import DEFAULT_ATTENUATION_DB
    from .system import PRESETS, System
    from .transmon import (QubitDissipation, TransmonSpec, TransmonSpectrum, coupling_constants,
                           diagonalize_cpb, fit_transmon, scaled_couplings, vacuum_voltage)

    cfg.require("circuit")
    c = cfg.sections["circuit"]
    T = c.get("temperature", 0.0)
    n_fock = cfg.get("numerics", "n_fock")
    if "preset" in c:
        extra = set(c) - {"preset", "temperature"}
        if extra or cfg.has("transmon") or cfg.has("coupling"):
            raise ConfigError("a preset excludes other circuit keys and the "
                              "[transmon]/[coupling] sections")
        if c["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset '{c['preset']}' (one of {', '.join(PRESETS)})")
        sysm = PRESETS[c["preset"]]()
        sysm = sysm.with_temperature(T) if T else sysm
        return sysm.replace(n_fock=n_fock) if n_fock else sysm

    cfg.require("circuit", "f_r")
    f_r = c["f_r"]
    w = 2 * np.pi
    if "kappa" in c and "q" in c:
        raise ConfigError("give either q or kappa, not both")
    if "kappa" in c:
        kappa_hz = c["kappa"]
    elif "q" in c:
        kappa_hz = f_r / c["q"]
    else:
        raise ConfigError("missing key 'q' or 'kappa' in [circuit]")
    if "i0" in c:
        cfg.require("circuit", "z0")
        if "kerr" in c or "kerr5" in c:
            raise ConfigError("kerr/kerr5 are derived when i0 is given")
        omega1 = bare_frequency_for_loaded(w * f_r, c["i0"], c["z0"])
        kerr = derive_equivalent_circuit(JunctionResonatorSpec(
            c["i0"], omega1, c["z0"], f_r / kappa_hz, T))
    else:
        cfg.require("circuit", "kerr")
        kerr = KerrParameters.from_frequencies(f_r, c["kerr"], kappa_hz, c.get("kerr5", 0.0),
                                               T=T, Z0=c.get("z0", float("nan")))
    att = c.get("attenuation", DEFAULT_ATTENUATION_DB)

    if not cfg.has("transmon"):
        if cfg.has("coupling"):
            raise ConfigError("[coupling] needs a [transmon] section")
        return System(kerr, attenuation_db=att, n_fock=n_fock, name="config")

    t = cfg.sections["transmon"]
    M = t.get("levels", 3)
    model = t.get("model", "cpb")
    if model not in ("cpb", "ladder"):
        raise ConfigError("transmon model must be 'cpb' or 'ladder'")
    if "ej" in t or "ec" in t:
        cfg.require("transmon", "ej", "ec")
        if model == "ladder":
            raise ConfigError("ej/ec need model = cpb")
        spec = TransmonSpec(w * t["ej"], w * t["ec"], t.get("ng", 0.0), t.get("flux_ratio", 0.0),
                            M=M)
        spectrum = diagonalize_cpb(spec)
    else:
        cfg.require("transmon", "f01", "anharmonicity")
        if model == "ladder":
            spectrum = TransmonSpectrum.ladder(w * t["f01"], w * t["anharmonicity"], M)
        else:
            spec = fit_transmon(w * t["f01"], w * t["anharmonicity"], N_g=t.get("ng", 0.0), M=M)
            spectrum = diagonalize_cpb(spec)
    diss = QubitDissipation.from_times(t.get("t1"), t.get("tphi"), M)

    cfg.require("coupling")
    cp = cfg.sections["coupling"]
    if ("g" in cp) == ("beta" in cp):
        raise ConfigError("give exactly one of g or beta in [coupling]")
    if "g" in cp:
        g = scaled_couplings(spectrum, w * cp["g"])
    else:
        if not np.isfinite(kerr.Z0):
            raise ConfigError("beta needs z0 in [circuit]")
        g = coupling_constants(spectrum, cp["beta"], vacuum_voltage(kerr.omega_r, kerr.Z0))
    return System(kerr, spectrum, tuple(g), diss, n_fock=n_fock, attenuation_db=att,
                  name="config")


def build_pulse(cfg: RunConfig, system, Omega: float):
    """Readout envelope: [pulse] times override the 1/kappa defaults."""
    from .experiments import default_pulse, pump_for
    from .pulse import PulseProfile
    from .semiclassical import epsilon_from_dbm

    p = cfg.sections.get("pulse", {})
    kappa = system.kerr.kappa
    base = default_pulse(system, Omega, hold_fraction=p.get("hold_fraction", 0.25))
    eh = base.eps_hold
    if "p_hold" in p:
        if "hold_fraction" in p:
            raise ConfigError("give either p_hold or hold_fraction")
        eh = float(epsilon_from_dbm(p["p_hold"], pump_for(system, Omega), kappa,
                                    system.attenuation_db))
    return PulseProfile(p.get("t_rise", base.t_rise), p.get("t_measure", base.t_measure),
                        p.get("t_hold", base.t_hold), eh, eh, p.get("t_fall", base.t_fall))


def sweep_eps(cfg: RunConfig, system, Omega: float) -> np.ndarray:
    """Drive amplitudes (rad/s) from p_start/p_stop (dBm) or rel_start/rel_stop.

    ``rel`` values are fractions of the level-0 upper threshold in eps^2;
    below the critical detuning, where there is no threshold, they are
    eps^2 / kappa^2.
    """
    from .experiments import pump_for
    from .semiclassical import bifurcation_thresholds, epsilon_from_dbm

    cfg.require("sweep", "points")
    s = cfg.sections["sweep"]
    n = s["points"]
    if n < 1:
        raise ConfigError("points must be positive")
    if "p_start" in s:
        cfg.require("sweep", "p_stop")
        p = np.linspace(s["p_start"], s["p_stop"], n)
        return np.asarray(epsilon_from_dbm(p, pump_for(system, Omega), system.kerr.kappa,
                                           system.attenuation_db), float)
    cfg.require("sweep", "rel_start", "rel_stop")
    th = bifurcation_thresholds(Omega, system.kerr_for_level(0))
    ref = th.eps_plus if th is not None else system.kerr.kappa
    return np.sqrt(np.linspace(s["rel_start"], s["rel_stop"], n)) * ref


def omegas(cfg: RunConfig) -> tuple:
    cfg.require("sweep")
    s = cfg.sections["sweep"]
    if "omega" in s:
        return _as_tuple(s["omega"])
    cfg.require("sweep", "omega_start", "omega_stop", "omega_points")
    return tuple(np.linspace(s["omega_start"], s["omega_stop"], s["omega_points"]))
