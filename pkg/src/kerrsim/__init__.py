"""Transmon coupled to a driven Kerr nonlinear resonator: bifurcation readout and backaction.

Frequencies are angular (rad/s) everywhere inside the package; the config
file and CSV outputs use ordinary-frequency units.
"""

__version__ = "0.1.0"

from .circuit import (CONST, JunctionResonatorSpec, KerrParameters, PhysicalConstants,
                      derive_equivalent_circuit, kerr_constants)
from .system import PRESETS, System

__all__ = ["__version__", "CONST", "PhysicalConstants", "JunctionResonatorSpec",
           "KerrParameters", "derive_equivalent_circuit", "kerr_constants", "System", "PRESETS"]
