import numpy as np
import pytest

from kerrsim.circuit import KerrParameters

TWO_PI = 2 * np.pi


@pytest.fixture
def small_kerr():
    """Few-photon Kerr oscillator for cheap master-equation runs."""
    return KerrParameters.from_frequencies(f_r=6.0e9, kerr=-1.0e6, kappa=5.0e6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
