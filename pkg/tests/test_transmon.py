import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrsim.transmon import (QubitDissipation, TransmonSpec, TransmonSpectrum, coupling_constants,
                              diagonalize_cpb, effective_EJ, fit_transmon, scaled_couplings,
                              vacuum_voltage)

from oracles import mathieu_levels

TWO_PI = 2 * np.pi


def test_effective_ej():
    assert effective_EJ(3.0, 0.0) == 6.0
    assert effective_EJ(3.0, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert effective_EJ(3.0, 1 / 3) == pytest.approx(3.0, rel=1e-14)


def test_zero_ej_charge_states():
    s = diagonalize_cpb(TransmonSpec(1e-300, 1.0, 0.0, 0.5, 15, 5))
    assert np.allclose(s.omega, [0, 1, 1, 4, 4], atol=1e-9)


@pytest.mark.parametrize("ratio", [5.0, 20.0, 50.0, 120.0])
def test_against_mathieu(ratio):
    s = diagonalize_cpb(TransmonSpec(ratio / 2, 1.0, 0.0, 0.0, 20, 5))
    assert np.allclose(s.omega, mathieu_levels(ratio, 1.0, 5), rtol=1e-9, atol=1e-9)


def test_transmon_frequency_asymptote():
    s = diagonalize_cpb(TransmonSpec(25.0, 1.0, M=3))
    assert s.omega01 == pytest.approx(np.sqrt(2 * 50.0), rel=0.05)


def test_transmon_anharmonicity_asymptote():
    # exact value at E_J/E_C = 50 sits 6.4 % from -E_C/4; see the ledger
    s = diagonalize_cpb(TransmonSpec(25.0, 1.0, M=3))
    assert s.anharmonicity == pytest.approx(-0.25, rel=0.05)


def test_anharmonicity_converges_to_asymptote():
    errs = [abs(diagonalize_cpb(TransmonSpec(r / 2, 1.0, n_charge_cutoff=40, M=3)).anharmonicity
                / -0.25 - 1)
            for r in (50, 200, 800)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


def test_matrix_element_ladder():
    n = diagonalize_cpb(TransmonSpec(25.0, 1.0, M=4, n_charge_cutoff=40)).n_matrix
    assert n[1, 2] / n[0, 1] == pytest.approx(np.sqrt(2), rel=0.03)
    assert n[2, 3] / n[0, 1] == pytest.approx(np.sqrt(3), rel=0.03)
    assert abs(n[0, 2]) < 1e-10  # parity at N_g = 0


def test_cutoff_convergence():
    a = diagonalize_cpb(TransmonSpec(25.0, 1.0, n_charge_cutoff=15)).omega01
    b = diagonalize_cpb(TransmonSpec(25.0, 1.0, n_charge_cutoff=30)).omega01
    assert abs(a - b) / b < 1e-10


def test_charge_dispersion():
    a = diagonalize_cpb(TransmonSpec(25.0, 1.0, N_g=0.0)).omega01
    b = diagonalize_cpb(TransmonSpec(25.0, 1.0, N_g=0.5)).omega01
    assert abs(a - b) / a < 1e-4


@given(st.floats(0.0, 1.0), st.floats(1.0, 30.0))
@settings(max_examples=30)
def test_ng_symmetry(ng, ratio):
    a = diagonalize_cpb(TransmonSpec(ratio / 2, 1.0, N_g=ng))
    b = diagonalize_cpb(TransmonSpec(ratio / 2, 1.0, N_g=-ng))
    assert np.allclose(a.omega, b.omega, rtol=1e-9, atol=1e-12)


@given(st.floats(2.0, 100.0), st.floats(-0.5, 0.5))
@settings(max_examples=30)
def test_gauge(ratio, ng):
    s = diagonalize_cpb(TransmonSpec(ratio / 2, 1.0, N_g=ng, M=4))
    assert all(s.n_matrix[i, i + 1] > 0 for i in range(3))
    assert np.allclose(s.n_matrix, s.n_matrix.T)


def test_validation():
    with pytest.raises(ValueError):
        diagonalize_cpb(TransmonSpec(1.0, 1.0, n_charge_cutoff=10, M=18))
    with pytest.raises(ValueError):
        diagonalize_cpb(TransmonSpec(-1.0, 1.0))


def test_couplings():
    s = diagonalize_cpb(TransmonSpec(25.0, 1.0, M=3))
    g = coupling_constants(s, 0.1, vacuum_voltage(TWO_PI * 6e9, 50.0))
    assert g[1] / g[0] == pytest.approx(s.n_matrix[1, 2] / s.n_matrix[0, 1], rel=1e-12)
    g2 = scaled_couplings(s, TWO_PI * 44e6)
    assert g2[0] == pytest.approx(TWO_PI * 44e6)
    assert g2[1] == pytest.approx(np.sqrt(2) * TWO_PI * 44e6, rel=0.03)
    with pytest.raises(ValueError):
        coupling_constants(s, 1.5, 1.0)
    zero = TransmonSpectrum(np.array([0.0, 1.0]), np.zeros((2, 2)))
    assert coupling_constants(zero, 0.1, 1.0)[0] == 0.0


def test_fit_transmon_round_trip():
    w01, anh = TWO_PI * 5.7e9, -TWO_PI * 0.35e9
    s = diagonalize_cpb(fit_transmon(w01, anh))
    assert s.omega01 == pytest.approx(w01, abs=TWO_PI * 2e3)
    assert s.anharmonicity == pytest.approx(anh, abs=TWO_PI * 2e3)


def test_ladder_and_dissipation():
    s = TransmonSpectrum.ladder(10.0, -1.0, 4)
    assert np.allclose(s.omega, [0, 10, 19, 27])
    d = QubitDissipation.uniform(2.0, 0.5, 3)
    assert d.relaxation(1) == 4.0
    assert d.gamma_phi01 == 0.5
    with pytest.raises(ValueError):
        QubitDissipation(-1.0)
