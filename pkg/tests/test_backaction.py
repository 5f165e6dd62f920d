import warnings

import mpmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrsim.backaction import (BackactionWarning, backaction_point, dispersive_chi,
                                dispersive_constants, linear_pointer_states, nbar_from_stark,
                                pointer_residuals, pointer_states, rates, stark_lamb_shifts,
                                stark_shift_01, validity_flags)
from kerrsim.circuit import KerrParameters
from kerrsim.semiclassical import bifurcation_thresholds
from kerrsim.transmon import QubitDissipation, TransmonSpectrum

TWO_PI = 2 * np.pi
WR = TWO_PI * 6.4535e9
KERR = KerrParameters(WR, -TWO_PI * 0.5e6, 0.0, TWO_PI * 5e6)


def spectrum(delta_mhz=-750.0, anh_mhz=-400.0, M=3):
    return TransmonSpectrum.ladder(WR + TWO_PI * delta_mhz * 1e6, TWO_PI * anh_mhz * 1e6, M)


def couplings(g_mhz=57.0):
    return [TWO_PI * g_mhz * 1e6, TWO_PI * g_mhz * 1e6 * np.sqrt(2)]


def test_two_level_chi():
    s = spectrum(M=2)
    g = TWO_PI * 50e6
    chi, sbar, ncrit, chi01, chi12 = dispersive_chi(s, [g], WR)
    assert chi == pytest.approx(g**2 / (-TWO_PI * 750e6))
    assert chi12 == 0 and sbar == 0
    s10 = TransmonSpectrum.ladder(WR + TWO_PI * 500e6, -1.0, 2)
    assert dispersive_chi(s10, [TWO_PI * 50e6], WR)[2] == pytest.approx(25.0)
    with pytest.raises(ZeroDivisionError):
        dispersive_chi(TransmonSpectrum.ladder(WR, -1.0, 2), [1.0], WR)


def test_reference_chi_sbar_consistency():
    # anharmonicity tuned so that chi ~ -0.8 MHz at Delta = -732 MHz, g = 44 MHz
    s = TransmonSpectrum.ladder(WR - TWO_PI * 732e6, -TWO_PI * 320e6, 3)
    chi, sbar, *_ = dispersive_chi(s, couplings(44.0), WR)
    assert chi / TWO_PI == pytest.approx(-0.8e6, rel=0.15)
    assert sbar / TWO_PI == pytest.approx(1.7e6, rel=0.15)


def test_two_level_constants():
    c = dispersive_constants(spectrum(M=2), couplings()[:1], WR - TWO_PI * 10e6, M=2)
    assert c.S_p[0] == pytest.approx(-c.chi_p[0]) and c.S_p[1] == pytest.approx(c.chi_p[0])
    assert c.K_p[0] == pytest.approx(4 * c.chi_p[0] * c.lambda_p[0] ** 2)
    assert c.K_p[1] == pytest.approx(-4 * c.chi_p[0] * c.lambda_p[0] ** 2)
    assert c.lambda_p[0] > 0  # qubit below the pump


def test_pump_referenced_shifts():
    s, g = spectrum(), couplings()
    c_r = dispersive_constants(s, g, WR, omega_r=WR)
    assert c_r.S_p[1] - c_r.S_p[0] == pytest.approx(2 * c_r.chi, rel=1e-12)
    wp = WR - TWO_PI * 20e6
    c_p = dispersive_constants(s, g, wp)
    d01, d12 = s.omega[1] - wp, s.omega[2] - s.omega[1] - wp
    assert c_p.S_p[1] - c_p.S_p[0] == pytest.approx(2 * g[0] ** 2 / d01 - g[1] ** 2 / d12, rel=1e-12)
    assert abs(c_p.S_p[1] - c_r.S_p[1]) > 1e-3 * abs(c_r.S_p[1])
    with pytest.raises(ZeroDivisionError):
        dispersive_constants(s, g, s.omega[1])


def test_zero_drive_pointer():
    c = dispersive_constants(spectrum(), couplings(), WR - TWO_PI * 5e6)
    ps = pointer_states(c, KERR, 0.0)
    assert np.all(ps.alpha_p == 0) and ps.D == 0


def test_linear_reduction():
    c = dispersive_constants(spectrum(M=2), couplings()[:1], WR - TWO_PI * 3e6, M=2)
    c = type(c)(c.lambda_p, c.chi_p, c.S_p, np.zeros(2), c.omega_p, c.g, c.omega)
    k = KerrParameters(WR, 0.0, 0.0, KERR.kappa)
    eps = TWO_PI * 4e6
    ps = pointer_states(c, k, eps)
    chi = c.chi_p[0]
    # S_0 = -chi^p, S_1 = +chi^p map onto the -chi, +chi of the linear formula
    a0, a1, D, *_ = linear_pointer_states(chi, WR, c.omega_p, eps, k.kappa)
    assert abs(ps.alpha_p[0] - a0) < 1e-10 * abs(a0)
    assert abs(ps.alpha_p[1] - a1) < 1e-10 * abs(a1)
    assert ps.D == pytest.approx(D, rel=1e-10)


@given(st.floats(0.0, 40.0), st.floats(-6.0, 8.0))
@settings(max_examples=60, deadline=None)
def test_pointer_residuals(x, Om):
    c = dispersive_constants(spectrum(), couplings(), WR - Om * KERR.kappa / 2)
    ps = pointer_states(c, KERR, x * KERR.kappa / 4, branch=None)
    assert np.all(pointer_residuals(c, KERR, ps, x * KERR.kappa / 4) < 1e-9 * KERR.kappa)


def test_branch_errors():
    c = dispersive_constants(spectrum(), couplings(), WR - 2 * KERR.kappa)
    with pytest.raises(ValueError):
        pointer_states(c, KERR, 0.01 * KERR.kappa, branch=("L", "H", "L", "H"))
    with pytest.raises(ValueError):
        # far above threshold at Omega = 2 only H exists
        pointer_states(c, KERR, 20 * KERR.kappa, branch="L")
    with pytest.raises(ValueError):
        pointer_states(c, KERR.__class__(WR, -1.0, 0.0, 0.0), 1.0)


def test_distinguishability_jump():
    # the level with the larger pull bifurcates first; D jumps there
    wp = WR - 4 * KERR.kappa / 2
    c = dispersive_constants(spectrum(), couplings(), wp)
    ths = [bifurcation_thresholds(2 * (WR - wp) / KERR.kappa, KERR, include_Kp=True,
                                  delta_shift=c.S_p[i], K_shift=c.K_p[i] / 6) for i in (0, 1)]
    first = min(ths[0].eps_plus, ths[1].eps_plus)
    below = pointer_states(c, KERR, 0.999 * first, branch=None).D
    above = pointer_states(c, KERR, 1.001 * first, branch=None).D
    assert above > 2 * below


def test_static_lamb_shift():
    s, g = spectrum(), couplings()
    c = dispersive_constants(s, g, WR)
    ps = pointer_states(c, KERR, 0.0)
    sh = stark_lamb_shifts(c, ps, KERR)
    assert sh.omega_ppp[0] == s.omega[0]
    lam0 = -g[0] / (s.omega[1] - s.omega[0] - WR)
    assert sh.omega_ppp[1] == pytest.approx(s.omega[1] - g[0] * lam0, rel=1e-14)
    assert stark_shift_01(c, ps, KERR) == 0.0


def test_purcell_limit():
    s = TransmonSpectrum.ladder(WR - TWO_PI * 500e6, -TWO_PI * 300e6, 3)
    g = couplings(50.0)
    c = dispersive_constants(s, g, WR)
    r = rates(c, pointer_states(c, KERR, 0.0), KERR, None)
    assert r.gamma_phi_tp == 0 and r.gamma_up == 0
    assert r.gamma_down == pytest.approx(0.01 * KERR.kappa, rel=1e-12)


@given(st.floats(0.05, 30.0), st.floats(-3.0, 6.0))
@settings(max_examples=60, deadline=None)
def test_measurement_dephasing_identity(x, Om):
    c = dispersive_constants(spectrum(), couplings(), WR - Om * KERR.kappa / 2)
    ps = pointer_states(c, KERR, x * KERR.kappa / 4)
    d = QubitDissipation.uniform(0.0, TWO_PI * 0.2e6, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BackactionWarning)
        r = rates(c, ps, KERR, d)
    assert r.gamma_phi_tp - TWO_PI * 0.2e6 == pytest.approx(0.5 * KERR.kappa * ps.D**2, rel=1e-12,
                                                             abs=1e-9)


def test_linear_identity_fuzz(rng):
    for _ in range(1000):
        chi = TWO_PI * rng.uniform(-5e6, 5e6)
        kappa = TWO_PI * rng.uniform(0.5e6, 20e6)
        wp = WR + TWO_PI * rng.uniform(-20e6, 20e6)
        eps = TWO_PI * rng.uniform(0.0, 30e6)
        a0, a1, D, gm, _ = linear_pointer_states(chi, WR, wp, eps, kappa)
        assert abs(gm - 0.5 * kappa * D**2) <= 1e-12 * max(abs(gm), 1e-300)


def test_linear_outputs_match_definitions(rng):
    """Stable closed forms against the defining expressions at 40 digits."""
    mpmath.mp.dps = 40
    for _ in range(50):
        chi = TWO_PI * rng.uniform(-5e6, 5e6)
        kappa = TWO_PI * rng.uniform(0.5e6, 20e6)
        wp = WR + TWO_PI * rng.uniform(-20e6, 20e6)
        eps = TWO_PI * rng.uniform(0.1e6, 30e6)
        a0, a1, D, gm, dw = linear_pointer_states(chi, WR, wp, eps, kappa)
        d = mpmath.mpf(WR) - mpmath.mpf(wp)
        m0 = -eps / ((d - chi) - 0.5j * mpmath.mpf(kappa))
        m1 = -eps / ((d + chi) - 0.5j * mpmath.mpf(kappa))
        prod = m0 * mpmath.conj(m1)
        assert float(abs(m1 - m0)) == pytest.approx(D, rel=1e-13)
        assert float(2 * chi * prod.imag) == pytest.approx(gm, rel=1e-13)
        assert float(2 * chi * prod.real) == pytest.approx(dw, rel=1e-13)
        assert complex(m0) == pytest.approx(a0, rel=1e-14)


def test_linear_limits():
    a0, a1, D, gm, dw = linear_pointer_states(0.0, WR, WR, TWO_PI * 1e6, KERR.kappa)
    assert a0 == a1 and D == 0 and gm == 0
    chi = 1e-3 * KERR.kappa
    a0, a1, D, gm, dw = linear_pointer_states(chi, WR, WR, TWO_PI * 2e6, KERR.kappa)
    nbar = abs(0.5 * (a0 + a1)) ** 2
    assert dw == pytest.approx(2 * chi * nbar, rel=1e-5)


def test_nbar_round_trip():
    c = dispersive_constants(spectrum(), couplings(), WR - TWO_PI * 5e6)
    a = c.S_p[1] - c.S_p[0]
    b = 0.25 * (c.K_p[1] - c.K_p[0])
    for n in np.linspace(0, 50, 101):
        assert nbar_from_stark(a * n + b * n * n, c) == pytest.approx(n, rel=1e-9, abs=1e-12)
    assert nbar_from_stark(0.0, c) == 0.0
    with pytest.raises(ValueError):
        nbar_from_stark(-a, c)


def test_default_stark_uses_initial_state_field():
    wp = WR - 3 * KERR.kappa / 2
    c = dispersive_constants(spectrum(), couplings(), wp)
    ps = pointer_states(c, KERR, 0.5 * KERR.kappa)
    n0 = ps.n[0]
    lin = (c.S_p[1] - c.S_p[0]) * n0 + 0.25 * (c.K_p[1] - c.K_p[0]) * n0**2
    # the remaining difference is the field dependence of the Lamb shift
    assert stark_shift_01(c, ps, KERR) == pytest.approx(lin, rel=0.05)
    assert nbar_from_stark(lin, c) == pytest.approx(n0, rel=1e-9)


def test_validity_flags():
    c = dispersive_constants(spectrum(), couplings(), WR - 4 * KERR.kappa / 2)
    th = bifurcation_thresholds(4.0, KERR)
    low = pointer_states(c, KERR, 0.05 * KERR.kappa)
    assert validity_flags(c, low) == []
    row = backaction_point(c, KERR, 0.999 * th.eps_plus, None)
    assert "D2" in row["flags"] or row["D"] ** 2 < 0.5
    strong = dispersive_constants(TransmonSpectrum.ladder(WR - TWO_PI * 100e6, -TWO_PI * 300e6, 3),
                                  couplings(57.0), WR)
    assert "lambda" in validity_flags(strong, pointer_states(strong, KERR, 0.0))
