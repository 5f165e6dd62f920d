import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrsim.circuit import (JunctionResonatorSpec, KerrParameters, bare_frequency_for_loaded,
                             derive_equivalent_circuit)
from kerrsim.semiclassical import (OMEGA_C, bifurcation_thresholds, critical_point,
                                   dbm_from_epsilon, epsilon_from_dbm, junction_current,
                                   pump_frequency, reduced_detuning, select_branch,
                                   small_signal_gain, stability_diagram, steady_states)

from oracles import brute_critical_detuning, cubic_root_count, has_three_roots

TWO_PI = 2 * np.pi
KERR = KerrParameters.from_frequencies(f_r=6.4535e9, kerr=-0.5e6, kappa=5e6)


def residual(alpha, Omega, eps, k):
    return (1j * (Omega * k.kappa / 2 * alpha + k.K * abs(alpha) ** 2 * alpha)
            + k.kappa / 2 * alpha + 1j * eps)


def brute_root_count(Omega, eps, k, points=2000):
    return cubic_root_count(Omega, eps, k.kappa, k.K, points)


def is_bistable_brute(Omega, k):
    return has_three_roots(Omega, k.kappa, k.K)


def test_reduced_detuning():
    assert reduced_detuning(KERR.omega_r, KERR) == 0.0
    wp = KERR.omega_r * (1 - math.sqrt(3) / (2 * KERR.Q))
    assert reduced_detuning(wp, KERR) == pytest.approx(math.sqrt(3), rel=1e-9)
    assert pump_frequency(3.0, KERR) == pytest.approx(KERR.omega_r * (1 - 3 / (2 * KERR.Q)))
    dev = KerrParameters(omega_r=TWO_PI * 6.4535e9, K=-1.0, Kp=0.0, kappa=TWO_PI * 6.4535e9 / 685)
    assert reduced_detuning(TWO_PI * 6.439e9, dev) == pytest.approx(3.08, abs=0.01)


def test_zero_drive():
    sols = steady_states(3.0, 0.0, KERR)
    assert len(sols) == 1 and sols[0].alpha == 0 and sols[0].stable


def test_linear_lorentzian():
    k = KerrParameters(KERR.omega_r, 0.0, 0.0, KERR.kappa)
    eps = 0.7 * k.kappa
    for Om in (-2.0, 0.0, 1.5):
        (s,) = steady_states(Om, eps, k)
        assert s.n == pytest.approx(eps**2 / ((Om * k.kappa / 2) ** 2 + k.kappa**2 / 4), rel=1e-12)
    assert bifurcation_thresholds(3.0, k) is None
    with pytest.raises(ValueError):
        critical_point(k)


@given(st.floats(-4.0, 12.0), st.floats(0.0, 6.0))
@settings(max_examples=200)
def test_residuals_and_counts(Omega, x):
    eps = x * KERR.kappa * math.sqrt(max(abs(Omega), 1.0))
    sols = steady_states(Omega, eps, KERR)
    for s in sols:
        assert abs(residual(s.alpha, Omega, eps, KERR)) < 1e-10 * KERR.kappa
    assert len(sols) in (1, 2, 3)
    th = bifurcation_thresholds(Omega, KERR)
    if th is not None and abs(eps - th.eps_plus) > 1e-3 * eps and abs(eps - th.eps_minus) > 1e-3 * eps:
        assert len(sols) == brute_root_count(Omega, eps, KERR, points=20000)


@given(st.floats(0.0, 10.0), st.floats(0.01, 6.0))
@settings(max_examples=100)
def test_odd_symmetry(Omega, x):
    eps = x * KERR.kappa
    a = steady_states(Omega, eps, KERR)
    b = steady_states(Omega, -eps, KERR)
    assert len(a) == len(b)
    for s, t in zip(a, b):
        assert t.alpha == pytest.approx(-s.alpha, rel=1e-12, abs=1e-12)


def test_window_edges_match_brute_scan():
    Om = 3.0
    th = bifurcation_thresholds(Om, KERR)
    eps = np.linspace(0.5 * th.eps_minus, 1.5 * th.eps_plus, 600)
    counts = np.array([brute_root_count(Om, e, KERR, points=20000) for e in eps])
    inside = eps[counts == 3]
    step = eps[1] - eps[0]
    assert inside.min() == pytest.approx(th.eps_minus, abs=step)
    assert inside.max() == pytest.approx(th.eps_plus, abs=step)


def test_reference_detuning_window():
    th = bifurcation_thresholds(8.2, KERR)
    assert th is not None and th.eps_plus > th.eps_minus
    mid = 0.5 * (th.eps_plus + th.eps_minus)
    assert brute_root_count(8.2, mid, KERR, points=20000) == 3


def test_below_critical():
    assert bifurcation_thresholds(1.0, KERR) is None
    th = bifurcation_thresholds(OMEGA_C + 1e-6, KERR)
    assert th is None or (th.eps_plus - th.eps_minus) / th.eps_plus < 1e-6


def test_hysteresis_branches():
    Om = 4.0
    th = bifurcation_thresholds(Om, KERR)
    low = steady_states(Om, th.eps_plus * (1 - 1e-6), KERR)
    high = steady_states(Om, th.eps_minus * (1 + 1e-6), KERR)
    assert select_branch(low, "L").branch == "L"
    assert select_branch(high, "H").branch == "H"
    above = steady_states(Om, th.eps_plus * 1.01, KERR)
    below = steady_states(Om, th.eps_minus * 0.99, KERR)
    assert [s.branch for s in above] == ["H"]
    assert [s.branch for s in below] == ["L"]


def test_critical_point():
    cp = critical_point(KERR)
    assert cp.Omega_c == pytest.approx(math.sqrt(3), abs=1e-15)
    half = KerrParameters(KERR.omega_r, KERR.K / 2, 0.0, KERR.kappa)
    # eps_c^2 proportional to 1/|K|
    assert critical_point(half).eps_c ** 2 / cp.eps_c**2 == pytest.approx(2.0, rel=1e-12)


def test_critical_point_brute_grid():
    cp = critical_point(KERR)
    Om = np.linspace(1.70, 1.80, 201)
    onset = next(o for o in Om if is_bistable_brute(o, KERR))
    assert onset == pytest.approx(cp.Omega_c, abs=Om[1] - Om[0])


def test_critical_detuning_brute_force():
    assert brute_critical_detuning(KERR.kappa, KERR.K) == pytest.approx(math.sqrt(3), abs=1e-3)


def test_gain_linear_baseline():
    assert small_signal_gain(0.0, 1e-6 * KERR.kappa, KERR) == pytest.approx(1.0, rel=1e-6)


def test_gain_against_finite_difference():
    Om = 3.0
    th = bifurcation_thresholds(Om, KERR)
    for frac in (0.3, 0.8, 0.95):
        e = frac * th.eps_plus
        h = 1e-6 * e
        a1 = select_branch(steady_states(Om, e + h, KERR), "L").alpha
        a0 = select_branch(steady_states(Om, e - h, KERR), "L").alpha
        fd = abs(a1 - a0) / (2 * h) * KERR.kappa / 2
        assert small_signal_gain(Om, e, KERR) == pytest.approx(fd, rel=1e-5)


def test_gain_diverges_toward_threshold():
    th = bifurcation_thresholds(3.0, KERR)
    fr = np.linspace(0.5, 0.99999, 40)
    G = [small_signal_gain(3.0, f * th.eps_plus, KERR) for f in fr]
    assert np.all(np.diff(G) > 0)
    assert G[-1] > 10


def test_jpa_gain_peak():
    cp = critical_point(KERR)
    eps = np.linspace(0.2, 2.0, 400) * cp.eps_c
    G = [small_signal_gain(1.5, e, KERR) for e in eps]
    i = int(np.argmax(G))
    assert 0 < i < len(G) - 1
    assert G[i] > 2


def test_dbm_round_trip():
    wp = pump_frequency(3.0, KERR)
    P = np.array([-130.0, -100.0, -12.0, 1.0])
    eps = epsilon_from_dbm(P, wp, KERR.kappa)
    assert np.allclose(dbm_from_epsilon(eps, wp, KERR.kappa), P, atol=1e-10)


def test_junction_current():
    k = KerrParameters(TWO_PI * 6.4535e9, -1.0, 0.0, 1e7, Z0=50.0)
    assert junction_current(0.0, k) == 0.0
    assert junction_current(20.0, k) == pytest.approx(2 * junction_current(10.0, k), rel=1e-14)
    # hand value of sqrt(hbar / (pi Z0)) w_r for |alpha| = 1
    assert junction_current(1.0, k) == pytest.approx(3.322410760173526e-08, rel=1e-9)
    with pytest.raises(ValueError):
        junction_current(1.0, KERR)


def test_current_below_critical_at_bifurcation():
    I0 = 720e-9
    w1 = bare_frequency_for_loaded(TWO_PI * 6.4535e9, I0, 50.0)
    k = derive_equivalent_circuit(JunctionResonatorSpec(I0, w1, 50.0, 685.0))
    th = bifurcation_thresholds(3.0, k)
    s = select_branch(steady_states(3.0, 1.01 * th.eps_plus, k), "H")
    assert junction_current(s.alpha, k) < 0.3 * I0


def test_stability_diagram_regions():
    wp = pump_frequency(4.0, KERR)
    th = bifurcation_thresholds(4.0, KERR)
    Pm, Pp = th.powers_dbm(wp, KERR.kappa)
    rows = stability_diagram(KERR, [1.0, 4.0], [Pm - 1, 0.5 * (Pm + Pp), Pp + 1])
    regions = [r["region"] for r in rows]
    assert regions[:3] == ["mono-L"] * 3 or regions[2] == "mono-H"
    assert regions[3:] == ["mono-L", "bistable", "mono-H"]
