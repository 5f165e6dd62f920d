import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrsim.circuit import KerrParameters
from kerrsim.husimi import (Separatrix, auto_grid, default_separatrix, q_function,
                            separatrix_between, switching_probability)
from kerrsim.lindblad import coherent_state

NF = 60


def proj(beta, n=NF):
    c = coherent_state(beta, n)
    return np.outer(c, c.conj())


def test_vacuum_and_coherent_closed_form():
    ax = np.linspace(-3, 3, 31)
    A = ax[None, :] + 1j * ax[:, None]
    g = q_function(proj(0.0), ax, ax)
    assert np.allclose(g.q, np.exp(-np.abs(A) ** 2), atol=1e-12)
    beta = 1.2 - 0.7j
    g = q_function(proj(beta), ax, ax)
    assert np.allclose(g.q, np.exp(-np.abs(A - beta) ** 2), atol=1e-10)
    assert g.q.max() <= 1.0 + 1e-12


def test_normalization():
    rho = 0.3 * proj(2.0) + 0.7 * proj(-1j)
    re, im = auto_grid(rho, 161)
    assert q_function(rho, re, im).total() == pytest.approx(1.0, abs=1e-3)


def test_vacuum_half_split():
    assert switching_probability(proj(0.0), Separatrix(0.0, 1.0)) == pytest.approx(0.5, abs=1e-9)


@given(st.floats(1.0, 4.0), st.floats(0, 2 * np.pi))
@settings(max_examples=25, deadline=None)
def test_mirror_mixtures(r, phi):
    b = r * np.exp(1j * phi)
    sep = separatrix_between(-b, b)
    pL = switching_probability(proj(-b), sep)
    pH = switching_probability(proj(b), sep)
    assert pL + pH == pytest.approx(1.0, abs=2e-3)
    mix = 0.5 * (proj(b) + proj(-b))
    assert switching_probability(mix, sep) == pytest.approx(0.5, abs=2e-3)


def test_grid_doubling():
    rho = 0.4 * proj(2.5 + 1j) + 0.6 * proj(-0.5)
    sep = separatrix_between(-0.5, 2.5 + 1j)
    a = switching_probability(rho, sep, points=121)
    b = switching_probability(rho, sep, points=241)
    assert abs(a - b) < 0.005
    assert a == pytest.approx(0.4, abs=0.01)


def test_translation_monotone():
    rho = 0.5 * (proj(2.0) + proj(-2.0))
    sep = separatrix_between(-2.0, 2.0)
    p = [switching_probability(rho, sep.shifted(-d)) for d in np.linspace(0, 3, 7)]
    assert np.all(np.diff(p) > 0)


def test_degenerate_separatrix():
    with pytest.raises(ValueError):
        separatrix_between(1.0, 1.0)


def test_default_separatrix():
    k = KerrParameters.from_frequencies(6e9, -0.5e6, 5e6)
    from kerrsim.semiclassical import bifurcation_thresholds, steady_states
    th = bifurcation_thresholds(4.0, k)
    e = 0.5 * (th.eps_plus + th.eps_minus)
    sep = default_separatrix(k, 4.0, e)
    sols = steady_states(4.0, e, k)
    assert sep.side(sols[0].alpha) < 0 < sep.side(sols[2].alpha)
    with pytest.raises(ValueError):
        default_separatrix(k, 1.0, e)


def test_small_grid_warning():
    ax = np.linspace(-2, 2, 11)
    with pytest.warns(RuntimeWarning):
        q_function(proj(0.0), ax, ax, expected_max=3.0)
