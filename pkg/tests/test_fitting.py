import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrsim.fitting import (FitError, damped_sine, damped_sine_fit, erf_fit, erf_step,
                             lorentzian, lorentzian_fit)


@given(st.floats(-3.0, 3.0), st.floats(0.3, 2.0), st.floats(-2.0, 2.0).filter(lambda a: abs(a) > 0.1),
       st.floats(-1.0, 1.0))
@settings(max_examples=40, deadline=None)
def test_exact_lorentzian(c, w, a, o):
    x = np.linspace(-10, 10, 201)
    f = lorentzian_fit(x, lorentzian(x, c, w, a, o))
    assert f["center"] == pytest.approx(c, abs=1e-8)
    assert f["fwhm"] == pytest.approx(w, rel=1e-8)
    assert f["amplitude"] == pytest.approx(a, rel=1e-8)
    assert f["offset"] == pytest.approx(o, abs=1e-8)


def test_exact_lorentzian_physical_scale():
    x = 2 * np.pi * np.linspace(5.60e9, 5.62e9, 101)
    c, w = 2 * np.pi * 5.611e9, 2 * np.pi * 1.3e6
    f = lorentzian_fit(x, lorentzian(x, c, w, 3e-4, 1e-6))
    assert f["center"] == pytest.approx(c, rel=1e-12)
    assert f["fwhm"] == pytest.approx(w, rel=1e-8)


@given(st.floats(-1.0, 1.0), st.floats(0.05, 1.0), st.floats(0.0, 0.2), st.floats(0.7, 1.0))
@settings(max_examples=40, deadline=None)
def test_exact_erf(c, w, lo, hi):
    x = np.linspace(-4, 4, 81)
    f = erf_fit(x, erf_step(x, c, w, lo, hi))
    assert f["center"] == pytest.approx(c, abs=1e-8)
    assert f["width"] == pytest.approx(w, rel=1e-8)
    assert f["floor"] == pytest.approx(lo, abs=1e-8)
    assert f["ceiling"] == pytest.approx(hi, abs=1e-8)


def test_noisy_lorentzian_monte_carlo():
    x = np.linspace(-10, 10, 101)
    errs = []
    for seed in range(100):
        r = np.random.default_rng(seed)
        y = lorentzian(x, 0.7, 2.0, 1.0, 0.0) + 0.01 * r.normal(size=x.size)
        errs.append(abs(lorentzian_fit(x, y)["center"] - 0.7))
    assert max(errs) < 0.02 * 2.0


def test_damped_sine():
    t = np.linspace(0, 2e-6, 120)
    y = damped_sine(t, 0.45, 2 * np.pi * 3.1e6, 0.8e-6, 0.3, 0.5)
    f = damped_sine_fit(t, y)
    assert f["freq"] == pytest.approx(2 * np.pi * 3.1e6, rel=1e-6)
    assert f["decay"] == pytest.approx(0.8e-6, rel=1e-6)
    assert f["amplitude"] == pytest.approx(0.45, rel=1e-6)
    assert f["offset"] == pytest.approx(0.5, abs=1e-8)


def test_too_few_points():
    with pytest.raises(FitError):
        lorentzian_fit(np.arange(5.0), np.arange(5.0))
