import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from conetorsion.bessel import CROSSOVER, ive, iv


def _ive_quadrature(nu, z):
    # exp(-z) I_nu(z) from the integral representation at 80 digits (cancellation is severe at large order)
    with mp.workdps(80):
        nu, z = mp.mpf(nu), mp.mpf(z)
        first = mp.quad(lambda t: mp.exp(z * (mp.cos(t) - 1)) * mp.cos(nu * t), [0, mp.pi / 2, mp.pi]) / mp.pi
        weight = mp.sin(nu * mp.pi)
        if abs(weight) < mp.mpf(10) ** -70:
            return float(first)
        # the integrand is below exp(-100) beyond t_end
        t_end = mp.acosh(1 + 100 / z) + 1
        second = weight / mp.pi * mp.quad(lambda t: mp.exp(-z * (mp.cosh(t) + 1) - nu * t),
                                          mp.linspace(0, t_end, 8))
        return float(first - second)


POINTS = [
    (0.0, 0.01), (0.0, 1.0), (0.0, 59.0), (0.0, 61.0), (0.0, 500.0),
    (0.5, 2.0), (1.0, 0.3), (1.0, 45.0), (2.5, 10.0), (3.0, 80.0),
    (6.0, 1.0), (6.0, 60.0), (12.0, 25.0), (12.0, 200.0), (20.0, 55.0),
    (30.0, 40.0), (45.0, 45.0), (60.0, 5.0), (90.0, 120.0), (150.0, 140.0),
]


@pytest.mark.parametrize("nu,z", POINTS)
def test_against_integral_representation(nu, z):
    exact = _ive_quadrature(nu, z)
    assert float(ive(nu, z)) == pytest.approx(exact, rel=1e-10)


def test_points_straddle_crossover():
    radii = [np.hypot(nu, z) for nu, z in POINTS]
    assert min(radii) < CROSSOVER < max(radii)


def test_origin_values():
    assert float(ive(0.0, 0.0)) == 1.0
    assert float(ive(2.0, 0.0)) == 0.0


def test_negative_input_rejected():
    with pytest.raises(ValueError):
        ive(-1.0, 1.0)
    with pytest.raises(ValueError):
        ive(1.0, -1.0)


def test_unscaled_small_argument():
    assert float(iv(1.0, 0.5)) == pytest.approx(special.iv(1.0, 0.5), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(nu=st.floats(0.0, 150.0), z=st.floats(1e-6, 1e3))
def test_agrees_with_reference_library(nu, z):
    ref = special.ive(nu, z)
    if ref > 1e-280:
        assert float(ive(nu, z)) == pytest.approx(ref, rel=1e-11)


@settings(max_examples=100, deadline=None)
@given(nu=st.floats(1.0, 100.0), z=st.floats(0.01, 500.0))
def test_recurrence(nu, z):
    # I_{nu-1} - I_{nu+1} = (2 nu / z) I_nu
    a, b, c = (float(ive(v, z)) for v in (nu - 1, nu + 1, nu))
    assert a - b == pytest.approx(2 * nu / z * c, rel=1e-9, abs=1e-290)
