import math

import numpy as np
import pytest
from scipy import special

from conetorsion.spindle import (
    bessel_roots, conical_spectrum, doubled_area, heat_constant, invariant_dimension, orbifold_spectrum,
)
from conetorsion.zeta_torsion import fit_small_time


@pytest.mark.parametrize("nu", [0, 1, 4, 13])
@pytest.mark.parametrize("derivative", [0, 1])
def test_roots_match_reference_tables(nu, derivative):
    ours = bessel_roots(float(nu), 60.0, derivative)
    table = (special.jn_zeros if derivative == 0 else special.jnp_zeros)(nu, 40)
    table = table[(table > 0) & (table <= 60.0)]
    np.testing.assert_allclose(ours, table, rtol=1e-13)


def test_roots_for_fractional_order():
    roots = bessel_roots(2.5, 40.0)
    assert np.max(np.abs(special.jv(2.5, roots))) < 1e-13
    assert len(roots) == len(bessel_roots(2.5, 40.0, step=0.05))


def test_no_roots_below_order():
    assert bessel_roots(30.0, 25.0).size == 0


@pytest.mark.parametrize("n,k,dim", [(0, 3, 1), (3, 3, 2), (2, 3, 0), (1, 1, 2), (4, 2, 2), (5, 2, 0)])
def test_invariant_dimension(n, k, dim):
    assert invariant_dimension(n, k) == dim


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_routes_agree(k):
    a = conical_spectrum(k, 1.0, 2000.0)
    b = orbifold_spectrum(k, 1.0, 2000.0)
    for i in range(3):
        # compare as multisets; near-degenerate values may interleave differently
        la, lb = (np.sort(np.repeat(*spec.degrees[i])) for spec in (a, b))
        np.testing.assert_allclose(la, lb, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_kernel_dimensions(k):
    assert conical_spectrum(k, 1.0, 500.0).kernel_dims() == (1, 0, 1)
    assert orbifold_spectrum(k, 1.0, 500.0).kernel_dims() == (1, 0, 1)


def test_radius_scales_eigenvalues():
    a = orbifold_spectrum(2, 1.0, 400.0).degrees[0][0]
    b = orbifold_spectrum(2, 2.0, 100.0).degrees[0][0]
    np.testing.assert_allclose(a, 4 * b, rtol=1e-13)


def test_degree_one_is_union_of_neighbours():
    s = conical_spectrum(3, 1.0, 1000.0)
    (l0, m0), (l1, m1), (l2, m2) = (s.degrees[i] for i in range(3))
    assert m1.sum() == m0[l0 > 0].sum() + m2[l2 > 0].sum()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_heat_coefficients(k):
    # full function trace on the doubled cone: area/(4 pi t) + constant, no boundary term
    cutoff = 2e5
    lam, mult = orbifold_spectrum(k, 1.0, cutoff).degrees[0]
    tau = 30.0 / cutoff
    t = tau * np.logspace(0, 1.5, 64)
    trace = np.array([math.fsum(mult * np.exp(-lam * tt)) for tt in t])
    fit = fit_small_time(t, trace, dim=2)
    coeffs = dict(zip(fit.exponents, fit.coefficients))
    assert coeffs[-1.0] == pytest.approx(doubled_area(k) / (4 * math.pi), rel=1e-7)
    assert coeffs.get(-0.5, 0.0) == pytest.approx(0.0, abs=1e-6)
    assert coeffs[0.0] == pytest.approx(heat_constant(k), abs=1e-5)


@pytest.mark.parametrize("args", [(0, 1.0, 10.0), (2, -1.0, 10.0), (2, 1.0, 0.0), (1.5, 1.0, 10.0)])
def test_bad_arguments(args):
    with pytest.raises(ValueError):
        conical_spectrum(*args)
    with pytest.raises(ValueError):
        orbifold_spectrum(*args)
