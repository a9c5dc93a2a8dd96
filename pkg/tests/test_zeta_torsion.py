import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conetorsion.zeta_torsion import (
    CONVENTION, FitError, TorsionReport, ZetaError, ZetaPole, ZetaSeries, circle_series, torsion_weight,
    fit_small_time, gamma, residue_check, richardson_limit, rgamma, spectral_zeta, torsion, trace_grid,
    zeta_at_zero, zeta_prime_at_zero,
)

LOG_2PI = math.log(2 * math.pi)


# --- gamma ---------------------------------------------------------------------

def test_gamma_special_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert rgamma(0.0) == 0
    assert rgamma(-3.0) == 0


@settings(max_examples=150, deadline=None)
@given(x=st.floats(-4.9, 6.0), y=st.floats(-3.0, 3.0))
def test_gamma_against_reference(x, y):
    z = complex(x, y)
    if min(abs(z + n) for n in range(6)) < 1e-3:
        return
    ref = complex(mp.gamma(mp.mpc(x, y)))
    assert abs(complex(gamma(z)) - ref) <= 1e-13 * abs(ref)


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-4.9, 6.0))
def test_gamma_functional_equation(x):
    if min(abs(x + n) for n in range(7)) < 1e-3:
        return
    assert complex(gamma(x + 1)) == pytest.approx(x * complex(gamma(x)), rel=1e-13)


# --- zeta values -------------------------------------------------------------

def test_circle_zeta_at_two():
    s = ZetaSeries.lattice(1.0, 2, 1000)
    assert spectral_zeta(s, 2).real == pytest.approx(2 * math.pi**4 / 90, rel=1e-13)
    assert spectral_zeta(s, 2).real == pytest.approx(2.16465, abs=5e-6)


def test_circle_zeta_at_zero():
    s = ZetaSeries.lattice(1.0, 2, 1000)
    assert spectral_zeta(s, 0).real == pytest.approx(-1.0, abs=1e-14)
    assert zeta_at_zero(s) == -1.0


def test_single_eigenvalue():
    s = ZetaSeries.finite([(4.0, 1)], dim=1)
    assert spectral_zeta(s, 1).real == pytest.approx(0.25, rel=1e-15)


def test_circle_derivative():
    s = ZetaSeries.lattice(1.0, 2, 1000)
    assert zeta_prime_at_zero(s) == pytest.approx(-2 * LOG_2PI, rel=1e-14)
    assert zeta_prime_at_zero(s) == pytest.approx(-3.6757541, abs=1e-7)


def test_doubled_circle_derivative_both_paths():
    s = ZetaSeries.lattice(4.0, 2, 2000)
    assert zeta_prime_at_zero(s) == pytest.approx(-2 * math.log(math.pi), rel=1e-14)
    assert zeta_prime_at_zero(s.as_mellin()) == pytest.approx(-2 * math.log(math.pi), abs=1e-6)


@pytest.mark.parametrize("scale", [1.0, 0.25, 9.0])
def test_mellin_matches_closed_form(scale):
    lat = ZetaSeries.lattice(scale, 2, 2000)
    mel = lat.as_mellin()
    assert zeta_at_zero(mel) == pytest.approx(zeta_at_zero(lat), abs=1e-6)
    assert zeta_prime_at_zero(mel) == pytest.approx(zeta_prime_at_zero(lat), abs=1e-6)
    for s in (2.0, 1.5 + 0.5j, -0.5):
        assert abs(spectral_zeta(mel, s) - spectral_zeta(lat, s)) < 1e-6 * max(1, abs(spectral_zeta(lat, s)))


def test_pole_reports_residue():
    s = ZetaSeries.lattice(4.0, 2, 100)
    with pytest.raises(ZetaPole) as err:
        spectral_zeta(s, 0.5)
    # weight * scale^-s * zeta_R(2s) has residue weight / (2 sqrt(scale)) at s = 1/2
    assert err.value.residue == pytest.approx(0.5)


def test_series_rejects_nonpositive_eigenvalues():
    with pytest.raises(ZetaError):
        ZetaSeries(np.array([0.0, 1.0]), np.array([1.0, 1.0]), 1, 1.0)


def test_harmonic_modes_dropped_at_construction():
    s = ZetaSeries.from_pairs([(0.0, 1), (1.0, 2), (4.0, 2)], dim=1)
    assert s.eigenvalues.tolist() == [1.0, 4.0]


def test_empty_series():
    s = ZetaSeries.from_pairs([(0.0, 1)], dim=2)
    assert spectral_zeta(s, 0.3) == 0
    assert zeta_prime_at_zero(s) == 0.0


@settings(max_examples=40, deadline=None)
@given(c=st.floats(0.01, 100.0), w=st.integers(1, 6), scale=st.floats(0.1, 10.0))
def test_scaling_law(c, w, scale):
    s = ZetaSeries.lattice(scale, w, 50)
    shifted = zeta_prime_at_zero(s.scaled(c))
    assert shifted == pytest.approx(zeta_prime_at_zero(s) - math.log(c) * zeta_at_zero(s), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(lams=st.lists(st.floats(0.1, 50.0), min_size=1, max_size=8), c=st.floats(0.1, 10.0))
def test_scaling_law_finite_spectra(lams, c):
    s = ZetaSeries.finite([(x, 1) for x in lams], dim=1)
    assert zeta_prime_at_zero(s.scaled(c)) == pytest.approx(
        zeta_prime_at_zero(s) - math.log(c) * zeta_at_zero(s), abs=1e-10)


# --- torsion -------------------------------------------------------------------

def test_torsion_weights():
    assert [torsion_weight(i) for i in range(4)] == [0, 1, -2, 3]


@pytest.mark.parametrize("k", [1, 2, 5])
def test_circle_torsion(k):
    L = 2 * math.pi / k
    rep = torsion(circle_series(L))
    assert rep.convention == CONVENTION
    assert rep.log_torsion == pytest.approx(-math.log(L), abs=1e-12)
    assert rep.torsion == pytest.approx(1 / L, rel=1e-12)


def test_single_degree_one_convention():
    s = ZetaSeries.lattice(1.0, 2, 100)
    rep = torsion({1: s})
    assert rep.log_torsion == pytest.approx(0.5 * zeta_prime_at_zero(s), rel=1e-15)


def test_poincare_pairing_cancels():
    base = ZetaSeries.finite([(1.0, 2), (3.0, 1), (7.5, 4)], dim=2)
    double = ZetaSeries.finite([(1.0, 4), (3.0, 2), (7.5, 8)], dim=2)
    rep = torsion({0: base, 1: double, 2: base})
    assert rep.weighted_zeta_prime == pytest.approx(0.0, abs=1e-14)
    assert rep.torsion == pytest.approx(1.0, abs=1e-14)


def test_inconsistent_dimensions_rejected():
    with pytest.raises(ZetaError):
        torsion({0: ZetaSeries.lattice(1.0, 2, 10, dim=1), 1: ZetaSeries.lattice(1.0, 2, 10, dim=2)})


def test_report_consistency_enforced():
    with pytest.raises(ZetaError):
        TorsionReport(CONVENTION, {}, 2.0, 0.3, math.exp(0.3))


def test_report_json_records_convention():
    data = json.loads(json.dumps(torsion(circle_series(3.0)).to_json_dict()))
    assert data["convention"] == CONVENTION
    assert set(data["zeta_prime"]) == {"0", "1"}
    assert data["provenance"]


# --- small-time fits and residues ----------------------------------------------

def test_fit_recovers_known_expansion():
    t = np.geomspace(1e-3, 1e-1, 64)
    trace = 2 / t + 0.5 / np.sqrt(t) - 1 / 3 + 0.1 * t
    fit = fit_small_time(t, trace, dim=2)
    coeffs = dict(zip(fit.exponents, fit.coefficients))
    assert coeffs[-1.0] == pytest.approx(2.0, rel=1e-9)
    assert coeffs[0.0] == pytest.approx(-1 / 3, rel=1e-8)


def test_ill_conditioned_fit_reported():
    t = np.geomspace(1e-3, 1e-1, 64)
    with pytest.raises(FitError) as err:
        fit_small_time(t, 1 / t, dim=2, terms=40, max_condition=1e6)
    assert err.value.condition > 1e6


def test_residue_recovers_log_term():
    t = trace_grid()
    fit = residue_check(t, {1: 1 / np.sqrt(t) + 0.3 * np.log(t) + 2}, dim=2, weights={1: 1})
    assert fit.log_coefficient == pytest.approx(0.3, abs=1e-10)
    assert not fit.passed


def test_circle_has_no_log_term():
    t = trace_grid()
    series = circle_series(2 * math.pi)
    fit = residue_check(t, {i: s.trace(t) for i, s in series.items()}, dim=1, weights={1: 1})
    assert abs(fit.log_coefficient) < 1e-6
    assert fit.passed


def test_richardson_geometric_sequence():
    vals = [1 + 0.5**n for n in (4, 5, 6)]
    assert richardson_limit(vals) == pytest.approx(1.0, abs=1e-15)
    assert richardson_limit([1.0, 2.0]) == 2.0
