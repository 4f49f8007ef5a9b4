import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

import oracles
from slitdecoherence.numerics import SeriesDivergenceWarning
from slitdecoherence.spectrum import (
    C60,
    C70,
    EmissionSpectrum,
    MoleculeParams,
    emission_rate_density,
    get_preset,
    rate_scale,
    rate_series_coefficient,
    sample_frequency,
    sample_reduced_frequency,
    total_rate_quadrature,
    total_rate_series,
)

# Frozen oracle values (independent fixed-rule quadrature, confirmed at 40 digits).
RATE_C60_1000K = 3.2194264635550463
ACCEPTANCE = {170: 0.854603470627737526, 200: 0.874193580521969313}
MEAN_X = {170: 6.69977554775552853, 200: 6.74144896991617157}

INFINITE = dataclasses.replace(C70, name="C70-inf", n_modes=math.inf)


def test_presets():
    assert get_preset("c70") is C70
    assert C60.n_modes == 170 and C70.n_modes == 200
    assert C70.mass == pytest.approx(840 * 1.66053906660e-27)
    with pytest.raises(KeyError):
        get_preset("C84")


@pytest.mark.parametrize(
    "kwargs",
    [dict(n_modes=0.5), dict(ell=0), dict(ell=2.5), dict(a_ell=0.0), dict(mass=-1.0)],
)
def test_molecule_validation(kwargs):
    with pytest.raises(ValueError):
        dataclasses.replace(C60, **kwargs)


def test_photon_count_c70_2500K():
    photons = total_rate_quadrature(C70, 2500.0) * 2e-3
    assert 3.5 <= photons <= 5.5


def test_rate_matches_frozen_oracle():
    assert total_rate_quadrature(C60, 1000.0) == pytest.approx(RATE_C60_1000K, rel=1e-9)


def test_rate_matches_live_oracle():
    ref = oracles.total_rate(C70, 2500.0)
    assert total_rate_quadrature(C70, 2500.0) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("T", [300.0, 2500.0])
def test_infinite_modes_is_gamma_integral(T):
    expected = rate_scale(INFINITE, T) * math.factorial(INFINITE.ell + 2)
    assert total_rate_quadrature(INFINITE, T) == pytest.approx(expected, rel=1e-10)
    res = total_rate_series(INFINITE, T)
    assert res.value == expected
    assert res.last_index == 0


def test_first_series_correction_ratio():
    mol = dataclasses.replace(C60, n_modes=170)
    ratio = rate_series_coefficient(mol, 1) / rate_series_coefficient(mol, 0)
    assert ratio == pytest.approx(-56 / 340, rel=1e-15)


@pytest.mark.parametrize("mol", [C60, C70])
@pytest.mark.parametrize("T", [500.0, 1000.0, 2000.0, 3000.0, 5000.0])
def test_series_agrees_with_quadrature(mol, T):
    with warnings.catch_warnings():
        warnings.simplefilter("error", SeriesDivergenceWarning)
        res = total_rate_series(mol, T)
    assert res.value == pytest.approx(total_rate_quadrature(mol, T), rel=1e-6)
    assert not res.diverging
    assert abs(res.last_term) <= abs(rate_series_coefficient(mol, 0)) * rate_scale(mol, T)


@pytest.mark.parametrize("n_modes", [100, 500, 5000])
def test_series_large_n(n_modes):
    mol = dataclasses.replace(C60, n_modes=n_modes)
    assert total_rate_series(mol, 5000.0).value == pytest.approx(total_rate_quadrature(mol, 5000.0), rel=1e-6)


def test_series_rejects_small_n_and_warns_at_edge():
    with pytest.raises(ValueError):
        total_rate_series(dataclasses.replace(C60, n_modes=5), 1000.0)
    with pytest.warns(SeriesDivergenceWarning):
        total_rate_series(dataclasses.replace(C60, n_modes=10, ell=8), 1000.0)


def test_rate_strictly_increasing():
    Ts = np.geomspace(10.0, 5000.0, 40)
    rates = [total_rate_quadrature(C60, T) for T in Ts]
    assert all(b > a for a, b in zip(rates, rates[1:]))


def test_rate_tiny_temperature_underflows_gracefully():
    assert 0.0 <= total_rate_quadrature(C70, 1.0) < 1e-10


@given(st.floats(min_value=50.0, max_value=5000.0))
@settings(max_examples=25, deadline=None)
def test_rate_linear_in_a_ell(T):
    doubled = dataclasses.replace(C60, a_ell=2 * C60.a_ell)
    assert total_rate_quadrature(doubled, T) == pytest.approx(2 * total_rate_quadrature(C60, T), rel=1e-12)


def test_rate_bad_args():
    with pytest.raises(ValueError):
        total_rate_quadrature(C60, 0.0)
    with pytest.raises(ValueError):
        total_rate_quadrature(C60, 1000.0, tol=1.5)


@given(st.floats(min_value=0.0, max_value=1e16))
def test_density_nonnegative(omega):
    spec = EmissionSpectrum.at(C70, 1500.0)
    assert emission_rate_density(spec, omega) >= 0.0


def test_density_matches_oracle_law():
    spec = EmissionSpectrum.at(C60, 1800.0)
    w = np.linspace(1e12, 3e15, 50)
    ref = oracles.emission_rate(w, C60.n_modes, C60.ell, C60.a_ell, 1800.0)
    np.testing.assert_allclose(emission_rate_density(spec, w), ref, rtol=1e-13)


def test_sampler_nonnegative_and_deterministic():
    spec = EmissionSpectrum.at(C60, 2000.0)
    a = sample_frequency(spec, np.random.default_rng(5), 1000)
    b = sample_frequency(spec, np.random.default_rng(5), 1000)
    assert np.all(a >= 0)
    np.testing.assert_array_equal(a, b)
    assert isinstance(sample_frequency(spec, np.random.default_rng(1)), float)


def test_sampler_infinite_modes_mean(rng):
    spec = EmissionSpectrum.at(INFINITE, 2000.0)
    x = sample_reduced_frequency(spec, rng, 10**6)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - (INFINITE.ell + 3)) <= 3 * se


@pytest.mark.parametrize("mol", [C60, C70])
def test_sampler_mean_matches_quadrature(mol, rng):
    spec = EmissionSpectrum.at(mol, 2500.0)
    x = sample_reduced_frequency(spec, rng, 10**6)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - MEAN_X[mol.n_modes]) <= 3 * se


@pytest.mark.parametrize("mol", [C60, C70])
def test_acceptance_rate(mol):
    spec = EmissionSpectrum.at(mol, 2500.0)
    assert spec.acceptance == pytest.approx(ACCEPTANCE[mol.n_modes], rel=1e-9)
    # empirical thinning rate of raw Gamma proposals
    rng = np.random.default_rng(99)
    n = 10**6
    x = rng.gamma(mol.ell + 3, size=n)
    kept = rng.random(n) < np.exp(-x * x / (2 * mol.n_modes))
    p = ACCEPTANCE[mol.n_modes]
    assert abs(kept.mean() - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_sampler_ks_against_density_oracle(rng):
    spec = EmissionSpectrum.at(C60, 2500.0)
    x = sample_reduced_frequency(spec, rng, 10**6)
    grid, cdf = oracles.reduced_cdf_table(C60.n_modes, C60.ell)
    res = stats.kstest(x, lambda v: np.interp(v, grid, cdf))
    assert res.statistic < oracles.ks_critical_1pct(x.size)


def test_spectrum_rejects_nonpositive_temperature():
    with pytest.raises(ValueError):
        EmissionSpectrum(C60, 0.0, 1.0)


def test_custom_molecule():
    mol = MoleculeParams("toy", n_modes=50, ell=3, a_ell=1e-80, mass=1e-24)
    T = 1200.0
    ref = oracles.total_rate(mol, T)
    assert total_rate_quadrature(mol, T) == pytest.approx(ref, rel=1e-9)
