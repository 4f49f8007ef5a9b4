import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitdecoherence.constants import HBAR
from slitdecoherence.montecarlo import (
    McConfig,
    Moments,
    compare_to_closed_form,
    contrast_points,
    estimate_F,
    estimate_fringe_contrast,
    estimate_pattern,
    pairwise_reduce,
)
from slitdecoherence.spectrum import C70
from slitdecoherence.visibility import ExperimentConfig, fringe_pattern, visibility_closed_form

NARROW_SLIT = HBAR / (2 * 5e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(0, 1)
    with pytest.raises(ValueError):
        McConfig(10, -1)
    with pytest.raises(ValueError):
        McConfig(10, 1, batch_size=0)
    assert McConfig(100, 1, batch_size=1000).batch_size == 100
    assert McConfig(25_001, 1).batches()[-1] == (2, 5001)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=200), st.integers(1, 7))
@settings(max_examples=50, deadline=None)
def test_moments_merge_matches_direct(values, parts):
    data = np.array(values)
    chunks = [c for c in np.array_split(data, parts) if c.size]
    merged = pairwise_reduce([Moments.of(c) for c in chunks])
    direct = Moments.of(data)
    assert merged.n == direct.n
    np.testing.assert_allclose(merged.mean, direct.mean, rtol=1e-10, atol=1e-9)
    np.testing.assert_allclose(merged.m2, direct.m2, rtol=1e-8, atol=1e-6)


def test_zero_kick_regime_is_exact():
    for cfg in (ExperimentConfig(C70, 1e-3, 1e-6, 5e-3), ExperimentConfig(C70, 2000.0, 1e-6, 0.0)):
        est = estimate_F(cfg, McConfig(2000, 1))
        assert est.f_real == 1.0 and est.std_error == 0.0 and est.f_imag == 0.0
        cmp = compare_to_closed_form(cfg, McConfig(2000, 1))
        assert cmp.pull == 0.0 and not cmp.flagged


def test_estimate_matches_closed_form_and_imaginary_vanishes():
    cfg = ExperimentConfig(C70, 2000.0, 1e-6, 5e-3)
    est = estimate_F(cfg, McConfig(10**5, 42))
    exact = visibility_closed_form(cfg).visibility
    assert abs(est.visibility_hat - exact) <= 3 * est.std_error
    assert abs(est.f_imag) <= 3 * est.std_error_imag
    assert abs(est.f_real) <= 1 + 3 * est.std_error
    assert est.std_error > 0 and est.n_used == 10**5


def test_two_seeds_give_different_pulls():
    cfg = ExperimentConfig(C70, 2200.0, 5e-7, 6e-3)
    a = compare_to_closed_form(cfg, McConfig(10**5, 1))
    b = compare_to_closed_form(cfg, McConfig(10**5, 2))
    assert a.pull != b.pull
    assert abs(a.pull) <= 4 and abs(b.pull) <= 4
    assert not a.flagged and not b.flagged


def test_bit_identical_rerun_and_thread_invariance():
    cfg = ExperimentConfig(C70, 2500.0, 3e-7, 3e-3)
    mc = McConfig(50_000, 7, batch_size=4096)
    serial = estimate_F(cfg, mc, threads=1)
    assert estimate_F(cfg, mc, threads=1) == serial
    assert estimate_F(cfg, mc, threads=8) == serial


def test_standard_error_scaling():
    cfg = ExperimentConfig(C70, 2000.0, 1e-6, 5e-3)
    ns = [10**3, 10**4, 10**5]
    se = [estimate_F(cfg, McConfig(n, 5)).std_error for n in ns]
    slope = np.polyfit(np.log(ns), np.log(se), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.05)


def test_zero_kick_pattern_matches_closed_form():
    cfg = ExperimentConfig(C70, 1e-3, 1e-6, 10e-3)
    x = np.linspace(-10e-6, 10e-6, 81)
    emp = estimate_pattern(cfg, McConfig(1000, 3), x)
    ref = fringe_pattern(cfg, visibility_closed_form(cfg), x)
    np.testing.assert_allclose(emp.intensity, ref.intensity, rtol=1e-12, atol=1e-12 * ref.intensity.max())
    # identical samples: only rounding noise in the spread
    assert np.all(emp.std_error <= 1e-12 * ref.intensity.max())


def test_pattern_symmetric_and_nonnegative():
    cfg = ExperimentConfig(C70, 2000.0, 1e-6, 10e-3)
    x = np.linspace(-8e-6, 8e-6, 33)
    pat = estimate_pattern(cfg, McConfig(20_000, 17), x)
    assert np.all(pat.intensity >= 0)
    se = np.hypot(pat.std_error, pat.std_error[::-1])
    pulls = np.abs(pat.intensity - pat.intensity[::-1])[se > 0] / se[se > 0]
    assert np.all(pulls <= 4)


def test_contrast_points_spacing():
    cfg = ExperimentConfig(C70, 2000.0, 1e-6, 10e-3)
    maxima, minima = contrast_points(cfg, 2)
    assert maxima.size == 5 and minima.size == 4
    assert maxima[2] == 0.0
    np.testing.assert_allclose(np.diff(maxima), 4.7503722759850e-6, rtol=1e-10)


@pytest.mark.parametrize("T", [2000.0, 2200.0])
def test_pattern_contrast_matches_closed_form(T):
    cfg = ExperimentConfig(C70, T, 1e-6, 5e-3, slit_width_momentum=NARROW_SLIT)
    v, se = estimate_fringe_contrast(cfg, McConfig(10**5, 2024))
    exact = visibility_closed_form(cfg).visibility
    assert abs(v - exact) <= 3 * se


def test_pattern_and_F_routes_agree():
    cfg = ExperimentConfig(C70, 2000.0, 1e-6, 5e-3, slit_width_momentum=NARROW_SLIT)
    v_pat, se_pat = estimate_fringe_contrast(cfg, McConfig(10**5, 9))
    est = estimate_F(cfg, McConfig(10**5, 10))
    assert abs(v_pat - est.visibility_hat) <= 3 * math.hypot(se_pat, est.std_error)
