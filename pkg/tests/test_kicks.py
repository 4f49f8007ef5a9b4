import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

import oracles
from slitdecoherence.constants import C_LIGHT, HBAR, K_B
from slitdecoherence.kicks import (
    KickLaw,
    KickTrajectory,
    characteristic_function,
    mean_photon_number,
    momentum_rms,
    one_minus_characteristic,
    read_trajectories,
    sample_kick,
    sample_trajectory,
    w_density,
    write_trajectories,
    zeta_factor,
)
from slitdecoherence.numerics import one_minus_sinc, sinc
from slitdecoherence.spectrum import C70, sample_frequency

MEAN_X_C70 = 6.74144896991617157


def test_w_symmetric_and_monotone(c70_law):
    scale = c70_law.momentum_scale
    ys = np.linspace(0.0, 30.0, 61)
    vals = [w_density(c70_law, y * scale) for y in ys]
    for y, v in zip(ys, vals):
        assert w_density(c70_law, -y * scale) == v
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert w_density(c70_law, 1e3 * scale) == 0.0


def test_w_normalized(c70_law):
    _, half = oracles.kick_cdf_table(c70_law)
    assert 2 * half[-1] == pytest.approx(1.0, abs=1e-8)


def test_characteristic_limits(c70_law):
    assert characteristic_function(c70_law, 0.0) == 1.0
    xs = np.linspace(0.0, 5e-6, 41)
    vals = [characteristic_function(c70_law, x) for x in xs]
    assert all(abs(v) <= 1.0 for v in vals)
    assert characteristic_function(c70_law, -1e-6) == characteristic_function(c70_law, 1e-6)


@given(st.floats(min_value=-1e-4, max_value=1e-4))
@settings(max_examples=30, deadline=None)
def test_characteristic_bounded(x):
    law = KickLaw.at(C70, 2500.0)
    assert abs(characteristic_function(law, x)) <= 1.0
    assert one_minus_characteristic(law, x) >= 0.0


def test_characteristic_decays(c70_law):
    d_typ = HBAR * C_LIGHT / (K_B * 2500.0)
    xs = np.linspace(d_typ, 10 * d_typ, 20)
    env = [abs(characteristic_function(c70_law, x)) for x in xs]
    assert all(b < a for a, b in zip(env, env[1:]))
    assert env[-1] < 0.01


def test_characteristic_sampling_oracle(c70_law):
    rng = np.random.default_rng(2718)
    omega = sample_frequency(c70_law.spectrum, rng, 10**6)
    x = 1e-6
    s = sinc(omega * x / C_LIGHT)
    se = s.std(ddof=1) / math.sqrt(s.size)
    assert abs(s.mean() - characteristic_function(c70_law, x)) <= 3 * se


def test_zeta_sampling_oracle(c70_law):
    rng = np.random.default_rng(31415)
    d = 1e-6
    dp = sample_kick(c70_law, rng, 10**6)
    s = one_minus_sinc(d * dp / HBAR)
    se = s.std(ddof=1) / math.sqrt(s.size)
    assert abs(s.mean() - zeta_factor(c70_law, d)) <= 3 * se


def test_zeta_properties(c70_law):
    assert zeta_factor(c70_law, 0.0) == 0.0
    ds = np.geomspace(1e-9, 1e-5, 15)
    z = [zeta_factor(c70_law, d) for d in ds]
    assert all(0.0 <= v <= 2.0 for v in z)
    assert all(b >= a for a, b in zip(z, z[1:]))
    with pytest.raises(ValueError):
        zeta_factor(c70_law, -1e-6)


def test_kick_sign_balance_and_mean_abs(c70_law):
    rng = np.random.default_rng(11)
    dp = sample_kick(c70_law, rng, 10**6)
    sign = np.sign(dp)
    assert abs(sign.mean()) <= 3 * sign.std(ddof=1) / math.sqrt(dp.size)
    target = 0.5 * c70_law.momentum_scale * MEAN_X_C70  # hbar <omega> / 2c
    a = np.abs(dp)
    assert abs(a.mean() - target) <= 3 * a.std(ddof=1) / math.sqrt(a.size)


def test_kick_rms(c70_law):
    rng = np.random.default_rng(12)
    dp = sample_kick(c70_law, rng, 10**6)
    sq = dp**2
    rms = momentum_rms(c70_law)
    assert abs(sq.mean() - rms**2) <= 3 * sq.std(ddof=1) / math.sqrt(sq.size)


def test_kick_ks_against_w_density(c70_law):
    cdf = oracles.symmetric_kick_cdf(c70_law)
    dp = sample_kick(c70_law, np.random.default_rng(77), 10**6)
    assert stats.kstest(dp, cdf).statistic < oracles.ks_critical_1pct(dp.size)


def test_sampling_deterministic(c70_law):
    a = sample_kick(c70_law, np.random.default_rng(3), 100)
    b = sample_kick(c70_law, np.random.default_rng(3), 100)
    np.testing.assert_array_equal(a, b)
    ta = sample_trajectory(c70_law, 5e-3, np.random.default_rng(4))
    tb = sample_trajectory(c70_law, 5e-3, np.random.default_rng(4))
    np.testing.assert_array_equal(ta.jumps, tb.jumps)
    np.testing.assert_array_equal(ta.event_times, tb.event_times)


def test_trajectory_zero_time(c70_law, rng):
    tr = sample_trajectory(c70_law, 0.0, rng)
    assert tr.n == 0 and tr.weighted_kick() == 0.0


def test_trajectory_count_and_times(c70_law):
    rng = np.random.default_rng(2024)
    t = 2e-3
    trajs = [sample_trajectory(c70_law, t, rng) for _ in range(10**5)]
    counts = np.array([tr.n for tr in trajs])
    mean = mean_photon_number(c70_law, t)
    assert abs(counts.mean() - mean) <= 3 * math.sqrt(mean / counts.size)
    times = np.concatenate([tr.event_times for tr in trajs])
    assert stats.kstest(times, stats.uniform(0.0, t).cdf).statistic < oracles.ks_critical_1pct(times.size)
    for tr in trajs[:200]:
        assert np.all(np.diff(tr.event_times) >= 0)
        assert np.all((tr.weights >= 0) & (tr.weights <= 1))


def test_trajectory_validation():
    with pytest.raises(ValueError):
        KickTrajectory(1.0, [0.5, 0.2], [1.0, 2.0])
    with pytest.raises(ValueError):
        KickTrajectory(1.0, [0.5], [1.0, 2.0])
    with pytest.raises(ValueError):
        KickTrajectory(1.0, [1.5], [1.0])


def test_trajectory_dump_round_trip(tmp_path, c70_law):
    rng = np.random.default_rng(8)
    trajs = [sample_trajectory(c70_law, 3e-3, rng) for _ in range(50)]
    path = tmp_path / "traj.txt"
    write_trajectories(path, trajs)
    back = read_trajectories(path)
    assert len(back) == 50
    for a, b in zip(trajs, back):
        np.testing.assert_array_equal(a.event_times, b.event_times)
        np.testing.assert_array_equal(a.jumps, b.jumps)
        assert a.weighted_kick() == b.weighted_kick()
    first = path.read_text().splitlines()[1].split()
    assert int(first[0]) == trajs[0].n and len(first) == 1 + 2 * trajs[0].n


def test_kick_law_rejects_zero_rate(c70_2500):
    with pytest.raises(ValueError):
        KickLaw(c70_2500, 0.0)


@pytest.mark.parametrize("y", [0.3, 1.0, 3.0])
def test_oscillatory_branch_agrees(monkeypatch, y):
    import slitdecoherence.kicks as kicks

    monkeypatch.setattr(kicks, "OSCILLATORY_SWITCH", math.inf)
    direct = kicks._one_minus_f_reduced(C70, y, 1e-12)
    monkeypatch.setattr(kicks, "OSCILLATORY_SWITCH", 0.0)
    weighted = kicks._one_minus_f_reduced(C70, y, 1e-12)
    assert weighted == pytest.approx(direct, rel=1e-11)
