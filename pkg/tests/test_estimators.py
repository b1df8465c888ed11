import math

import numpy as np
import pytest

from ergoprobe import dynamics, estimators, linalg, models
from ergoprobe.dynamics import TimeSeries


def _synthetic(gamma=0.1, o_de=0.2, o_free=1.0, t_end=None, n=4001, noise=0.0, seed=0):
    t_end = t_end or 10.0 / gamma
    t = np.linspace(0.0, t_end, n)
    y = o_de + (o_free - o_de) * np.exp(-2 * gamma * t)
    if noise:
        y = y + noise * (o_free - o_de) * np.random.default_rng(seed).standard_normal(n)
    return TimeSeries(t, y)


def test_fit_decay_rate_clean():
    f = estimators.fit_decay_rate(_synthetic(), 0.2)
    assert f.ok and f["reached_threshold"]
    assert f["gamma"] == pytest.approx(0.1, rel=1e-6)
    assert f["amplitude"] == pytest.approx(0.8, rel=1e-6)
    # window stops at the first sample below 10% of the initial deviation
    assert f["t_window"] == pytest.approx(math.log(10) / 0.2, abs=0.03)


def test_fit_decay_rate_noisy():
    f = estimators.fit_decay_rate(_synthetic(noise=0.01), 0.2)
    assert f.ok
    assert f["gamma"] == pytest.approx(0.1, rel=0.05)


def test_fit_decay_rate_flags_constant():
    s = TimeSeries(np.linspace(0, 10, 50), np.full(50, 0.7))
    assert not estimators.fit_decay_rate(s, 0.7).ok
    grow = TimeSeries(np.linspace(0, 10, 50), 1 + np.linspace(0, 1, 50))
    assert not estimators.fit_decay_rate(grow, 0.0).ok


def test_integral_inverse_gamma_pure_exponential():
    # 2 int_0^T e^{-2 g t} dt = (1 - e^{-2 g T}) / g
    s = _synthetic(t_end=50.0, n=20001)
    assert estimators.integral_inverse_gamma(s, 1.0, 0.2) == pytest.approx((1 - math.exp(-10)) / 0.1, rel=1e-6)


def test_integral_inverse_gamma_two_rates():
    # equal-weight mixture of rates 0.1 and 0.3 averages the inverse rate
    t = np.linspace(0.0, 60.0, 40001)
    y = 0.5 * np.exp(-0.2 * t) + 0.5 * np.exp(-0.6 * t)
    ig = estimators.integral_inverse_gamma(TimeSeries(t, y), 1.0, 0.0, tail_tol=0.01)
    expect = 0.5 * (1 - math.exp(-12)) / 0.1 + 0.5 * (1 - math.exp(-36)) / 0.3
    assert ig == pytest.approx(expect, rel=1e-6)


def test_integral_inverse_gamma_short_window():
    with pytest.raises(estimators.TailNotConverged, match="need t >="):
        estimators.integral_inverse_gamma(_synthetic(t_end=15.0), 1.0, 0.2)
    with pytest.raises(ValueError):
        estimators.integral_inverse_gamma(_synthetic(), 0.2, 0.2)


def test_dos_average():
    assert estimators.dos_average(np.arange(1, 101) / 100) == pytest.approx(100 / 0.99)
    with pytest.raises(ValueError):
        estimators.dos_average(np.ones(4))


def test_exponential_scaling_fit():
    n = np.arange(6, 13, dtype=float)
    f = estimators.fit_exponential_scaling(np.column_stack([n, 3.0 * np.exp(-0.62 * n)]))
    assert f["c"] == pytest.approx(0.62, rel=1e-10)
    assert f["a"] == pytest.approx(3.0, rel=1e-10)
    assert f.r_squared == pytest.approx(1.0)
    flat = estimators.fit_exponential_scaling(np.column_stack([n, np.full(n.size, 2.0)]))
    assert flat["c"] == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(1)
    noisy = 3.0 * np.exp(-0.62 * n) * (1 + 0.05 * rng.standard_normal(n.size))
    assert estimators.fit_exponential_scaling(np.column_stack([n, noisy]))["c"] == pytest.approx(0.62, rel=0.1)
    with pytest.raises(ValueError):
        estimators.fit_exponential_scaling(np.column_stack([n, -np.ones(n.size)]))
    with pytest.raises(ValueError):
        estimators.fit_exponential_scaling([[1.0, 1.0], [2.0, 0.5]])


def test_linear_fit():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    f = estimators.linear_fit(x, 2.5 * x - 1.0)
    assert f["slope"] == pytest.approx(2.5) and f["intercept"] == pytest.approx(-1.0)
    assert f.r_squared == pytest.approx(1.0) and f.residual_norm < 1e-12
    with pytest.raises(ValueError):
        estimators.linear_fit(np.ones(3), x[:3])
    with pytest.raises(ValueError):
        estimators.linear_fit([1.0], [2.0])


def test_fdt_point_invariants():
    p = estimators.FdtPoint(9, 8, 0.2, 0.0, 2e-4, 50.0, 30.0)
    assert p.chi == pytest.approx(4e-6)
    assert p.chi_times_dos == pytest.approx(1.2e-4)
    with pytest.raises(ValueError):
        estimators.FdtPoint(9, 8, 0.2, 0.0, -1e-4, 50.0, 30.0)
    with pytest.raises(ValueError):
        estimators.FdtPoint(9, 8, 0.2, 0.0, 1e-4, 0.0, 30.0)


def test_chi_scales_with_energy_units(rmt300):
    # doubling H doubles rates, halves 1/Gamma and leaves delta^2 alone
    _, frame, spec, _ = rmt300
    w = models.thermal_weights(frame.e0, 0.0)
    obs = models.make_observable("o_sym", 300)
    ops = dynamics.rotate_to_eigenbasis(w, obs, spec)
    spec2 = type(spec)(2 * spec.energies, spec.vectors)
    ops2 = dynamics.rotate_to_eigenbasis(w, obs, spec2)
    m1 = estimators.measure_decay(ops, 1.0)
    m2 = estimators.measure_decay(ops2, 1.0)
    assert m2.inv_gamma == pytest.approx(m1.inv_gamma / 2, rel=1e-3)
    d1, d2 = dynamics.fluctuations_infinite(ops), dynamics.fluctuations_infinite(ops2)
    assert d2 == pytest.approx(d1, rel=1e-12)
    assert estimators.chi_estimate(d2, m2.inv_gamma) == pytest.approx(2 * estimators.chi_estimate(d1, m1.inv_gamma), rel=1e-3)


def test_measure_decay_cross_estimators(rmt500):
    _, frame, spec, gamma = rmt500
    ops = dynamics.rotate_to_eigenbasis(models.thermal_weights(frame.e0, 0.0), models.make_observable("o_sym", 500), spec)
    m = estimators.measure_decay(ops, 1.0)
    assert m.reference == m.o_de
    assert abs(m.inv_gamma * m.gamma_fit - 1.0) < 0.1
    # the fitted rate against O_DE reads high by the same excess (1.20 for this seed)
    assert m.gamma_fit == pytest.approx(1.2018 * gamma, rel=1e-3)
    # the diagonal-ensemble excess makes the integral read low against O_DE
    assert estimators.measure_decay(ops, 1.0, reference=0.0).inv_gamma > m.inv_gamma


def test_measure_decay_needs_a_decay():
    frame = models.rmt_frame(models.RmtSpec(40, 0.0, 0))
    ops = dynamics.rotate_to_eigenbasis(models.thermal_weights(frame.e0, 0.0), models.make_observable("o_sym", 40), linalg.eigh(frame.hamiltonian()))
    with pytest.raises(estimators.FitError):
        estimators.measure_decay(ops, 1.0, reference=0.0, max_doublings=3)
    # o_free and O_DE agree to round-off: must not fit the round-off
    with pytest.raises(estimators.FitError, match="nothing decays"):
        estimators.measure_decay(ops, 1.0)


def test_gamma_profile_flat_for_rmt(rmt500):
    _, frame, spec, gamma = rmt500
    profile, table = estimators.empirical_gamma_profile(frame, spec)
    e = np.linspace(0.3, 0.7, 9)
    assert np.all(np.abs(profile(e) / gamma - 1.0) < 0.15)
    assert np.all(estimators.slow_variation(profile, e) < 0.15)
    assert table.shape[1] == 3


def test_gamma_profile_without_coupling():
    frame = models.rmt_frame(models.RmtSpec(60, 0.0, 0))
    with pytest.raises(estimators.FitError):
        estimators.empirical_gamma_profile(frame, t_guess=50.0)


def test_correlator_guards():
    with pytest.raises(ValueError, match="50"):
        estimators.correlator_ensemble(models.RmtSpec(50, 0.05, 0), 10)


def test_correlator_small_ensemble():
    rep = estimators.correlator_ensemble(models.RmtSpec(120, 0.08, 3), 50, n_pairs=40)
    assert rep.norm_error < 1e-12
    assert rep.gamma_fit == pytest.approx(rep.gamma_theory, rel=0.3)
    assert rep.pair_table.shape == (40, 5)
    assert rep.intensity_mean.shape == rep.offsets.shape
    assert "Lorentzian width" in rep.summary()
