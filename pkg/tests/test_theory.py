import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ergoprobe import dynamics, models, theory


def test_gamma_fgr():
    assert theory.gamma_fgr(0.05, 500, 1 / 500) == pytest.approx(math.pi * 0.0025, rel=1e-14)
    with pytest.raises(ValueError):
        theory.gamma_fgr(-0.1, 10, 0.1)


def test_lorentzian_normalization_and_width():
    w0, g = 1e-3, 0.01
    grid = np.arange(-50_000, 50_001) * w0
    assert_allclose(theory.lambda_lorentzian(0.0, grid, g, w0).sum(), 1.0, rtol=1e-3)
    lam = theory.lambda_lorentzian(0.0, np.array([0.0, g]), g, w0)
    assert lam[1] / lam[0] == pytest.approx(0.5)
    lam2 = theory.lambda_lorentzian(0.0, np.array([0.0, 2 * g]), g, w0, n=2)
    assert lam2[1] / lam2[0] == pytest.approx(0.5)


def test_four_point_gaussian_limits():
    ctx = theory.CorrelatorContext(0.02, 0.01, np.arange(20) * 0.01)
    lam = ctx.lam(5, 6)
    # single real Gaussian vector: <c^4> = 3 <c^2>^2
    assert theory.four_point(5, 5, 6, 6, 6, 6, ctx) == pytest.approx(3 * lam**2)
    # distinct eigenvectors, distinct components: plain product
    assert theory.four_point(5, 7, 6, 9, 6, 9, ctx) == pytest.approx(lam * ctx.lam(7, 9))
    # coincident-pair pattern carries the negative orthogonality correction
    x = theory.four_point(5, 7, 6, 6, 9, 9, ctx)
    expect = -ctx.lam(5, 6) * ctx.lam(7, 6) * ctx.lam(5, 9) * ctx.lam(7, 9) / ctx.lam2(5, 7)
    assert x == pytest.approx(expect) and x < 0
    assert theory.four_point(5, 7, 1, 2, 3, 4, ctx) == 0.0


def test_w_o_constants():
    m = theory.ObservableMoments.from_observable(models.make_observable("o_sym", 100))
    assert theory.w_o_constant(m) == pytest.approx(1.5)
    assert theory.w_o_constant(m, "low_T") == pytest.approx(1.0)
    m = theory.ObservableMoments.from_observable(models.make_observable("o_odd", 100))
    assert theory.w_o_constant(m) == pytest.approx(0.375)
    assert theory.w_o_constant(m, "low_T") == pytest.approx(0.25)
    with pytest.raises(ValueError):
        theory.w_o_constant(m, "medium")
    with pytest.raises(ValueError):
        theory.ObservableMoments(1.0, 0.5, 1.0)


def test_infinite_temperature_value():
    # 1.5 * 0.002 / (4 pi * 250 * pi * 0.0025)
    assert theory.predict_delta2_rmt_inf_T(1.5, 1 / 500, 250, math.pi * 0.0025) == pytest.approx(1.2158542e-4, rel=1e-6)


def test_finite_T_reduces_to_infinite_T():
    n = 500
    e = np.arange(1, n + 1) / n
    g = math.pi * 0.0025
    p = theory.predict_delta2_finite_T(1.5, 0.0, e, lambda x: np.full_like(x, g), lambda x: np.full_like(x, n))
    inf_t = theory.predict_delta2_rmt_inf_T(1.5, 1 / n, n // 2, g)
    # differs only by the spectral span (N - 1)/N
    assert p.delta2 == pytest.approx(inf_t * (n - 1) / n, rel=1e-9)
    assert p.dos_bar == pytest.approx(n)
    assert p.c_prime == pytest.approx(1.0)


def test_finite_T_rmt_closed_form():
    # W_O dE'(2 beta) / (8 pi Z_beta^2 Gamma) with both sums done analytically
    n, beta, e0 = 500, 100.0, 0.5
    e = np.arange(1, n + 1) / n
    g = math.pi * 0.0016
    p = theory.predict_delta2_finite_T(1.0, beta, e, lambda x: np.full_like(x, g), lambda x: np.full_like(x, n), e0=e0, cutoff=True)
    k = np.arange(0, 125)  # odd alpha from 251 to 499 -> energies 0.502 + 2k/500
    z = np.sum(np.exp(-beta * (0.502 + 2 * k / n - e0)))
    de = (1 - np.exp(-2 * beta * (1.0 - e0))) / (2 * beta)
    assert p.z_beta == pytest.approx(z, rel=1e-12)
    assert p.delta_e_prime == pytest.approx(de, rel=1e-8)
    assert p.delta2 == pytest.approx(de / (8 * math.pi * z * z * g), rel=1e-8)


def test_finite_T_underflow_and_guards():
    e = np.linspace(0.0, 1.0, 10)
    f = lambda x: np.ones_like(x)  # noqa: E731
    with pytest.raises(ValueError):
        theory.predict_delta2_finite_T(1.0, -1.0, e, f, f)
    with pytest.raises(ValueError, match="underflow"):
        theory.predict_delta2_finite_T(1.0, 1e6, e + 1.0, f, f)


def test_predict_decay():
    t = np.array([0.0, 1.0, 1e6])
    assert_allclose(theory.predict_decay(t, 1.0, 0.25, 0.5), [1.0, 0.25 + 0.75 * math.exp(-1.0), 0.25])


def test_contraction_sum_large_gamma_limit():
    # at Gamma >> omega0 the discrete sum approaches the closed form
    n, g = 400, 0.08
    e = np.arange(1, n + 1) / n
    gam = theory.gamma_fgr(g, n, 1 / n)
    w = models.thermal_weights(e, 0.0).w
    o = models.make_observable("o_sym", n).d
    pc = theory.predict_delta2_contractions(w, o, e, e, gam, 1 / n)
    assert pc / theory.predict_delta2_rmt_inf_T(1.5, 1 / n, n // 2, gam) == pytest.approx(1.0, abs=0.15)


def test_contraction_sum_tracks_measurement(rmt500):
    _, frame, spec, gamma = rmt500
    w = models.thermal_weights(frame.e0, 0.0)
    obs = models.make_observable("o_sym", 500)
    measured = dynamics.fluctuations_infinite(dynamics.rotate_to_eigenbasis(w, obs, spec))
    pc = theory.predict_delta2_contractions(w.w, obs.d, spec.energies, frame.e0, gamma, 1 / 500)
    assert measured / pc == pytest.approx(1.0, abs=0.2)


def test_residual_bound():
    assert theory.residual_bound(1.0, 0.002, 0.01) == pytest.approx(3 * 0.002 / (4 * math.pi * 0.01))
