"""Estimators for decay rates, density of states, susceptibility and fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import interp1d
from scipy.optimize import curve_fit

from . import dynamics, linalg, models, theory
from .dynamics import TimeSeries


class FitError(RuntimeError):
    """The data do not support the requested fit."""


@dataclass(frozen=True)
class FitResult:
    params: dict
    r_squared: float
    residual_norm: float
    ok: bool = True
    message: str = ""

    def __getitem__(self, key):
        return self.params[key]


@dataclass(frozen=True)
class FdtPoint:
    n_total: int
    n_b: int
    g_sb: float
    beta: float
    delta2: float
    inv_gamma: float
    dos_bar: float
    gamma_fit: float = math.nan
    estimator: str = "integral"

    def __post_init__(self):
        if self.delta2 < 0:
            raise ValueError("delta2 must be >= 0")
        if not self.inv_gamma > 0:
            raise ValueError("inv_gamma must be positive")

    @property
    def chi(self) -> float:
        return chi_estimate(self.delta2, self.inv_gamma)

    @property
    def chi_times_dos(self) -> float:
        return self.chi * self.dos_bar


def _r_squared(y, yhat) -> float:
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return max(0.0, 1.0 - ss_res / ss_tot)


def linear_fit(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.shape != y.shape:
        raise ValueError("need matching x, y with at least two points")
    if np.ptp(x) == 0:
        raise ValueError("x has zero variance")
    slope, intercept = np.polyfit(x, y, 1)
    yhat = slope * x + intercept
    return FitResult(
        {"slope": float(slope), "intercept": float(intercept)},
        _r_squared(y, yhat),
        float(np.linalg.norm(y - yhat)),
    )


def fit_decay_rate(series: TimeSeries, o_de: float, threshold: float = 0.1) -> FitResult:
    """Log-linear fit of ``|y - o_de| ~ exp(-2 Gamma t)`` over the early window.

    The window ends at the first sample where ``|y - o_de|`` falls below
    ``threshold * |y(0) - o_de|``, which keeps the fluctuation floor out of
    the slope. A non-negative slope means the series does not decay and the
    result is flagged with ``ok=False``.
    """
    t, y = series.times, series.values
    dev = np.abs(y - o_de)
    a0 = dev[0]
    if a0 == 0.0:
        return FitResult({"gamma": math.nan}, 0.0, math.nan, ok=False, message="no initial deviation")
    below = np.flatnonzero(dev < threshold * a0)
    end = below[0] if below.size else t.size
    end = max(end, 3)
    tt, ld = t[:end], np.log(np.maximum(dev[:end], np.finfo(float).tiny))
    if np.ptp(tt) == 0:
        return FitResult({"gamma": math.nan}, 0.0, math.nan, ok=False, message="degenerate window")
    slope, intercept = np.polyfit(tt, ld, 1)
    resid = ld - (slope * tt + intercept)
    r2 = _r_squared(ld, slope * tt + intercept)
    if slope >= 0:
        return FitResult({"gamma": math.nan}, r2, float(np.linalg.norm(resid)), ok=False, message="series does not decay")
    return FitResult(
        {"gamma": -slope / 2.0, "amplitude": math.exp(intercept), "t_window": float(tt[-1]), "reached_threshold": bool(below.size)},
        r2,
        float(np.linalg.norm(resid)),
    )


class TailNotConverged(ValueError):
    """The series stops before the decay has run its course."""


def integral_inverse_gamma(series: TimeSeries, o_free: float, o_de: float, *, tail_tol: float = 0.01) -> float:
    """Thermal average of the inverse rate, ``2 int (y - o_de) dt / (o_free - o_de)``.

    The window must cover the decay: the exponential envelope fitted to the
    series has to have fallen below ``tail_tol`` of its initial amplitude by
    the last sample. The envelope is used rather than the raw last sample
    because the raw signal carries the persistent fluctuations being studied.
    The window should also stay well short of the Heisenberg time, beyond
    which the integral is dominated by revivals.
    """
    span = o_free - o_de
    if span == 0:
        raise ValueError("o_free equals o_de: nothing decays")
    fit = fit_decay_rate(series, o_de)
    if not fit.ok:
        raise TailNotConverged(f"no decay to integrate ({fit.message})")
    t_end = series.times[-1]
    needed = math.log(1.0 / tail_tol) / (2.0 * fit["gamma"])
    if t_end < needed:
        raise TailNotConverged(f"series ends at t={t_end:.4g}; need t >= {needed:.4g} for the tail to drop below {tail_tol}")
    return float(2.0 * np.trapezoid(series.values - o_de, series.times) / span)


def dos_average(energies) -> float:
    """Unbiased average density of states, ``dim / (E_max - E_min)``."""
    e = np.asarray(energies, dtype=float)
    span = e.max() - e.min()
    if span <= 0:
        raise ValueError("spectrum has zero width")
    return e.size / span


def chi_estimate(delta2: float, inv_gamma: float) -> float:
    return delta2 / inv_gamma


def fit_exponential_scaling(points) -> FitResult:
    """Fit ``y = a exp(-c N)`` by least squares on ``ln y``; ``c > 0`` for decreasing data."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least three (N, y) points")
    n, y = pts[:, 0], pts[:, 1]
    if np.any(y <= 0):
        raise ValueError("exponential fit needs positive y")
    lin = linear_fit(n, np.log(y))
    return FitResult(
        {"a": math.exp(lin["intercept"]), "c": -lin["slope"]},
        lin.r_squared,
        lin.residual_norm,
    )


# --------------------------------------------------------------------------
# time-domain measurement of the decay


@dataclass(frozen=True)
class DecayMeasurement:
    inv_gamma: float
    gamma_fit: float
    fit: FitResult
    series: TimeSeries
    o_free: float
    reference: float
    o_de: float


def measure_decay(
    ops: dynamics.EigenbasisOperators,
    o_free: float,
    reference: float | None = None,
    *,
    tail_tol: float = 0.01,
    n_samples: int = 4096,
    coarse_samples: int = 2048,
    t_guess: float | None = None,
    max_doublings: int = 20,
) -> DecayMeasurement:
    """Measure the decay of a quench signal and its integrated inverse rate.

    ``reference`` is the value subtracted from the signal, by default the
    exact diagonal-ensemble value. In random-matrix models part of that
    value, of order ``omega0 / Gamma``, only builds up near the Heisenberg
    time; the integral then comes out low by about twice that excess times
    the window, which is why the window is kept as short as the tail check
    allows. Passing the microcanonical average instead removes this bias
    but fails whenever the signal does not relax to it.

    A coarse grid is widened until the early-window fit reaches its
    threshold. The signal is then resampled on ``[0, T_end]`` with
    ``T_end = ln(1/tail_tol) / (2 Gamma_fit)`` and integrated.
    """
    o_de = dynamics.diagonal_ensemble(ops)
    reference = o_de if reference is None else reference
    if abs(o_free - reference) <= 1e-9 * max(1.0, abs(o_free)):
        raise FitError("initial value equals the reference: nothing decays")
    span = np.ptp(ops.energies)
    t_max = t_guess if t_guess else 20.0 / max(span, 1e-12) * ops.dim**0.5
    fit = None
    for _ in range(max_doublings):
        coarse = dynamics.observable_series(ops, np.linspace(0.0, t_max, coarse_samples))
        fit = fit_decay_rate(coarse, reference)
        if fit.ok and fit["reached_threshold"]:
            break
        t_max *= 2.0
    if fit is None or not fit.ok or not fit["reached_threshold"]:
        raise FitError(f"signal does not decay to the fit threshold ({fit.message if fit else 'no fit'})")
    for _ in range(4):
        t_end = 1.001 * math.log(1.0 / tail_tol) / (2.0 * fit["gamma"])
        series = dynamics.observable_series(ops, np.linspace(0.0, t_end, n_samples))
        fine = fit_decay_rate(series, reference)
        if not fine.ok:
            raise FitError(f"refit failed ({fine.message})")
        try:
            inv_gamma = integral_inverse_gamma(series, o_free, reference, tail_tol=tail_tol)
            break
        except TailNotConverged:
            fit = fine
    else:
        raise FitError("integration window did not settle")
    return DecayMeasurement(
        float(inv_gamma), float(fine["gamma"]), fine, series, o_free, reference, o_de
    )


def _fit_quench(ops, reference, t_guess, threshold, samples=1024, tries=16):
    t_max = t_guess
    fit = None
    for _ in range(tries):
        series = dynamics.observable_series(ops, np.linspace(0.0, t_max, samples))
        fit = fit_decay_rate(series, reference, threshold)
        if not fit.ok or fit["reached_threshold"]:
            break
        t_max *= 2.0
    return fit if fit.ok and fit["reached_threshold"] else None


def empirical_gamma_profile(
    frame: models.Frame,
    spectrum: linalg.Spectrum | None = None,
    *,
    central: float = 0.6,
    n_bins: int = 6,
    n_probe: int = 24,
    obs: str = "sigma_z_probe",
    t_guess: float | None = None,
    threshold: float = 0.3,
):
    """Decay rate as a function of energy from basis-state quenches.

    The probe-up basis states in the central ``central`` fraction of the
    non-interacting spectrum are split into ``n_bins`` contiguous energy
    bins. The signals of all states in a bin are averaged and the average is
    fitted; since the signal is linear in the initial weights this is one
    quench of the bin's uniform mixture. Single-state signals are too noisy
    to fit one by one (their rates scatter by tens of percent), but
    ``n_probe`` of them are still fitted individually and returned in the
    diagnostic table.

    Fits are taken against the microcanonical value of the observable,
    falling back to the bin's diagonal-ensemble value when the signal never
    gets close to it. The fit window stops at ``threshold`` of the initial
    deviation; the default 0.3 keeps it clear of the plateau of order
    ``omega0 / Gamma`` that a few-state mixture sits on after the decay.

    Returns ``(profile, table)``. ``profile`` is a piecewise-linear
    ``Gamma(E)`` through the bin centres, clamped at the ends; ``table`` rows
    are ``(E_alpha, gamma, ok)`` for the individually fitted states.
    """
    spectrum = spectrum or linalg.eigh(frame.hamiltonian())
    d = frame.dim
    o = models.make_observable(obs, d)
    reference = float(o.d.mean())
    order = np.argsort(frame.e0, kind="stable")
    lo, hi = int(d * (1 - central) / 2), int(d * (1 + central) / 2)
    states = np.array([a for a in order[lo:hi] if a % 2 == 0])
    if states.size < n_bins:
        raise ValueError("too few probe-up states in the central window")
    t0 = t_guess or 20.0 / max(np.ptp(spectrum.energies), 1e-12) * d**0.5

    e_bins, g_bins = [], []
    for group in np.array_split(states, n_bins):
        w = np.zeros(d)
        w[group] = 1.0 / group.size
        sw = models.StateWeights(w, math.nan, 0.0, w > 0, 1.0)
        ops = dynamics.rotate_to_eigenbasis(sw, o, spectrum)
        fit = _fit_quench(ops, reference, t0, threshold) or _fit_quench(ops, dynamics.diagonal_ensemble(ops), t0, threshold)
        if fit is not None:
            e_bins.append(float(frame.e0[group].mean()))
            g_bins.append(fit["gamma"])
    if not g_bins:
        raise FitError("no energy bin showed a decay")

    rows = []
    pick = states[np.unique(np.linspace(0, states.size - 1, min(n_probe, states.size)).round().astype(int))]
    for alpha in pick:
        ops = dynamics.rotate_to_eigenbasis(models.basis_state_weights(d, int(alpha)), o, spectrum)
        fit = _fit_quench(ops, reference, t0, threshold) or _fit_quench(ops, dynamics.diagonal_ensemble(ops), t0, threshold)
        rows.append((float(frame.e0[alpha]), fit["gamma"] if fit else math.nan, fit is not None))
    table = np.array(rows, dtype=float)

    e_bins, g_bins = np.array(e_bins), np.array(g_bins)
    if e_bins.size == 1:
        value = float(g_bins[0])
        return (lambda e: np.full_like(np.asarray(e, dtype=float), value)), table
    f = interp1d(e_bins, g_bins, bounds_error=False, fill_value=(g_bins[0], g_bins[-1]))
    return (lambda e: f(np.asarray(e, dtype=float))), table


def slow_variation(profile, energies) -> np.ndarray:
    """``|Gamma(E) - Gamma(E + Gamma(E))| / Gamma(E)`` on the given energies."""
    e = np.asarray(energies, dtype=float)
    g = profile(e)
    return np.abs(g - profile(e + g)) / g


# --------------------------------------------------------------------------
# eigenvector statistics over an ensemble of random matrices


def _lorentz(x, amp, gamma):
    return amp * (gamma / math.pi) / (x * x + gamma * gamma)


@dataclass(frozen=True)
class CorrelatorReport:
    n: int
    g: float
    m: int
    gamma_theory: float
    gamma_fit: float
    amplitude_fit: float
    offsets: np.ndarray
    intensity_mean: np.ndarray
    intensity_sem: np.ndarray
    norm_error: float
    pair_table: np.ndarray  # rows: mu, nu, measured, sem, theory
    negative_fraction: float

    def summary(self) -> str:
        rel = abs(self.gamma_fit / self.gamma_theory - 1.0)
        return (
            f"N={self.n} g={self.g} m={self.m}: Lorentzian width {self.gamma_fit:.5g} "
            f"vs {self.gamma_theory:.5g} ({rel:.1%}); max |sum c^2 - 1| = {self.norm_error:.1e}; "
            f"coincident-pair correction negative in {self.negative_fraction:.1%} of pairs"
        )


def correlator_ensemble(
    spec: models.RmtSpec,
    m_realizations: int,
    probes=None,
    *,
    n_pairs: int = 200,
    max_offset: int | None = None,
    central: float = 0.5,
) -> CorrelatorReport:
    """Ensemble statistics of eigenvector coefficients against the correlator theory.

    Realization ``k`` uses GOE matrix index ``k`` of ``spec.seed``. ``probes``
    are eigenvector indices ``mu`` (defaults to the central ``central``
    fraction). For each probe the intensity ``c_mu(alpha)^2`` is collected
    against ``alpha - alpha_mu``, where ``alpha_mu`` is the unperturbed level
    nearest ``E_mu``; the ensemble mean is fitted by a Lorentzian with free
    amplitude and width. Coincident-pair four-point sums
    ``sum_{alpha != alpha'} c_mu(a) c_nu(a) c_mu(a') c_nu(a')`` are averaged
    for ``n_pairs`` pairs ``mu != nu`` and compared with the theory.
    """
    if m_realizations < 50:
        raise ValueError("need at least 50 realizations")
    n, w0 = spec.n, spec.omega0
    gamma = theory.gamma_fgr(spec.g, n, w0)
    if probes is None:
        lo, hi = int(n * (1 - central) / 2), int(n * (1 + central) / 2)
        probes = np.arange(lo, hi)
    probes = np.asarray(probes)
    max_offset = max_offset or int(min(n // 4, max(20, 12 * gamma / w0)))
    offsets = np.arange(-max_offset, max_offset + 1)
    rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed), spawn_key=(2**31,)))
    pairs = np.array([rng.choice(probes, 2, replace=False) for _ in range(n_pairs)])

    e_alpha = np.arange(1, n + 1) * w0
    acc = np.zeros((m_realizations, offsets.size))
    pair_vals = np.zeros((m_realizations, n_pairs))
    theory_vals = np.zeros((m_realizations, n_pairs))
    norm_err = 0.0
    for k in range(m_realizations):
        v = models.goe_matrix(n, spec.g**2 / n, spec.seed, matrix_index=k)
        frame = models.Frame(e_alpha, v)
        s = linalg.eigh(frame.hamiltonian())
        q = s.vectors
        norm_err = max(norm_err, float(np.abs((q * q).sum(axis=0) - 1.0).max()))
        centre = np.clip(np.rint(s.energies[probes] / w0).astype(int) - 1, 0, n - 1)
        idx = centre[:, None] + offsets[None, :]
        valid = (idx >= 0) & (idx < n)
        vals = np.where(valid, q[np.clip(idx, 0, n - 1), probes[:, None]] ** 2, np.nan)
        acc[k] = np.nanmean(vals, axis=0)
        x = q[:, pairs[:, 0]] * q[:, pairs[:, 1]]
        pair_vals[k] = x.sum(axis=0) ** 2 - (x * x).sum(axis=0)
        lam_mu = theory.lambda_lorentzian(s.energies[pairs[:, 0]][None, :], e_alpha[:, None], gamma, w0)
        lam_nu = theory.lambda_lorentzian(s.energies[pairs[:, 1]][None, :], e_alpha[:, None], gamma, w0)
        prod = lam_mu * lam_nu
        lam2 = theory.lambda_lorentzian(s.energies[pairs[:, 0]], s.energies[pairs[:, 1]], gamma, w0, 2)
        theory_vals[k] = -(prod.sum(axis=0) ** 2 - (prod * prod).sum(axis=0)) / lam2

    mean = acc.mean(axis=0)
    sem = acc.std(axis=0, ddof=1) / math.sqrt(m_realizations)
    x = offsets * w0
    (amp, g_fit), _ = curve_fit(_lorentz, x, mean, p0=(1.0, gamma))
    pm = pair_vals.mean(axis=0)
    ps = pair_vals.std(axis=0, ddof=1) / math.sqrt(m_realizations)
    table = np.column_stack([pairs, pm, ps, theory_vals.mean(axis=0)])
    return CorrelatorReport(
        n=n,
        g=spec.g,
        m=m_realizations,
        gamma_theory=gamma,
        gamma_fit=float(abs(g_fit)),
        amplitude_fit=float(amp),
        offsets=offsets,
        intensity_mean=mean,
        intensity_sem=sem,
        norm_error=norm_err,
        pair_table=table,
        negative_fraction=float(np.mean(pm < 0)),
    )
