"""Closed-form random-matrix predictions for decay and time fluctuations.

Conventions: ``omega0`` is the mean level spacing (inverse density of
states) and ``gamma`` the golden-rule half width of the eigenvector
intensity ``Lambda(mu, alpha) = <c_mu(alpha)^2>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import DiagonalObservable, odd_sector


def gamma_fgr(g: float, n: int, omega0: float) -> float:
    """Golden-rule decay rate ``pi g^2 / (N omega0)``."""
    if g < 0 or omega0 <= 0:
        raise ValueError("need g >= 0 and omega0 > 0")
    return math.pi * g * g / (n * omega0)


def lambda_lorentzian(e_mu, e_alpha, gamma: float, omega0: float, n: int = 1):
    """``Lambda^(n)``: Lorentzian of half width ``n * gamma`` normalized so that sum over a grid of spacing omega0 is 1."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    width = n * gamma
    d = np.subtract(e_mu, e_alpha)
    return (omega0 * width / math.pi) / (d * d + width * width)


@dataclass(frozen=True)
class CorrelatorContext:
    gamma: float
    omega0: float
    energies: np.ndarray  # non-interacting energies E_alpha
    mu_energies: np.ndarray | None = None  # eigenvalues E_mu; defaults to ``energies``

    def lam(self, mu: int, alpha: int, n: int = 1) -> float:
        e_mu = (self.energies if self.mu_energies is None else self.mu_energies)[mu]
        return float(lambda_lorentzian(e_mu, self.energies[alpha], self.gamma, self.omega0, n))

    def lam2(self, mu: int, nu: int) -> float:
        e = self.energies if self.mu_energies is None else self.mu_energies
        return float(lambda_lorentzian(e[mu], e[nu], self.gamma, self.omega0, 2))


def four_point(mu, nu, alpha, beta, alpha_p, beta_p, ctx: CorrelatorContext) -> float:
    """Ensemble average ``<c_mu(alpha) c_nu(beta) c_mu(alpha') c_nu(beta')>``.

    For ``mu != nu`` this is the Gaussian pairing minus the orthogonality
    correction; for ``mu == nu`` the three Gaussian pairings of a single
    random vector.
    """
    d = lambda i, j: 1.0 if i == j else 0.0  # noqa: E731
    lam = ctx.lam
    if mu == nu:
        return lam(mu, alpha) * lam(mu, alpha_p) * d(alpha, beta) * d(alpha_p, beta_p) + lam(
            mu, alpha
        ) * lam(mu, beta) * (d(alpha, alpha_p) * d(beta, beta_p) + d(alpha, beta_p) * d(alpha_p, beta))
    gauss = lam(mu, alpha) * lam(nu, beta) * d(alpha, alpha_p) * d(beta, beta_p)
    pattern = d(alpha, beta) * d(alpha_p, beta_p) + d(alpha, beta_p) * d(beta, alpha_p)
    if pattern == 0.0:
        return gauss
    ng = lam(mu, alpha) * lam(nu, beta) * lam(mu, alpha_p) * lam(nu, beta_p) / ctx.lam2(mu, nu)
    return gauss - ng * pattern


@dataclass(frozen=True)
class ObservableMoments:
    mean: float
    mean_sq: float
    o_up: float

    def __post_init__(self):
        if self.mean_sq < self.mean**2 - 1e-12:
            raise ValueError("mean_sq must be >= mean^2")

    @property
    def variance(self) -> float:
        return self.mean_sq - self.mean**2

    @classmethod
    def from_observable(cls, obs: DiagonalObservable) -> "ObservableMoments":
        """Coarse averages over the whole spectrum; ``o_up`` is the probe-up value."""
        d = obs.d
        up = d[odd_sector(d.size)]
        return cls(float(d.mean()), float((d * d).mean()), float(up.mean()))


def w_o_constant(m: ObservableMoments, regime: str = "high_T") -> float:
    """Observable constant ``W_O`` of the fluctuation-dissipation relation.

    ``high_T`` keeps all contractions with ``[w^2] = 2[w]^2``; ``low_T`` keeps
    only the ``[w^2]`` terms, leaving the coarse variance ``[O^2] - [O]^2``.
    """
    o, o2, up = m.mean, m.mean_sq, m.o_up
    if regime == "high_T":
        return o2 + up * up + 1.5 * o * o - o * o - 2.0 * o * up - 0.5 * o2
    if regime == "low_T":
        return o2 - o * o
    raise ValueError(f"unknown regime {regime!r}")


def predict_decay(t, o_free: float, o_de: float, gamma: float):
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    return (o_free - o_de) * np.exp(-2.0 * gamma * np.asarray(t)) + o_de


def predict_delta2_rmt_inf_T(w_o: float, omega0: float, n_b: int, gamma: float) -> float:
    return w_o * omega0 / (4.0 * math.pi * n_b * gamma)


@dataclass(frozen=True)
class FdtPrediction:
    delta2: float
    w_o: float
    c_const: float
    gamma: float  # <Gamma^-1>_{2 beta}^-1, the effective rate used
    n_b: float
    dos_bar: float
    beta: float
    z_beta: float
    z_prime_2beta: float
    delta_e_prime: float
    c_prime: float


def _trapezoid_adaptive(f: Callable, lo: float, hi: float, base: int = 2**12, rtol: float = 1e-10, max_pts: int = 2**20):
    n = base
    x = np.linspace(lo, hi, n + 1)
    prev = np.trapezoid(f(x), x)
    while n < max_pts:
        n *= 2
        x = np.linspace(lo, hi, n + 1)
        cur = np.trapezoid(f(x), x)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev


def predict_delta2_finite_T(
    w_o: float,
    beta: float,
    energies,
    gamma_of_e: Callable,
    dos_of_e: Callable,
    e0: float = 0.0,
    *,
    sector=None,
    cutoff: bool = False,
) -> FdtPrediction:
    """Finite-temperature fluctuation prediction.

    ``delta2 = W_O * dE'(2 beta) * <1/Gamma>_{2 beta} / (8 pi Z_beta^2)`` with
    ``Z_beta`` the sector sum of ``exp(-beta (E - e0))`` over the supplied
    non-interacting ``energies`` and the unbiased thermal average taken by
    quadrature over the spectral range (starting at ``e0`` when ``cutoff``).
    At ``beta = 0`` this is ``W_O / (4 pi N_B Dbar) * mean(1/Gamma)``.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    energies = np.asarray(energies, dtype=float)
    sector = odd_sector(energies.size) if sector is None else np.asarray(sector, dtype=bool)
    if cutoff:
        sector = sector & (energies >= e0)
    if not sector.any():
        raise ValueError("empty sector")
    lo = max(e0, energies.min()) if cutoff else energies.min()
    hi = energies.max()

    with np.errstate(over="ignore", under="ignore"):
        z_raw = float(np.exp(-beta * (energies[sector] - e0)).sum())
    if z_raw == 0.0:
        raise ValueError(f"Z_beta underflows at beta={beta}; shift e0 towards the populated energies")

    # common shift keeps exp() in range; it cancels in dE'/Z^2
    shift = -beta * (min(energies[sector].min(), lo) - e0)
    z = float(np.exp(-beta * (energies[sector] - e0) - shift).sum())
    boltz2 = lambda e: np.exp(-2.0 * beta * (e - e0) - 2.0 * shift)  # noqa: E731
    de_prime = _trapezoid_adaptive(boltz2, lo, hi)
    inv_gamma = _trapezoid_adaptive(lambda e: boltz2(e) / gamma_of_e(e), lo, hi) / de_prime
    delta2 = w_o * de_prime * inv_gamma / (8.0 * math.pi * z * z)

    # DOS-weighted (measured-style) averages, reported as diagnostics
    zp2 = _trapezoid_adaptive(lambda e: dos_of_e(e) * boltz2(e), lo, hi)
    avg = lambda f: _trapezoid_adaptive(lambda e: dos_of_e(e) * boltz2(e) * f(e), lo, hi) / zp2  # noqa: E731
    inv_d_inv_g = avg(lambda e: 1.0 / (dos_of_e(e) * gamma_of_e(e)))
    c_prime = inv_d_inv_g / (avg(lambda e: 1.0 / gamma_of_e(e)) / avg(dos_of_e))
    dos_bar = _trapezoid_adaptive(dos_of_e, lo, hi) / (hi - lo)

    scale = math.exp(shift) if shift < 700 else math.inf
    n_b = float(sector.sum())
    return FdtPrediction(
        delta2=float(delta2),
        w_o=w_o,
        c_const=w_o / (4.0 * math.pi),
        gamma=1.0 / inv_gamma,
        n_b=n_b,
        dos_bar=float(dos_bar),
        beta=float(beta),
        z_beta=z * scale,
        z_prime_2beta=float(zp2) * scale * scale,
        delta_e_prime=float(de_prime) * scale * scale,
        c_prime=float(c_prime),
    )


def chi_prediction(c_const: float, n_b: float, dos_bar: float) -> float:
    return c_const / (n_b * dos_bar)


def predict_delta2_contractions(w, o, e_mu, e_alpha, gamma: float, omega0: float) -> float:
    """Fluctuations from the leading Gaussian, non-Gaussian and mixed contractions, summed exactly.

    Same expansion as the closed forms but without replacing the sums over
    non-interacting and eigenstate indices by energy integrals, so it stays
    accurate when few states are thermally populated or ``gamma / omega0`` is
    of order a few. Cost is ``O(D^3)``.
    """
    w = np.asarray(w, dtype=float)
    o = np.asarray(o, dtype=float)
    lam = lambda_lorentzian(np.asarray(e_mu)[:, None], np.asarray(e_alpha)[None, :], gamma, omega0)
    p = lambda f: (lam * f) @ lam.T  # noqa: E731  sum_a Lam(mu,a) Lam(nu,a) f_a
    lam2 = lambda_lorentzian(np.asarray(e_mu)[:, None], np.asarray(e_mu)[None, :], gamma, omega0, 2)
    pw, pw2, po, po2, pwo = p(w), p(w * w), p(o), p(o * o), p(w * o)
    terms = (
        pw2 * po2
        + 2.0 * pwo**2
        + 3.0 * pw**2 * po**2 / lam2**2
        - (pw2 * po**2 + 4.0 * pwo * pw * po + po2 * pw**2) / lam2
    )
    return float(terms.sum() - np.trace(terms))


def residual_bound(o_max: float, omega0: float, gamma: float) -> float:
    """Bound ``3 omega0 max|O| / (4 pi gamma)`` on the neglected third term of the decay law."""
    return 3.0 * omega0 * abs(o_max) / (4.0 * math.pi * gamma)
