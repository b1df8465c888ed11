"""Exact quench dynamics from the spectral decomposition.

For a diagonal initial state ``w`` and diagonal observable ``O`` the signal is

    O(t) = sum_{mu nu} rho_{mu nu} O_{nu mu} cos((E_mu - E_nu) t),

with ``rho_{mu nu} = sum_a w_a c_mu(a) c_nu(a)`` and likewise for ``O``. The
infinite-time variance of this signal is ``sum_{mu != nu} rho_{mu nu}^2 O_{mu nu}^2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import Spectrum
from .models import DiagonalObservable, StateWeights

MAX_TIME_DOMAIN_DIM = 2048
MAX_CLOSED_SUM_DIM = 2**14


class DegeneracyWarning(UserWarning):
    """Near-degenerate eigenvalues; the closed-form fluctuation sum is biased."""


@dataclass(frozen=True)
class EigenbasisOperators:
    rho_tilde: np.ndarray
    o_tilde: np.ndarray
    energies: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Elementwise ``rho_{mu nu} O_{nu mu}``; every signal is a cosine sum over it."""
        return self.rho_tilde * self.o_tilde


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if t.shape != y.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d and of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly ascending")
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite values in time series")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", y)


def rotate_to_eigenbasis(w: StateWeights, obs: DiagonalObservable, spec: Spectrum) -> EigenbasisOperators:
    q = spec.vectors
    if not (w.w.shape[0] == obs.d.shape[0] == q.shape[0]):
        raise ValueError(
            f"dimension mismatch: weights {w.w.shape[0]}, observable {obs.d.shape[0]}, spectrum {q.shape[0]}"
        )
    rho = (q.T * w.w) @ q
    o = (q.T * obs.d) @ q
    # congruence transforms of diagonal matrices are symmetric; remove round-off
    rho = 0.5 * (rho + rho.T)
    o = 0.5 * (o + o.T)
    return EigenbasisOperators(rho, o, np.array(spec.energies))


def observable_trace(ops: EigenbasisOperators, t: float) -> float:
    """``Tr(rho(t) O)`` at a single time."""
    if t < 0:
        raise ValueError("t must be >= 0")
    e = ops.energies
    phase = np.cos(np.subtract.outer(e, e) * t)
    return float(np.sum(ops.weights * phase))


def observable_series(ops: EigenbasisOperators, times, *, chunk: int = 512) -> TimeSeries:
    """``Tr(rho(t) O)`` on a grid of times.

    Uses ``cos(a - b) = cos a cos b + sin a sin b`` so each chunk of times is
    two dense matrix products instead of a ``D x D`` cosine per time.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    m = ops.weights
    e = ops.energies
    out = np.empty(times.size)
    for lo in range(0, times.size, chunk):
        t = times[lo : lo + chunk]
        arg = np.outer(e, t)
        c, s = np.cos(arg), np.sin(arg)
        out[lo : lo + chunk] = np.einsum("it,it->t", c, m @ c) + np.einsum("it,it->t", s, m @ s)
    return TimeSeries(times, out)


def diagonal_ensemble(ops: EigenbasisOperators) -> float:
    return float(np.dot(np.diag(ops.rho_tilde), np.diag(ops.o_tilde)))


def check_degeneracy(energies, scale: float | None = None, rtol: float = 1e-10) -> bool:
    """Warn and return True if two eigenvalues sit closer than ``rtol * scale``."""
    e = np.sort(np.asarray(energies))
    scale = np.abs(e).max() if scale is None else scale
    gaps = np.diff(e)
    if gaps.size and gaps.min() < rtol * max(scale, np.finfo(float).tiny):
        warnings.warn(
            f"near-degenerate eigenvalues (min gap {gaps.min():.3e}); "
            "fluctuation sum assumes a non-degenerate spectrum",
            DegeneracyWarning,
            stacklevel=3,
        )
        return True
    return False


def fluctuations_infinite(ops: EigenbasisOperators, *, h_norm: float | None = None) -> float:
    """Infinite-time variance ``sum_{mu != nu} rho_{mu nu}^2 O_{mu nu}^2``."""
    if ops.dim > MAX_CLOSED_SUM_DIM:
        raise ValueError(f"dimension {ops.dim} exceeds {MAX_CLOSED_SUM_DIM}")
    check_degeneracy(ops.energies, h_norm)
    m2 = ops.weights**2
    return float(m2.sum() - np.trace(m2))


def fluctuations_windowed(
    ops: EigenbasisOperators,
    T: float,
    n_samples: int = 4096,
    *,
    t_start: float = 0.0,
    max_dim: int = MAX_TIME_DOMAIN_DIM,
) -> tuple[float, float]:
    """Finite-window variance and mean of the signal on ``[t_start, t_start + T]``.

    Trapezoid rule on a uniform grid. Frequencies above the grid's Nyquist
    limit alias into the estimate rather than raising; pick ``n_samples``
    well above ``T * (E_max - E_min) / pi`` when that matters. With the
    default ``t_start = 0`` the initial relaxation contributes about
    ``(o_free - o_de)^2 / (4 Gamma T)``, which must be small next to the
    infinite-time value for the two to agree.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if t_start < 0:
        raise ValueError("t_start must be >= 0")
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    if ops.dim > max_dim:
        raise ValueError(f"time-domain path limited to D <= {max_dim}")
    series = observable_series(ops, np.linspace(t_start, t_start + T, n_samples))
    mu = np.trapezoid(series.values, series.times) / T
    delta2 = np.trapezoid((series.values - mu) ** 2, series.times) / T
    return float(delta2), float(mu)


def free_evolution(w: StateWeights, obs: DiagonalObservable, energies_h0, t: float) -> float:
    """Signal under ``H0`` alone. Diagonal state and observable make it time independent."""
    if w.w.shape != obs.d.shape or w.w.shape != np.shape(energies_h0):
        raise ValueError("dimension mismatch")
    return float(np.dot(w.w, obs.d))
