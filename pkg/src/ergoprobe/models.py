"""Probe + device Hamiltonians, initial states and diagonal probe observables.

Basis convention shared by both models: the non-interacting index ``alpha``
runs 1..D and ``alpha - 1 = 2 * (device index - 1) + s`` with ``s = 0`` for a
probe in ``|up>`` and ``s = 1`` for ``|down>``. Odd ``alpha`` is therefore the
probe-up sector, which in 0-based numpy indexing is every *even* position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linalg import pauli_string


def odd_sector(dim: int) -> np.ndarray:
    """Boolean mask of 1-based odd ``alpha`` (probe up)."""
    return np.arange(dim) % 2 == 0


# --------------------------------------------------------------------------
# random-matrix model


@dataclass(frozen=True)
class RmtSpec:
    n: int
    g: float
    seed: int
    omega0: float | None = None

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ValueError(f"N must be even and >= 4, got {self.n}")
        if not (math.isfinite(self.g) and self.g >= 0):
            raise ValueError(f"g must be finite and >= 0, got {self.g}")
        if self.omega0 is None:
            object.__setattr__(self, "omega0", 1.0 / self.n)
        elif not math.isclose(self.omega0, 1.0 / self.n, rel_tol=1e-12):
            raise ValueError("omega0 must equal 1/N")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def n_b(self) -> int:
        return self.n // 2


def _normal_stream(seed: int, matrix_index: int, count: int) -> np.ndarray:
    # Philox keyed by (seed, matrix_index); entry k is the k-th draw of the stream
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(matrix_index),))
    return np.random.Generator(np.random.Philox(ss)).standard_normal(count)


def goe_matrix(n: int, variance: float, seed: int, matrix_index: int = 0) -> np.ndarray:
    """GOE sample: off-diagonal variance ``variance``, diagonal ``2 * variance``.

    The upper triangle is filled row-major from a counter-based stream, so
    the matrix depends only on ``(seed, matrix_index)``.
    """
    iu = np.triu_indices(n)
    draws = _normal_stream(seed, matrix_index, iu[0].size)
    scale = np.where(iu[0] == iu[1], math.sqrt(2.0 * variance), math.sqrt(variance))
    h = np.zeros((n, n))
    h[iu] = draws * scale
    h = h + np.triu(h, 1).T
    return h


def build_rmt(spec: RmtSpec) -> tuple[np.ndarray, np.ndarray]:
    """``(H0, V)`` with ``H0 = diag(alpha * omega0)`` and ``V`` from the GOE, ``<V_ab^2> = g^2/N``."""
    h0 = np.diag(np.arange(1, spec.n + 1) * spec.omega0)
    if spec.g == 0:
        return h0, np.zeros((spec.n, spec.n))
    v = goe_matrix(spec.n, spec.g**2 / spec.n, spec.seed)
    return h0, v


# --------------------------------------------------------------------------
# probe + spin-chain model

# Device scale 0.3 relative to (Bz, Bx, Jz, Jx) = (0.5, 0.525, 1, 1); see README.
CHAIN_DEFAULTS = dict(bz=0.15, bx=0.1575, jz=0.3, jx=0.3)


@dataclass(frozen=True)
class SpinChainSpec:
    n_total: int
    jz_sb: float = 0.2
    jx_sb: float = 0.2
    n_m: int = 2
    bz: float = CHAIN_DEFAULTS["bz"]
    bx: float = CHAIN_DEFAULTS["bx"]
    jz: float = CHAIN_DEFAULTS["jz"]
    jx: float = CHAIN_DEFAULTS["jx"]
    max_dim: int = field(default=linalg.MAX_DIM, compare=False)

    def __post_init__(self):
        if self.n_total < 3:
            raise ValueError("n_total must be >= 3")
        if not 2 <= self.n_m <= self.n_total:
            raise ValueError(f"n_m must lie in 2..{self.n_total}")
        for name in ("jz_sb", "jx_sb", "bz", "bx", "jz", "jx"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if 2**self.n_total > self.max_dim:
            raise linalg.DimensionError(f"2**{self.n_total} exceeds max_dim={self.max_dim}")

    @classmethod
    def with_coupling(cls, n_total: int, g_sb: float, **kw) -> "SpinChainSpec":
        return cls(n_total=n_total, jz_sb=g_sb, jx_sb=g_sb, **kw)

    @property
    def dim(self) -> int:
        return 2**self.n_total

    @property
    def n_b(self) -> int:
        return 2 ** (self.n_total - 1)


def device_hamiltonian(spec: SpinChainSpec) -> np.ndarray:
    """``H_B`` on sites 2..N, as a ``2**(N-1)`` matrix (device site j is register site j-1).

    Open boundaries: bonds run over j = 2..N-1.
    """
    m = spec.n_total - 1
    dim = 2**m
    h = np.zeros((dim, dim))
    for j in range(1, m + 1):
        h += spec.bz * pauli_string({j: "z"}, m) + spec.bx * pauli_string({j: "x"}, m)
    for j in range(1, m):
        h += spec.jz * pauli_string({j: "z", j + 1: "z"}, m)
        h += spec.jx * (
            pauli_string({j: "plus", j + 1: "minus"}, m)
            + pauli_string({j: "minus", j + 1: "plus"}, m)
        )
    return h


def build_spin_chain(spec: SpinChainSpec) -> tuple[np.ndarray, np.ndarray]:
    """``(H0, V) = (1 (x) H_B, H_SB)`` in the computational basis, probe = site 1 (least significant)."""
    n, nm = spec.n_total, spec.n_m
    h0 = linalg.kron(device_hamiltonian(spec), np.eye(2), max_dim=spec.max_dim)
    v = spec.jz_sb * pauli_string({1: "z", nm: "z"}, n)
    v += spec.jx_sb * (
        pauli_string({1: "plus", nm: "minus"}, n) + pauli_string({1: "minus", nm: "plus"}, n)
    )
    return h0, v


@dataclass(frozen=True)
class Frame:
    """Hamiltonian ``H = diag(e0) + v`` in the non-interacting basis ``|phi_alpha>``."""

    e0: np.ndarray
    v: np.ndarray

    @property
    def dim(self) -> int:
        return self.e0.shape[0]

    def hamiltonian(self) -> np.ndarray:
        h = self.v.copy()
        h[np.diag_indices_from(h)] += self.e0
        return h


def rmt_frame(spec: RmtSpec) -> Frame:
    h0, v = build_rmt(spec)
    return Frame(np.diag(h0).copy(), v)


def spin_chain_frame(spec: SpinChainSpec) -> Frame:
    """Rotate the chain into the eigenbasis of ``H0 = 1 (x) H_B``.

    ``H_B`` is diagonalized on the device alone, so the probe label survives
    the rotation and odd ``alpha`` stays probe-up. The coupling is rotated
    block-wise, ``V = sum_k A_k (x) p_k -> sum_k (Q^T A_k Q) (x) p_k``, which
    keeps every dense product at device size.
    """
    m = spec.n_total - 1
    e_b, q = np.linalg.eigh(device_hamiltonian(spec))
    site = spec.n_m - 1  # device register index of the coupled site
    z = q.T @ (pauli_string({site: "z"}, m) @ q)
    lower = q.T @ (pauli_string({site: "minus"}, m) @ q)
    sz = linalg.pauli_site("z", 1, 1)
    sp = linalg.pauli_site("plus", 1, 1)
    # sigma_+^(1) sigma_-^(nm) + h.c. -> lower (x) sp + lower^T (x) sm
    v = spec.jz_sb * np.kron(z, sz) + spec.jx_sb * (np.kron(lower, sp) + np.kron(lower.T, sp.T))
    v = 0.5 * (v + v.T)
    return Frame(np.repeat(e_b, 2), v)


# --------------------------------------------------------------------------
# initial state and observables


@dataclass(frozen=True)
class StateWeights:
    w: np.ndarray
    beta: float
    e0: float
    sector: np.ndarray
    z_beta: float  # sum over the sector of exp(-beta (E - e0))


def thermal_weights(energies, beta: float, sector=None, e0: float = 0.0, *, cutoff: bool = False) -> StateWeights:
    """Diagonal weights ``w_alpha ~ exp(-beta (E_alpha - e0))`` on ``sector``.

    ``sector`` defaults to the probe-up (odd ``alpha``) states. With
    ``cutoff`` only states with ``E_alpha >= e0`` are populated, so ``e0``
    acts as the low-energy edge of the thermal distribution instead of a
    mere offset.
    """
    energies = np.asarray(energies, dtype=float)
    if beta < 0 or not math.isfinite(beta):
        raise ValueError("beta must be finite and >= 0")
    sector = odd_sector(energies.size) if sector is None else np.asarray(sector, dtype=bool)
    if sector.shape != energies.shape:
        raise ValueError("sector mask and energies differ in length")
    if cutoff:
        sector = sector & (energies >= e0)
    if not sector.any():
        raise ValueError("empty sector")
    with np.errstate(over="ignore", under="ignore"):
        raw = np.where(sector, np.exp(-beta * (energies - e0)), 0.0)
    z = float(raw.sum())
    if z == 0.0:
        raise ValueError(
            f"all thermal weights underflow at beta={beta}; raise e0 or lower beta"
        )
    if not math.isfinite(z):
        raise ValueError(f"thermal weights overflow at beta={beta}; lower e0 or beta")
    w = raw / z
    return StateWeights(w=w, beta=float(beta), e0=float(e0), sector=sector, z_beta=z)


def basis_state_weights(dim: int, alpha: int) -> StateWeights:
    """Pure non-interacting state ``|phi_alpha>`` (0-based ``alpha``)."""
    w = np.zeros(dim)
    w[alpha] = 1.0
    return StateWeights(w=w, beta=math.inf, e0=0.0, sector=w > 0, z_beta=1.0)


@dataclass(frozen=True)
class DiagonalObservable:
    kind: str
    d: np.ndarray


def make_observable(kind: str, dim: int) -> DiagonalObservable:
    """Diagonal probe observables: ``sigma_z_probe`` and ``o_sym`` are +1/-1 on odd/even alpha, ``o_odd`` is 1/0."""
    if dim % 2:
        raise ValueError("dimension must be even")
    odd = odd_sector(dim)
    if kind in ("sigma_z_probe", "o_sym"):
        d = np.where(odd, 1.0, -1.0)
    elif kind == "o_odd":
        d = odd.astype(float)
    else:
        raise ValueError(f"unknown observable {kind!r}")
    return DiagonalObservable(kind, d)
