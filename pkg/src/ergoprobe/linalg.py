"""Dense real-symmetric matrices, tensor products and Pauli embeddings.

Everything downstream consumes a :class:`Spectrum`: ascending energies and an
orthonormal eigenvector matrix whose column ``mu`` holds the coefficients
``c_mu(alpha)`` of eigenstate ``mu`` in the non-interacting basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

MAX_DIM = 2**16

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]]),
    # |up> is basis index 0, so sigma_+ = |up><down|
    "plus": np.array([[0.0, 1.0], [0.0, 0.0]]),
    "minus": np.array([[0.0, 0.0], [1.0, 0.0]]),
}


class DimensionError(ValueError):
    """Raised when a matrix would exceed the configured dimension guard."""


def sym_matrix(a, *, check: bool = True) -> np.ndarray:
    """Return ``a`` as a float64 symmetric matrix.

    Entries are symmetrized as ``(a + a.T) / 2`` so the result is exactly
    symmetric. With ``check`` the input must already be symmetric up to
    round-off; a visibly asymmetric input is a bug upstream.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValueError("matrix dimension must be at least 2")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if check:
        scale = max(np.abs(a).max(), 1.0)
        if np.abs(a - a.T).max() > 1e-10 * scale:
            raise ValueError("matrix is not symmetric")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def orthonormality_error(self) -> float:
        q = self.vectors
        return float(np.abs(q.T @ q - np.eye(self.dim)).max())

    def reconstruct(self) -> np.ndarray:
        q = self.vectors
        return (q * self.energies) @ q.T


def _fix_signs(q: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive; first index wins ties
    idx = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[idx, np.arange(q.shape[1])])
    signs[signs == 0] = 1.0
    return q * signs


def eigh(h) -> Spectrum:
    """Full eigendecomposition of a dense real symmetric matrix.

    LAPACK ``syevd`` via :func:`numpy.linalg.eigh`. Columns are sign-fixed so
    the entry of largest magnitude is positive, which makes serialized
    eigenvectors reproducible between runs.
    """
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        bad = np.argwhere(~np.isfinite(h))[0]
        raise ValueError(f"non-finite entry at index {tuple(int(i) for i in bad)}")
    h = sym_matrix(h)
    energies, vectors = np.linalg.eigh(h)
    vectors = _fix_signs(vectors)
    for a in (energies, vectors):
        a.setflags(write=False)
    return Spectrum(energies, vectors)


def kron(a, b, *, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product with a dimension guard.

    ``kron(a, b)[i*p + k, j*q + l] == a[i, j] * b[k, l]`` with ``(p, q) = b.shape``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise DimensionError(f"kron result {rows}x{cols} exceeds max_dim={max_dim}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("kron operands must be finite")
    return np.kron(a, b)


def pauli_string(ops: dict, n_sites: int, *, max_dim: int = MAX_DIM) -> np.ndarray:
    """Product of single-site operators on distinct sites, e.g. ``{1: "plus", 2: "minus"}``.

    Built as one Kronecker chain, so no dense matrix products are needed.
    Site 1 is the least-significant bit of the composite index, i.e. the full
    operator is ``op_n (x) ... (x) op_1``.
    """
    for site, kind in ops.items():
        if kind == "y":
            raise ValueError("sigma_y is complex; only real kinds are supported")
        if kind not in _PAULI:
            raise ValueError(f"unknown Pauli kind {kind!r}")
        if not 1 <= site <= n_sites:
            raise ValueError(f"site {site} out of range 1..{n_sites}")
    if 2**n_sites > max_dim:
        raise DimensionError(f"2**{n_sites} exceeds max_dim={max_dim}")
    factors = [_PAULI[ops[k]] if k in ops else np.eye(2) for k in range(n_sites, 0, -1)]
    return reduce(np.kron, factors)


def pauli_site(kind: str, site: int, n_sites: int, *, max_dim: int = MAX_DIM) -> np.ndarray:
    """Single-site Pauli or ladder operator (``x``, ``z``, ``plus``, ``minus``) on ``site``."""
    return pauli_string({site: kind}, n_sites, max_dim=max_dim)
