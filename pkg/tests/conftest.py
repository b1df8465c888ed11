import numpy as np
import pytest

from ergoprobe import linalg, models, theory


@pytest.fixture(scope="session")
def rmt500():
    """One GOE instance, N = 500, g = 0.05, seed 0, with its spectrum."""
    spec = models.RmtSpec(500, 0.05, 0)
    frame = models.rmt_frame(spec)
    return spec, frame, linalg.eigh(frame.hamiltonian()), theory.gamma_fgr(0.05, 500, spec.omega0)


@pytest.fixture(scope="session")
def rmt300():
    spec = models.RmtSpec(300, 0.05, 0)
    frame = models.rmt_frame(spec)
    return spec, frame, linalg.eigh(frame.hamiltonian()), theory.gamma_fgr(0.05, 300, spec.omega0)


def brute_chain(n, bz, bx, jz, jx, jz_sb, jx_sb, n_m=2):
    """Chain Hamiltonian assembled entry by entry from bit strings (bit j-1 of the index is site j, 0 = up)."""
    d = 2**n
    h = np.zeros((d, d))
    spin = lambda s, j: 1.0 - 2.0 * ((s >> (j - 1)) & 1)  # noqa: E731
    for s in range(d):
        for j in range(2, n + 1):
            h[s, s] += bz * spin(s, j)
            h[s ^ (1 << (j - 1)), s] += bx
        for j in range(2, n):
            h[s, s] += jz * spin(s, j) * spin(s, j + 1)
            if spin(s, j) != spin(s, j + 1):
                h[s ^ (1 << (j - 1)) ^ (1 << j), s] += jx
        h[s, s] += jz_sb * spin(s, 1) * spin(s, n_m)
        if spin(s, 1) != spin(s, n_m):
            h[s ^ 1 ^ (1 << (n_m - 1)), s] += jx_sb
    return h
