import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from ergoprobe import linalg


def test_eigh_two_level_closed_form():
    a, b, c = 0.3, -0.7, 1.1
    s = linalg.eigh([[a, b], [b, c]])
    half = np.hypot((a - c) / 2, b)
    assert_allclose(s.energies, [(a + c) / 2 - half, (a + c) / 2 + half], rtol=1e-14)
    assert s.orthonormality_error() < 1e-14


def test_eigh_sign_convention():
    s = linalg.eigh(np.diag([2.0, 1.0, 3.0]) + 0.1)
    q = s.vectors
    idx = np.argmax(np.abs(q), axis=0)
    assert np.all(q[idx, np.arange(3)] > 0)


def test_eigh_reconstructs_and_is_read_only():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(40, 40))
    h = a + a.T
    s = linalg.eigh(h)
    assert_allclose(s.reconstruct(), h, atol=1e-12)
    assert np.all(np.diff(s.energies) >= 0)
    with pytest.raises(ValueError):
        s.energies[0] = 1.0


def test_eigh_rejects_bad_input():
    h = np.eye(3)
    h[1, 2] = h[2, 1] = np.nan
    with pytest.raises(ValueError, match=r"\(1, 2\)"):
        linalg.eigh(h)
    with pytest.raises(ValueError, match="symmetric"):
        linalg.eigh([[0.0, 1.0], [0.5, 0.0]])
    with pytest.raises(ValueError, match="square"):
        linalg.eigh(np.zeros((2, 3)))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_eigh_property_orthonormal(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    s = linalg.eigh(a + a.T)
    assert s.orthonormality_error() < 1e-12
    assert_allclose(s.reconstruct(), a + a.T, atol=1e-11)


def test_pauli_site_ordering():
    # site 1 is the least-significant bit, up = index 0
    assert_array_equal(np.diag(linalg.pauli_site("z", 1, 2)), [1, -1, 1, -1])
    assert_array_equal(np.diag(linalg.pauli_site("z", 2, 2)), [1, 1, -1, -1])
    assert_array_equal(linalg.pauli_site("plus", 1, 1), [[0, 1], [0, 0]])
    xx = linalg.pauli_string({1: "x", 2: "x"}, 2)
    assert_array_equal(xx, np.fliplr(np.eye(4)))


def test_pauli_ladder_algebra():
    sp = linalg.pauli_site("plus", 2, 3)
    sm = linalg.pauli_site("minus", 2, 3)
    z = linalg.pauli_site("z", 2, 3)
    assert_allclose(sp @ sm - sm @ sp, z)
    assert_allclose(sp + sm, linalg.pauli_site("x", 2, 3))


def test_pauli_rejections():
    with pytest.raises(ValueError, match="complex"):
        linalg.pauli_site("y", 1, 2)
    with pytest.raises(ValueError, match="out of range"):
        linalg.pauli_site("z", 3, 2)
    with pytest.raises(linalg.DimensionError):
        linalg.pauli_site("z", 1, 5, max_dim=16)


def test_kron_layout_and_guard():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[0.0, 5.0], [6.0, 7.0]])
    k = linalg.kron(a, b)
    assert k[1 * 2 + 1, 0 * 2 + 1] == a[1, 0] * b[1, 1]
    with pytest.raises(linalg.DimensionError):
        linalg.kron(np.eye(8), np.eye(8), max_dim=32)
    with pytest.raises(ValueError):
        linalg.kron([[np.inf]], np.eye(2))
