import numpy as np
from hypothesis import given, settings, strategies as st

from qdetect.linalg import (eigh_inverse, eigh_sqrt, from_coords, hermitian_basis, min_eig, null_space,
                            numerical_rank, to_coords)


def _herm(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 5))
def test_coordinates_roundtrip(seed, n):
    a = _herm(seed, n)
    x = to_coords(a)
    assert x.shape == (n * n,) and np.isrealobj(x)
    assert np.allclose(from_coords(x, n), a)


def test_basis_is_orthonormal():
    b = hermitian_basis(3)
    gram = np.einsum("iab,jba->ij", b, b).real
    assert np.allclose(gram, np.eye(9))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 4))
def test_matrix_functions(seed, n):
    a = _herm(seed, n)
    pd = a @ a + np.eye(n)
    r = eigh_sqrt(pd)
    assert np.allclose(r @ r, pd)
    assert np.allclose(eigh_inverse(pd) @ pd, np.eye(n))
    assert abs(min_eig(pd) - np.linalg.eigvalsh(pd)[0]) < 1e-12


def test_rank_and_null_space():
    v = np.array([1.0, 1j, 0]) / np.sqrt(2)
    p = np.outer(v, v.conj())
    assert numerical_rank(p, 1e-10) == 1
    ns = null_space(p, 1e-10)
    assert ns.shape == (3, 2)
    assert np.allclose(p @ ns, 0)
