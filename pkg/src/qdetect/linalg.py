"""Dense Hermitian linear algebra helpers.

Hermitian ``n x n`` matrices form a real vector space of dimension ``n**2``.
:func:`hermitian_basis` returns an orthonormal basis of that space under the
trace inner product ``<A, B> = Tr(A B)``, which lets the SDP engine work on
plain real coordinate vectors.
"""

from functools import lru_cache

import numpy as np


def herm(a: np.ndarray) -> np.ndarray:
    """Hermitian part ``(A + A*) / 2``."""
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def hermitian_deviation(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T)))


def min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(herm(a))[0])


def numerical_rank(a: np.ndarray, tol: float) -> int:
    w = np.linalg.eigvalsh(herm(a))
    return int(np.sum(w > tol))


@lru_cache(maxsize=32)
def _basis(n: int) -> np.ndarray:
    mats = []
    for k in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[k, k] = 1.0
        mats.append(e)
    s = 1.0 / np.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = e[k, j] = s
            mats.append(e)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = -1j * s
            e[k, j] = 1j * s
            mats.append(e)
    out = np.array(mats)
    out.setflags(write=False)
    return out


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal real basis of the Hermitian ``n x n`` matrices, shape ``(n*n, n, n)``.

    Ordering: ``n`` diagonal units, then ``n(n-1)/2`` symmetric off-diagonal
    units, then ``n(n-1)/2`` antisymmetric (imaginary) units; off-diagonal
    units carry a ``1/sqrt(2)`` scale.
    """
    return _basis(int(n))


def to_coords(a: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in :func:`hermitian_basis`."""
    a = np.asarray(a)
    n = a.shape[0]
    basis = hermitian_basis(n)
    return np.einsum("kab,ba->k", basis, a).real


def from_coords(x: np.ndarray, n: int) -> np.ndarray:
    return np.tensordot(np.asarray(x, dtype=float), hermitian_basis(n), axes=1)


def eigh_inverse(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(herm(a))
    return (v / w) @ v.conj().T


def eigh_sqrt(a: np.ndarray, power: float = 0.5) -> np.ndarray:
    """``A**power`` for a positive definite Hermitian ``A``."""
    w, v = np.linalg.eigh(herm(a))
    return (v * np.clip(w, 0.0, None) ** power) @ v.conj().T


def null_space(a: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal columns spanning eigenvectors of ``A`` with eigenvalue ``<= tol``."""
    w, v = np.linalg.eigh(herm(a))
    return v[:, w <= tol]


def spectral_norm(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))
