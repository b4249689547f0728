"""State ensembles: density operators, priors, factors and the ensemble average.

A factor of a density operator ``rho`` is any matrix ``phi`` with
``phi phi* = rho``.  Weighted factors are ``psi_i = sqrt(p_i) phi_i`` and the
ensemble average is ``Delta = sum_i p_i rho_i = Psi Psi*`` where ``Psi`` stacks
the weighted factors side by side.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    DeltaSingular,
    DimensionMismatch,
    NonHermitian,
    NotPSD,
    PriorsInvalid,
    QNotCoisometry,
    TraceNotOne,
)
from .linalg import eigh_inverse, hermitian_deviation, herm


@dataclass(frozen=True)
class State:
    """One ensemble member given either as a density matrix or as a factor."""

    prior: float
    density: np.ndarray | None = None
    factor: np.ndarray | None = None


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray  # descending
    lambda_min: float
    beta_min: float


@dataclass(frozen=True, eq=False)
class StateEnsemble:
    priors: np.ndarray
    densities: tuple
    factors: tuple
    delta: np.ndarray

    @property
    def n(self) -> int:
        return self.delta.shape[0]

    @property
    def m(self) -> int:
        return len(self.priors)

    @property
    def weighted_factors(self) -> tuple:
        return tuple(np.sqrt(p) * f for p, f in zip(self.priors, self.factors))

    @property
    def stacked(self) -> np.ndarray:
        """``Psi``: all weighted factors as one ``n x sum(r_i)`` matrix."""
        return np.hstack(self.weighted_factors)

    @property
    def ranks(self) -> tuple:
        return tuple(f.shape[1] for f in self.factors)

    @property
    def is_pure(self) -> bool:
        return all(r == 1 for r in self.ranks)

    def spectrum(self) -> SpectralSummary:
        w = np.linalg.eigvalsh(self.delta)[::-1]
        lam = float(w[-1])
        return SpectralSummary(w, lam, max(0.0, 1.0 - self.n * lam))

    def delta_inverse(self) -> np.ndarray:
        return eigh_inverse(self.delta)

    def with_factors(self, qs: Sequence[np.ndarray], tol: Tolerances = DEFAULT_TOL) -> "StateEnsemble":
        """Ensemble with each factor ``phi_i`` replaced by ``phi_i Q_i``."""
        if len(qs) != self.m:
            raise DimensionMismatch(f"expected {self.m} matrices, got {len(qs)}")
        factors = []
        for f, q in zip(self.factors, qs):
            q = np.atleast_2d(np.asarray(q, dtype=complex))
            _check_coisometry(q, f.shape[1], tol)
            factors.append(f @ q)
        return build_ensemble([State(p, factor=f) for p, f in zip(self.priors, factors)], tol)


def _check_coisometry(q: np.ndarray, rows: int, tol: Tolerances) -> None:
    if q.shape[0] != rows:
        raise DimensionMismatch(f"Q has {q.shape[0]} rows, factor has {rows} columns")
    dev = np.max(np.abs(q @ q.conj().T - np.eye(rows)))
    if dev > tol.factor:
        raise QNotCoisometry(f"Q Q* deviates from identity by {dev:.3e}")


def factorize(rho: np.ndarray, tol_rank: float = DEFAULT_TOL.rank) -> np.ndarray:
    """Factor of a PSD matrix from its eigendecomposition, dropping eigenvalues ``<= tol_rank``."""
    w, v = np.linalg.eigh(herm(rho))
    keep = w > tol_rank
    if not np.any(keep):
        keep = w >= w.max()
    return v[:, keep] * np.sqrt(w[keep])


def _as_state(spec) -> State:
    if isinstance(spec, State):
        return spec
    if isinstance(spec, dict):
        return State(spec["prior"], spec.get("density"), spec.get("factor"))
    prior, mat = spec
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim == 1:
        return State(prior, factor=mat[:, None])
    if mat.shape[0] == mat.shape[1]:
        return State(prior, density=mat)
    return State(prior, factor=mat)


def build_ensemble(specs: Iterable, tol: Tolerances = DEFAULT_TOL) -> StateEnsemble:
    """Validate states and priors and derive factors and the ensemble average.

    ``specs`` holds :class:`State` objects, ``{"prior", "density"|"factor"}``
    dicts, or ``(prior, matrix)`` pairs.  In a pair a square matrix is read as
    a density operator, a 1-D array as a state vector and any other shape as
    a factor.
    """
    states = [_as_state(s) for s in specs]
    if not states:
        raise ValueError("an ensemble needs at least one state")
    priors = np.array([float(s.prior) for s in states])
    if np.any(~np.isfinite(priors)) or np.any(priors <= 0):
        raise PriorsInvalid(f"priors must be positive, got {priors.tolist()}")
    total = priors.sum()
    if abs(total - 1.0) > tol.prob:
        raise PriorsInvalid(f"priors sum to {total:.12g}, not 1")
    priors = priors / total

    n = None
    densities, factors = [], []
    for k, s in enumerate(states):
        if (s.density is None) == (s.factor is None):
            raise ValueError(f"state {k}: give exactly one of density or factor")
        if s.density is not None:
            rho = np.asarray(s.density, dtype=complex)
            if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
                raise DimensionMismatch(f"state {k}: density must be square, got {rho.shape}")
            if hermitian_deviation(rho) > tol.herm:
                raise NonHermitian(f"state {k}: density operator is not Hermitian")
            rho = herm(rho)
            low = np.linalg.eigvalsh(rho)[0]
            if low < -tol.psd:
                raise NotPSD(f"state {k}: min eigenvalue {low:.3e} < 0")
            phi = factorize(rho, tol.rank)
        else:
            phi = np.asarray(s.factor, dtype=complex)
            if phi.ndim == 1:
                phi = phi[:, None]
            if phi.ndim != 2 or not 1 <= phi.shape[1] <= phi.shape[0]:
                raise DimensionMismatch(f"state {k}: factor must be n x r with 1 <= r <= n, got {phi.shape}")
            rho = phi @ phi.conj().T
        tr = np.trace(rho).real
        if abs(tr - 1.0) > tol.trace:
            raise TraceNotOne(f"state {k}: trace {tr:.12g}")
        if n is None:
            n = rho.shape[0]
        elif rho.shape[0] != n:
            raise DimensionMismatch(f"state {k}: dimension {rho.shape[0]} != {n}")
        densities.append(rho)
        factors.append(phi)

    delta = herm(sum(p * r for p, r in zip(priors, densities)))
    w = np.linalg.eigvalsh(delta)
    deficient = int(np.sum(w <= tol.rank))
    if deficient:
        raise DeltaSingular(
            f"ensemble average is singular: the states span only {n - deficient} of {n} "
            f"dimensions ({deficient} deficient)")
    return StateEnsemble(priors, tuple(densities), tuple(factors), delta)


def pure_ensemble(vectors: Sequence, priors: Sequence | None = None, tol: Tolerances = DEFAULT_TOL) -> StateEnsemble:
    """Ensemble of normalised state vectors; equal priors by default."""
    vectors = [np.asarray(v, dtype=complex).ravel() for v in vectors]
    if priors is None:
        priors = [1.0 / len(vectors)] * len(vectors)
    return build_ensemble([State(p, factor=v[:, None]) for p, v in zip(priors, vectors)], tol)


def ensemble_average(ensemble: StateEnsemble) -> np.ndarray:
    return ensemble.delta


def beta_min(ensemble: StateEnsemble) -> float:
    """Smallest inconclusive rate ``1 - n * lambda_min(Delta)`` at which the SIM exists."""
    return ensemble.spectrum().beta_min


def refactor_check(phi: np.ndarray, q: np.ndarray, ensemble: StateEnsemble | None = None,
                   index: int | None = None, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Check that ``phi Q`` is again a factor of ``phi phi*``.

    With an ensemble and the index of ``phi`` in it, additionally checks that
    the nonzero spectrum of ``psi_i* Delta^-1 psi_i`` is unchanged when
    ``phi_i`` is replaced by ``phi Q``.
    """
    phi = np.asarray(phi, dtype=complex)
    if phi.ndim == 1:
        phi = phi[:, None]
    q = np.atleast_2d(np.asarray(q, dtype=complex))
    _check_coisometry(q, phi.shape[1], tol)
    phi2 = phi @ q
    if np.max(np.abs(phi2 @ phi2.conj().T - phi @ phi.conj().T)) > tol.factor:
        return False
    if ensemble is None:
        return True
    qs = [np.eye(f.shape[1]) for f in ensemble.factors]
    qs[index] = q
    other = ensemble.with_factors(qs, tol)
    if np.max(np.abs(other.delta - ensemble.delta)) > tol.factor:
        return False
    psi = ensemble.weighted_factors[index]
    psi2 = other.weighted_factors[index]
    m1 = psi.conj().T @ ensemble.delta_inverse() @ psi
    m2 = psi2.conj().T @ other.delta_inverse() @ psi2
    e1 = np.linalg.eigvalsh(herm(m1))
    e2 = np.linalg.eigvalsh(herm(m2))
    e1 = np.sort(e1[np.abs(e1) > tol.factor])
    e2 = np.sort(e2[np.abs(e2) > tol.factor])
    return e1.shape == e2.shape and bool(np.all(np.abs(e1 - e2) <= tol.factor))
