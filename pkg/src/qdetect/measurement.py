"""Rejecting measurements and their detection / error / inconclusive probabilities."""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .ensemble import StateEnsemble
from .errors import DimensionMismatch, InvalidPOVM
from .linalg import hermitian_deviation, herm, numerical_rank


@dataclass(frozen=True, eq=False)
class RejectingMeasurement:
    """POVM ``{Pi_0, Pi_1..Pi_m}``; ``Pi_0`` is the inconclusive outcome."""

    reject: np.ndarray
    conclusive: tuple

    @classmethod
    def from_operators(cls, reject, conclusive: Sequence, symmetrize: bool = True):
        conv = herm if symmetrize else (lambda a: np.asarray(a, dtype=complex))
        return cls(conv(np.asarray(reject, dtype=complex)),
                   tuple(conv(np.asarray(p, dtype=complex)) for p in conclusive))

    @classmethod
    def completed(cls, conclusive: Sequence):
        """Measurement whose reject operator is ``I - sum_i Pi_i``."""
        ops = [herm(np.asarray(p, dtype=complex)) for p in conclusive]
        n = ops[0].shape[0]
        return cls(herm(np.eye(n) - sum(ops)), tuple(ops))

    @property
    def n(self) -> int:
        return self.reject.shape[0]

    @property
    def m(self) -> int:
        return len(self.conclusive)

    @property
    def operators(self) -> list:
        return [self.reject, *self.conclusive]


@dataclass(frozen=True)
class ProbabilityTriple:
    p_d: float
    p_e: float
    p_i: float

    @property
    def total(self) -> float:
        return self.p_d + self.p_e + self.p_i


@dataclass
class PovmReport:
    min_eigenvalues: list
    resolution_residual: float
    hermitian_deviation: float
    ok: bool
    failures: list = field(default_factory=list)


@dataclass(frozen=True)
class RankEntry:
    state_rank: int
    operator_rank: int
    flag: bool


def validate_povm(measurement: RejectingMeasurement, tol: Tolerances = DEFAULT_TOL) -> PovmReport:
    ops = measurement.operators
    n = measurement.n
    failures = []
    if any(op.shape != (n, n) for op in ops):
        return PovmReport([], float("inf"), float("inf"), False, ["operator shapes differ"])
    dev = max(hermitian_deviation(op) for op in ops)
    if dev > tol.herm:
        failures.append(f"non-Hermitian operator (deviation {dev:.3e})")
    mins = [float(np.linalg.eigvalsh(herm(op))[0]) for op in ops]
    for k, low in enumerate(mins):
        if low < -tol.psd:
            failures.append(f"operator {k} has eigenvalue {low:.3e}")
    resid = float(np.max(np.abs(sum(ops) - np.eye(n))))
    if resid > tol.resolve:
        failures.append(f"resolution of identity off by {resid:.3e}")
    return PovmReport(mins, resid, dev, not failures, failures)


def _check_dims(ensemble: StateEnsemble, measurement: RejectingMeasurement) -> None:
    if measurement.n != ensemble.n or measurement.m != ensemble.m:
        raise DimensionMismatch(
            f"measurement is (n={measurement.n}, m={measurement.m}), "
            f"ensemble is (n={ensemble.n}, m={ensemble.m})")


def evaluate(ensemble: StateEnsemble, measurement: RejectingMeasurement,
             tol: Tolerances = DEFAULT_TOL, check: bool = True) -> ProbabilityTriple:
    """Correct-detection, error and inconclusive probabilities."""
    _check_dims(ensemble, measurement)
    if check:
        report = validate_povm(measurement, tol)
        if not report.ok:
            raise InvalidPOVM("; ".join(report.failures))
    # joint[i, j] = p_i Tr(rho_i Pi_j)
    rhos = np.array(ensemble.densities)
    pis = np.array(measurement.conclusive)
    joint = np.einsum("i,iab,jba->ij", ensemble.priors, rhos, pis).real
    p_d = float(np.trace(joint))
    p_e = float(joint.sum() - p_d)
    p_i = float(np.trace(ensemble.delta @ measurement.reject).real)
    return ProbabilityTriple(p_d, p_e, p_i)


def rank_profile(ensemble: StateEnsemble, measurement: RejectingMeasurement,
                 tol_rank: float = DEFAULT_TOL.rank) -> list:
    """Numerical ranks of each ``rho_i`` and ``Pi_i``; flags ``rank Pi_i > rank rho_i``.

    The flag is informational: the rank bound holds for optimal measurements only.
    """
    _check_dims(ensemble, measurement)
    out = []
    for rho, pi in zip(ensemble.densities, measurement.conclusive):
        r_state = numerical_rank(rho, tol_rank)
        r_op = numerical_rank(pi, tol_rank)
        out.append(RankEntry(r_state, r_op, r_op > r_state))
    return out


def mix(a: RejectingMeasurement, b: RejectingMeasurement, weight: float) -> RejectingMeasurement:
    """Convex combination ``(1 - weight) a + weight b``."""
    return RejectingMeasurement(
        (1 - weight) * a.reject + weight * b.reject,
        tuple((1 - weight) * x + weight * y for x, y in zip(a.conclusive, b.conclusive)),
    )


def reject_all(n: int, m: int) -> RejectingMeasurement:
    return RejectingMeasurement(np.eye(n, dtype=complex), tuple(np.zeros((n, n), complex) for _ in range(m)))


def adjust_inconclusive(ensemble: StateEnsemble, measurement: RejectingMeasurement,
                        beta: float) -> RejectingMeasurement:
    """Nudge a measurement so that its inconclusive rate is exactly ``beta``.

    The reject operator is first reset to ``I - sum_i Pi_i``.  A rate that is
    too low is raised by mixing with reject-all; one that is too high is
    lowered by mixing with the same measurement whose reject operator has been
    merged into the most likely conclusive outcome.  Both moves stay inside
    the POVM set and change ``P_D`` by at most the size of the correction.
    """
    meas = RejectingMeasurement.completed(measurement.conclusive)
    p_i = float(np.trace(ensemble.delta @ meas.reject).real)
    if p_i < beta:
        w = (beta - p_i) / (1.0 - p_i)
        return mix(meas, reject_all(meas.n, meas.m), w)
    if p_i > beta:
        joint = [p * np.trace(rho @ meas.reject).real for p, rho in zip(ensemble.priors, ensemble.densities)]
        k = int(np.argmax(joint))
        merged = list(meas.conclusive)
        merged[k] = merged[k] + meas.reject
        other = RejectingMeasurement(np.zeros_like(meas.reject), tuple(merged))
        return mix(meas, other, (p_i - beta) / p_i)
    return meas
