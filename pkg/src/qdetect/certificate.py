"""Optimality certificates for rejecting measurements.

A pair ``(X, delta)`` with ``X >= p_i rho_i`` for all ``i`` and
``X >= delta Delta`` bounds every feasible detection probability:
``Tr(X) - delta beta - P_D = sum_i Tr(Pi_i (X - p_i rho_i)) + Tr(Pi_0 (X - delta Delta)) >= 0``.
The bound is tight exactly when every product ``(X - p_i rho_i) Pi_i`` and
``(X - delta Delta) Pi_0`` vanishes.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .ensemble import StateEnsemble
from .errors import DimensionMismatch, InfeasibleInput, InvalidPOVM
from .linalg import herm, min_eig, spectral_norm
from .measurement import RejectingMeasurement, evaluate, validate_povm

OPTIMAL = "Optimal"
NOT_OPTIMAL = "NotOptimal"


@dataclass(frozen=True, eq=False)
class OptimalityCertificate:
    x: np.ndarray
    delta: float
    beta: float

    @property
    def dual_value(self) -> float:
        return float(np.trace(self.x).real) - self.delta * self.beta


@dataclass
class ResidualReport:
    feasibility: list          # min eigenvalue of X - p_i rho_i (i = 1..m), then X - delta Delta
    slackness: list            # spectral norm of (X - p_i rho_i) Pi_i, then (X - delta Delta) Pi_0
    slackness_symmetric: list  # same, for the Hermitian part of each product
    gap: float
    p_d: float
    dual_value: float
    kkt_tol: float
    gap_tol: float
    verdict: str
    notes: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.verdict == OPTIMAL

    @property
    def max_infeasibility(self) -> float:
        return max(0.0, -min(self.feasibility))

    @property
    def max_slackness(self) -> float:
        return max(self.slackness)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "p_d": self.p_d,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "feasibility_min_eigenvalues": list(self.feasibility),
            "slackness_norms": list(self.slackness),
            "slackness_symmetric_norms": list(self.slackness_symmetric),
            "kkt_tol": self.kkt_tol,
            "gap_tol": self.gap_tol,
            "notes": list(self.notes),
        }


def _slacks(ensemble: StateEnsemble, cert: OptimalityCertificate) -> list:
    x = herm(cert.x)
    out = [x - p * rho for p, rho in zip(ensemble.priors, ensemble.densities)]
    out.append(x - cert.delta * ensemble.delta)
    return out


def certificate_feasibility(ensemble: StateEnsemble, cert: OptimalityCertificate) -> list:
    """Minimum eigenvalue of every dual slack, conclusive outcomes first."""
    return [min_eig(s) for s in _slacks(ensemble, cert)]


def _check_dims(ensemble, measurement, cert):
    if cert.x.shape != (ensemble.n, ensemble.n):
        raise DimensionMismatch(f"certificate X is {cert.x.shape}, ensemble has n={ensemble.n}")
    if measurement.n != ensemble.n or measurement.m != ensemble.m:
        raise DimensionMismatch(
            f"measurement is (n={measurement.n}, m={measurement.m}), "
            f"ensemble is (n={ensemble.n}, m={ensemble.m})")


def check_optimality(ensemble: StateEnsemble, measurement: RejectingMeasurement,
                     cert: OptimalityCertificate, beta: float | None = None,
                     tol: Tolerances = DEFAULT_TOL) -> ResidualReport:
    """Residuals of dual feasibility and complementary slackness plus the duality gap.

    The verdict is ``Optimal`` when every dual slack has min eigenvalue
    ``>= -kkt_tol``, every slackness norm is ``<= kkt_tol`` and the gap is at
    most ``tol.gap``; ``kkt_tol`` is ``tol.kkt * (1 + ||X||)``.
    """
    _check_dims(ensemble, measurement, cert)
    if beta is None:
        beta = cert.beta
    notes = []
    report = validate_povm(measurement, tol)
    if not report.ok:
        notes.extend(report.failures)
    probs = evaluate(ensemble, measurement, tol, check=False)
    if abs(probs.p_i - beta) > tol.triple:
        notes.append(f"inconclusive rate {probs.p_i:.12g} differs from beta {beta:.12g}")
    slacks = _slacks(ensemble, cert)
    feas = [min_eig(s) for s in slacks]
    ops = list(measurement.conclusive) + [measurement.reject]
    raw, sym = [], []
    for s, op in zip(slacks, ops):
        prod = s @ op
        raw.append(spectral_norm(prod))
        sym.append(spectral_norm(herm(prod)))
    value = float(np.trace(cert.x).real) - cert.delta * beta
    gap = value - probs.p_d
    kkt_tol = tol.kkt * (1.0 + spectral_norm(cert.x))
    ok = (report.ok and not notes
          and min(feas) >= -kkt_tol
          and max(raw) <= kkt_tol
          and abs(gap) <= tol.gap)
    return ResidualReport(feas, raw, sym, gap, probs.p_d, value, kkt_tol, tol.gap,
                          OPTIMAL if ok else NOT_OPTIMAL, notes)


def duality_gap(ensemble: StateEnsemble, measurement: RejectingMeasurement,
                cert: OptimalityCertificate, beta: float | None = None,
                tol: Tolerances = DEFAULT_TOL) -> float:
    """``Tr(X) - delta beta - P_D`` for a feasible measurement and certificate."""
    _check_dims(ensemble, measurement, cert)
    if beta is None:
        beta = cert.beta
    try:
        probs = evaluate(ensemble, measurement, tol)
    except InvalidPOVM as exc:
        raise InfeasibleInput(f"measurement is not a valid POVM: {exc}") from exc
    if abs(probs.p_i - beta) > tol.triple:
        raise InfeasibleInput(f"inconclusive rate {probs.p_i:.12g} differs from beta {beta:.12g}")
    kkt_tol = tol.kkt * (1.0 + spectral_norm(cert.x))
    low = min(certificate_feasibility(ensemble, cert))
    if low < -kkt_tol:
        raise InfeasibleInput(f"certificate is not dual feasible (min eigenvalue {low:.3e})")
    return float(np.trace(cert.x).real) - cert.delta * beta - probs.p_d
