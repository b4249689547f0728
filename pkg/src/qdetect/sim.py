"""Scaled inverse measurement (SIM) and its closed-form optimality certificate.

For an inconclusive rate ``beta`` the SIM has factors
``mu_i = gamma Delta^-1 psi_i`` with ``gamma**2 = (1 - beta) / n`` and reject
operator ``I - gamma**2 Delta^-1``.  It is a valid measurement exactly when
``beta >= beta_min = 1 - n lambda_min(Delta)``.  When every
``psi_i* Delta^-1 psi_i`` equals one common multiple ``alpha I`` the SIM is
optimal, witnessed by ``X = alpha Delta`` and ``delta = alpha``.
"""

from dataclasses import dataclass

import numpy as np

from .certificate import OptimalityCertificate
from .config import DEFAULT_TOL, Tolerances
from .ensemble import StateEnsemble
from .errors import BetaBelowMin, ConditionFails
from .linalg import herm
from .measurement import RejectingMeasurement

# slack allowed when comparing beta with the computed beta_min
BETA_SLACK = 1e-12


@dataclass(frozen=True)
class SimParameters:
    beta: float
    gamma: float
    beta_min: float
    alpha: float | None = None


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    alpha: float | None
    deviation: float


def _check_beta(ensemble: StateEnsemble, beta: float) -> float:
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    bmin = ensemble.spectrum().beta_min
    if beta < bmin - BETA_SLACK:
        raise BetaBelowMin(f"beta={beta:.12g} is below beta_min={bmin:.12g}; the SIM reject operator is indefinite")
    return bmin


def sim_parameters(ensemble: StateEnsemble, beta: float, tol: Tolerances = DEFAULT_TOL) -> SimParameters:
    bmin = _check_beta(ensemble, beta)
    cond = sim_condition_check(ensemble, tol)
    return SimParameters(beta, float(np.sqrt((1.0 - beta) / ensemble.n)), bmin,
                         cond.alpha if cond.holds else None)


def sim_factors(ensemble: StateEnsemble, beta: float) -> list:
    """SIM factors ``mu_i = gamma Delta^-1 psi_i``."""
    _check_beta(ensemble, beta)
    gamma = np.sqrt((1.0 - beta) / ensemble.n)
    dinv = ensemble.delta_inverse()
    return [gamma * dinv @ psi for psi in ensemble.weighted_factors]


def sim_measurement(ensemble: StateEnsemble, beta: float) -> RejectingMeasurement:
    mus = sim_factors(ensemble, beta)
    gamma2 = (1.0 - beta) / ensemble.n
    reject = herm(np.eye(ensemble.n) - gamma2 * ensemble.delta_inverse())
    return RejectingMeasurement(reject, tuple(herm(mu @ mu.conj().T) for mu in mus))


def condition_matrices(ensemble: StateEnsemble) -> list:
    """``psi_i* Delta^-1 psi_i`` for every state."""
    dinv = ensemble.delta_inverse()
    return [herm(psi.conj().T @ dinv @ psi) for psi in ensemble.weighted_factors]


def scalar_condition(mats, tol_cond: float) -> ConditionReport:
    """Test whether every matrix in ``mats`` is one common multiple of the identity."""
    diag = np.concatenate([np.diag(m).real for m in mats])
    alpha = float(diag.mean())
    dev = max(float(np.max(np.abs(m - alpha * np.eye(m.shape[0])))) for m in mats)
    holds = dev <= tol_cond * max(1.0, abs(alpha))
    return ConditionReport(holds, alpha if holds else None, dev)


def sim_condition_check(ensemble: StateEnsemble, tol: Tolerances = DEFAULT_TOL) -> ConditionReport:
    """Sufficient condition for SIM optimality: ``psi_i* Delta^-1 psi_i = alpha I`` for all ``i``."""
    return scalar_condition(condition_matrices(ensemble), tol.cond)


def sim_certificate(ensemble: StateEnsemble, beta: float, tol: Tolerances = DEFAULT_TOL) -> OptimalityCertificate:
    cond = sim_condition_check(ensemble, tol)
    if not cond.holds:
        raise ConditionFails(f"psi_i* Delta^-1 psi_i is not a common multiple of I (deviation {cond.deviation:.3e})")
    _check_beta(ensemble, beta)
    return OptimalityCertificate(cond.alpha * ensemble.delta, cond.alpha, beta)


def per_state_detection(ensemble: StateEnsemble, measurement: RejectingMeasurement) -> list:
    """Conditional correct-detection probability ``Tr(rho_i Pi_i)`` of each state."""
    return [float(np.trace(rho @ pi).real) for rho, pi in zip(ensemble.densities, measurement.conclusive)]


def per_state_joint(ensemble: StateEnsemble, measurement: RejectingMeasurement) -> list:
    """Joint probability ``p_i Tr(rho_i Pi_i)`` of sending state ``i`` and detecting it.

    Under the SIM optimality condition these are all equal to ``gamma**2 alpha**2 r``
    for equal-rank states.
    """
    return [p * v for p, v in zip(ensemble.priors, per_state_detection(ensemble, measurement))]
