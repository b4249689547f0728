"""Primal and dual detection SDPs, and recovery of the measurement from the dual.

Primal: maximise ``sum_i p_i Tr(rho_i Pi_i)`` over PSD ``Pi_0..Pi_m`` with
``sum_i Pi_i = I`` and ``Tr(Delta Pi_0) = beta``.

Dual: minimise ``Tr(X) - delta beta`` over Hermitian ``X`` and real ``delta``
with ``X >= p_i rho_i`` and ``X >= delta Delta``.  The dual carries the barrier
on explicit slack blocks ``Z_i = X - p_i rho_i`` and ``Z_0 = X - delta Delta``.

At ``beta = 0`` the inconclusive operator is forced to zero (``Delta`` is
positive definite), so both problems drop it together with ``delta``; the
reported ``delta`` is then the largest value keeping ``X >= delta Delta``.
"""

from dataclasses import dataclass

import numpy as np

from ..certificate import OptimalityCertificate, certificate_feasibility
from ..config import DEFAULT_TOL, Tolerances
from ..ensemble import StateEnsemble
from ..errors import RecoveryInfeasible, SolverError
from ..linalg import eigh_sqrt, from_coords, herm, hermitian_basis
from ..measurement import (ProbabilityTriple, RejectingMeasurement, adjust_inconclusive, evaluate,
                           validate_povm)
from .problem import SdpProblem
from .solver import OPTIMAL, SdpSolution, SolverOptions, solve

# beta at or below this is treated as exactly zero
BETA_ZERO = 1e-14


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    return beta


def _primal(ensemble: StateEnsemble, beta: float, with_reject: bool) -> SdpProblem:
    n, m = ensemble.n, ensemble.m
    prob = SdpProblem(sense="max", label="primal")
    names = [f"pi{i}" for i in range(1, m + 1)]
    if with_reject:
        prob.add_block("pi0", n)
    for name in names:
        prob.add_block(name, n)
    for name, p, rho in zip(names, ensemble.priors, ensemble.densities):
        prob.objective[name] = p * rho
    eye = np.eye(n)
    resolution = {name: [(1.0, eye)] for name in (["pi0"] if with_reject else []) + names}
    prob.add_matrix_equality(resolution, eye)
    if with_reject:
        prob.add_equality({"pi0": ensemble.delta}, beta)
    if with_reject and beta > 0:
        start = {"pi0": beta * eye}
        start.update({name: (1.0 - beta) / m * eye for name in names})
        prob.start = start
    elif not with_reject:
        prob.start = {name: eye / m for name in names}
    return prob


def build_primal(ensemble: StateEnsemble, beta: float) -> SdpProblem:
    """Full primal problem with blocks ``pi0..pim``.

    A strictly feasible start is attached for ``beta > 0``; at ``beta = 0``
    no interior point exists and :func:`solve_primal` eliminates ``pi0``.
    """
    return _primal(ensemble, _check_beta(beta), with_reject=True)


def build_dual(ensemble: StateEnsemble, beta: float) -> SdpProblem:
    beta = _check_beta(beta)
    n, m = ensemble.n, ensemble.m
    with_delta = beta > BETA_ZERO
    prob = SdpProblem(sense="min", label="dual")
    prob.add_block("X", n, psd=False)
    eye = np.eye(n)
    prob.objective["X"] = eye
    if with_delta:
        prob.add_scalar("delta")
        prob.objective["delta"] = -beta
    x0 = (1.0 + float(np.max(ensemble.priors))) * eye
    start = {"X": x0}
    for i, (p, rho) in enumerate(zip(ensemble.priors, ensemble.densities), start=1):
        prob.add_block(f"z{i}", n)
        prob.add_matrix_equality({f"z{i}": [(1.0, eye)], "X": [(-1.0, eye)]}, -p * rho)
        start[f"z{i}"] = x0 - p * rho
    if with_delta:
        prob.add_block("z0", n)
        prob.add_matrix_equality({"z0": [(1.0, eye)], "X": [(-1.0, eye)], "delta": ensemble.delta},
                                 np.zeros((n, n)))
        start["z0"] = x0
        start["delta"] = 0.0
    prob.start = start
    return prob


@dataclass
class PrimalResult:
    measurement: RejectingMeasurement
    certificate: OptimalityCertificate
    objective: float
    solution: SdpSolution


@dataclass
class DualResult:
    x: np.ndarray
    delta: float
    value: float
    solution: SdpSolution
    implied: list  # primal operators implied by the dual barrier point: Pi_1..Pi_m, then Pi_0

    @property
    def certificate(self) -> OptimalityCertificate:
        return OptimalityCertificate(self.x, self.delta, self.beta)

    beta: float = 0.0


def _largest_delta(ensemble: StateEnsemble, x: np.ndarray) -> float:
    """Largest ``delta`` with ``X >= delta Delta``."""
    half = eigh_sqrt(ensemble.delta, -0.5)
    return float(np.linalg.eigvalsh(herm(half @ x @ half))[0])


def _require_optimal(sol: SdpSolution, what: str) -> None:
    if sol.status != OPTIMAL:
        raise SolverError(f"{what} SDP stopped with status {sol.status}")


def solve_primal(ensemble: StateEnsemble, beta: float, options: SolverOptions | None = None) -> PrimalResult:
    beta = _check_beta(beta)
    n, m = ensemble.n, ensemble.m
    with_reject = beta > BETA_ZERO
    prob = _primal(ensemble, beta, with_reject)
    sol = solve(prob, options)
    _require_optimal(sol, "primal")
    reject = sol["pi0"] if with_reject else np.zeros((n, n), complex)
    conclusive = [sol[f"pi{i}"] for i in range(1, m + 1)]
    meas = RejectingMeasurement.from_operators(reject, conclusive)
    if with_reject:
        meas = adjust_inconclusive(ensemble, meas, beta)
    y = sol.multipliers
    x = from_coords(y[: n * n], n)
    if with_reject:
        delta = -float(y[n * n])
    else:
        delta = _largest_delta(ensemble, x)
    return PrimalResult(meas, OptimalityCertificate(herm(x), delta, beta), sol.objective, sol)


def solve_dual(ensemble: StateEnsemble, beta: float, options: SolverOptions | None = None) -> DualResult:
    beta = _check_beta(beta)
    n, m = ensemble.n, ensemble.m
    prob = build_dual(ensemble, beta)
    sol = solve(prob, options)
    _require_optimal(sol, "dual")
    x = herm(sol["X"])
    with_delta = "delta" in prob.scalars
    delta = sol["delta"] if with_delta else _largest_delta(ensemble, x)
    # equality multipliers of Z_i - X = -p_i rho_i are the implied primal operators
    y = sol.multipliers
    implied = [from_coords(-y[k * n * n:(k + 1) * n * n], n) for k in range(m + int(with_delta))]
    if not with_delta:
        implied.append(np.zeros((n, n), complex))
    return DualResult(x, float(delta), float(np.trace(x).real) - float(delta) * beta, sol,
                      [herm(p) for p in implied], beta)


def default_null_tol(x: np.ndarray) -> float:
    return 1e-5 * max(1.0, float(np.linalg.norm(x, 2)))


def _supports(ensemble: StateEnsemble, x: np.ndarray, delta: float, null_tol: float):
    out = []
    slacks = [x - p * rho for p, rho in zip(ensemble.priors, ensemble.densities)]
    slacks.append(x - delta * ensemble.delta)
    for s in slacks:
        w, v = np.linalg.eigh(herm(s))
        out.append(v[:, w <= null_tol])
    return out[:-1], out[-1]


def _normalize(conclusive: list) -> list:
    """Rescale so that ``sum_i Pi_i = I`` exactly: ``Pi_i -> G^-1/2 Pi_i G^-1/2``."""
    g = herm(sum(conclusive))
    half = eigh_sqrt(g, -0.5)
    return [herm(half @ p @ half) for p in conclusive]


def recover_primal(ensemble: StateEnsemble, x: np.ndarray, delta: float, beta: float,
                   null_tol: float | None = None, tol: Tolerances = DEFAULT_TOL,
                   options: SolverOptions | None = None) -> RejectingMeasurement:
    """Optimal measurement from a dual solution via complementary slackness.

    Each ``Pi_i`` is confined to the null space ``N_i`` of ``X - p_i rho_i``
    (``Pi_i = N_i W_i N_i*``).  The coefficients are first sought as the
    unique solution of ``sum_i N_i W_i N_i* = I`` (for ``beta > 0`` with
    ``Pi_0`` confined to the null space of ``X - delta Delta`` and
    ``Tr(Delta Pi_0) = beta``).  When they are not unique and ``beta > 0``,
    they solve the detection problem restricted to the supports, with
    ``Pi_0`` kept as a PSD slack.  Raises :class:`RecoveryInfeasible` when the supports do not
    carry a measurement within ``tol.gap`` of ``Tr(X) - delta beta``.
    """
    beta = _check_beta(beta)
    x = herm(np.asarray(x, dtype=complex))
    n, m = ensemble.n, ensemble.m
    if null_tol is None:
        null_tol = default_null_tol(x)
    supports, support0 = _supports(ensemble, x, delta, null_tol)
    if beta <= BETA_ZERO:
        meas = _recover_linear(ensemble, supports, None, 0.0)
    else:
        try:
            # a unique solution on the supports needs no interior point (Pi_0 may be singular)
            meas = _recover_linear(ensemble, supports, support0, beta)
        except RecoveryInfeasible:
            meas = _recover_restricted(ensemble, supports, beta, options)
    report = validate_povm(meas, tol)
    if not report.ok:
        raise RecoveryInfeasible("recovered operators are not a valid measurement: " + "; ".join(report.failures))
    probs = evaluate(ensemble, meas, tol)
    target = float(np.trace(x).real) - delta * beta
    if abs(probs.p_i - beta) > tol.triple:
        raise RecoveryInfeasible(f"recovered inconclusive rate {probs.p_i:.12g} != {beta:.12g}")
    if probs.p_d < target - tol.gap:
        raise RecoveryInfeasible(f"recovered P_D {probs.p_d:.10f} falls short of dual value {target:.10f}")
    return meas


def _recover_linear(ensemble, supports, support0, beta) -> RejectingMeasurement:
    """Solve ``sum_i N_i W_i N_i* (+ N_0 W_0 N_0*) = I`` (and ``Tr(Delta Pi_0) = beta``) exactly.

    Raises :class:`RecoveryInfeasible` unless the coefficients are unique,
    consistent and (up to round-off) PSD.
    """
    n = ensemble.n
    basis = hermitian_basis(n)
    blocks = list(supports) if support0 is None else [support0, *supports]
    cols, shapes = [], []
    for k_blk, nb in enumerate(blocks):
        k = nb.shape[1]
        shapes.append(k)
        for e in hermitian_basis(k) if k else []:
            op = nb @ e @ nb.conj().T
            col = np.einsum("kab,ba->k", basis, op).real
            if support0 is not None:
                rate = float(np.trace(ensemble.delta @ op).real) if k_blk == 0 else 0.0
                col = np.append(col, rate)
            cols.append(col)
    if not cols:
        raise RecoveryInfeasible("all supports are empty")
    a = np.array(cols).T
    rhs = np.einsum("kab,ba->k", basis, np.eye(n)).real
    if support0 is not None:
        rhs = np.append(rhs, beta)
    coef, _, rank, _ = np.linalg.lstsq(a, rhs, rcond=None)
    if rank < a.shape[1]:
        raise RecoveryInfeasible("supports do not determine the measurement uniquely")
    resid = float(np.max(np.abs(a @ coef - rhs)))
    if resid > 1e-6:
        raise RecoveryInfeasible(f"supports cannot resolve the identity (residual {resid:.3e})")
    ops, pos = [], 0
    for nb, k in zip(blocks, shapes):
        if k == 0:
            ops.append(np.zeros((n, n), complex))
            continue
        w = from_coords(coef[pos:pos + k * k], k)
        pos += k * k
        wv, wu = np.linalg.eigh(w)
        if wv[0] < -1e-6:
            raise RecoveryInfeasible(f"recovered coefficient has eigenvalue {wv[0]:.3e}")
        w = (wu * np.clip(wv, 0.0, None)) @ wu.conj().T
        ops.append(herm(nb @ w @ nb.conj().T))
    ops = _normalize(ops)
    if support0 is None:
        return RejectingMeasurement(np.zeros((n, n), complex), tuple(ops))
    return adjust_inconclusive(ensemble, RejectingMeasurement(ops[0], tuple(ops[1:])), beta)


def _recover_restricted(ensemble, supports, beta, options) -> RejectingMeasurement:
    n, m = ensemble.n, ensemble.m
    prob = SdpProblem(sense="max", label="restricted")
    prob.add_block("s", n)
    terms = {"s": [(1.0, np.eye(n))]}
    names = []
    for i, (nb, p, rho) in enumerate(zip(supports, ensemble.priors, ensemble.densities), start=1):
        k = nb.shape[1]
        if k == 0:
            names.append(None)
            continue
        name = f"w{i}"
        names.append(name)
        prob.add_block(name, k)
        prob.objective[name] = herm(p * nb.conj().T @ rho @ nb)
        terms[name] = [(1.0, nb)]
    prob.add_matrix_equality(terms, np.eye(n))
    prob.add_equality({"s": ensemble.delta}, beta)
    try:
        sol = solve(prob, options)
    except SolverError as exc:
        raise RecoveryInfeasible(f"restricted problem failed: {exc}") from exc
    if sol.status != OPTIMAL:
        raise RecoveryInfeasible(f"restricted problem stopped with status {sol.status}")
    ops = []
    for nb, name in zip(supports, names):
        if name is None:
            ops.append(np.zeros((n, n), complex))
        else:
            ops.append(herm(nb @ sol[name] @ nb.conj().T))
    return adjust_inconclusive(ensemble, RejectingMeasurement(herm(sol["s"]), tuple(ops)), beta)


@dataclass
class DetectionResult:
    measurement: RejectingMeasurement
    probabilities: ProbabilityTriple
    certificate: OptimalityCertificate
    beta: float
    iterations: int
    route: str
    dual_value: float

    @property
    def gap(self) -> float:
        return self.dual_value - self.probabilities.p_d


def solve_detection(ensemble: StateEnsemble, beta: float, options: SolverOptions | None = None,
                    tol: Tolerances = DEFAULT_TOL) -> DetectionResult:
    """Optimal rejecting measurement: dual solve, then recovery; primal solve as fallback."""
    beta = _check_beta(beta)
    dual = solve_dual(ensemble, beta, options)
    iters = dual.solution.iterations
    try:
        meas = recover_primal(ensemble, dual.x, dual.delta, beta, tol=tol, options=options)
        route = "dual+recovery"
        cert = dual.certificate
    except RecoveryInfeasible:
        primal = solve_primal(ensemble, beta, options)
        iters += primal.solution.iterations
        meas = primal.measurement
        route = "primal"
        # keep whichever certificate is tighter and still feasible
        cert = dual.certificate
        if min(certificate_feasibility(ensemble, primal.certificate)) >= -tol.kkt \
                and primal.certificate.dual_value < cert.dual_value:
            cert = primal.certificate
    probs = evaluate(ensemble, meas, tol)
    return DetectionResult(meas, probs, cert, beta, iters, route, cert.dual_value)
