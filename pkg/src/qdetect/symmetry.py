"""Finite unitary groups, geometrically uniform ensembles and symmetry-reduced solves.

A GU ensemble is ``{U_i rho U_i*}`` for the elements ``U_i`` of a finite
unitary group with equal priors.  A CGU ensemble uses several generators
``rho_k`` and holds ``U_i rho_k U_i*`` for every pair ``(i, k)``; states are
ordered group-element major, i.e. state ``i * r + k``.

For such ensembles the optimal measurement can be taken covariant,
``Pi_ik = U_i Pi_k U_i*``, so only the generators ``Pi_k`` are unknowns.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .certificate import OptimalityCertificate
from .config import DEFAULT_TOL, Tolerances
from .ensemble import State, StateEnsemble, build_ensemble
from .errors import (
    DimensionMismatch,
    DuplicateElements,
    GeneratorGroupMissing,
    InvalidPOVM,
    NotClosed,
    NotUnitary,
    SolverError,
)
from .linalg import eigh_sqrt, from_coords, herm
from .measurement import RejectingMeasurement, adjust_inconclusive, validate_povm
from .sdp.problem import SdpProblem
from .sdp.solver import OPTIMAL, SdpSolution, SolverOptions, solve
from .sim import ConditionReport, scalar_condition, sim_factors

# below this magnitude the reference entry cannot fix a commutation phase
PHASE_REFERENCE_MIN = 1e-6


@dataclass(frozen=True, eq=False)
class UnitaryGroup:
    """Group elements with ``elements[0] = I`` and ``table[j, i] = k`` iff ``U_j* U_i = U_k``."""

    elements: tuple
    table: np.ndarray

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def n(self) -> int:
        return self.elements[0].shape[0]

    def conjugate(self, i: int, a: np.ndarray) -> np.ndarray:
        u = self.elements[i]
        return u @ a @ u.conj().T


def _frobenius(a, b) -> float:
    return float(np.linalg.norm(a - b))


def close_group(elements: Sequence, tol: Tolerances = DEFAULT_TOL) -> UnitaryGroup:
    """Verify that ``elements`` form a group and build its table.

    Products are matched to the nearest element in Frobenius distance and
    must lie within ``tol.group`` of it.  The identity is moved to the front
    if it is not already there; the remaining order is kept.
    """
    mats = [np.atleast_2d(np.asarray(u, dtype=complex)) for u in elements]
    if not mats:
        raise NotClosed("a group needs at least one element")
    n = mats[0].shape[0]
    for k, u in enumerate(mats):
        if u.shape != (n, n):
            raise DimensionMismatch(f"element {k} has shape {u.shape}, expected {(n, n)}")
        dev = _frobenius(u @ u.conj().T, np.eye(n))
        if dev > tol.group:
            raise NotUnitary(f"element {k}: ||U U* - I|| = {dev:.3e}")
    stack = np.array(mats)
    for a in range(len(mats)):
        for b in range(a + 1, len(mats)):
            if _frobenius(mats[a], mats[b]) <= 2 * tol.group:
                raise DuplicateElements(f"elements {a} and {b} coincide within {2 * tol.group:.1e}")
    ident = [k for k, u in enumerate(mats) if _frobenius(u, np.eye(n)) <= tol.group]
    if not ident:
        raise NotClosed("the identity is not among the elements")
    order = ident + [k for k in range(len(mats)) if k != ident[0]]
    stack = stack[order]
    m = len(mats)
    table = np.zeros((m, m), dtype=int)
    for j in range(m):
        prods = np.einsum("ba,ibc->iac", stack[j].conj(), stack)  # U_j* U_i for all i
        dists = np.linalg.norm(prods[:, None] - stack[None], axis=(2, 3))
        best = np.argmin(dists, axis=1)
        for i in range(m):
            if dists[i, best[i]] > tol.group:
                raise NotClosed(f"U_{j}* U_{i} is not in the set (nearest distance {dists[i, best[i]]:.3e})")
        table[j] = best
    full = np.arange(m)
    for j in range(m):
        if not (np.array_equal(np.sort(table[j]), full) and np.array_equal(np.sort(table[:, j]), full)):
            raise NotClosed("multiplication table is not a Latin square")
    return UnitaryGroup(tuple(stack), table)


# -- named groups ---------------------------------------------------------

def cyclic_shift_group(n: int) -> UnitaryGroup:
    """Powers of the cyclic shift ``|j> -> |j+1 mod n>``; ``n = 2`` gives ``{I, X}``."""
    shift = np.roll(np.eye(n), 1, axis=0)
    return close_group([np.linalg.matrix_power(shift, k) for k in range(n)])


def diagonal_phase_group(n: int, order: int | None = None) -> UnitaryGroup:
    """Powers of ``diag(1, w, w^2, ...)`` with ``w = exp(2 pi i / order)``."""
    order = n if order is None else order
    w = np.exp(2j * np.pi / order)
    gen = np.diag(w ** np.arange(n))
    return close_group([np.linalg.matrix_power(gen, k) for k in range(order)])


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def rotation_group(order: int) -> UnitaryGroup:
    """Rotations of the real plane by multiples of ``2 pi / order``."""
    return close_group([_rotation(2 * np.pi * k / order) for k in range(order)])


def dihedral_group(order: int) -> UnitaryGroup:
    """Symmetries of the regular ``order``-gon: rotations, then reflections."""
    flip = np.diag([1.0, -1.0])
    rots = [_rotation(2 * np.pi * k / order) for k in range(order)]
    return close_group(rots + [r @ flip for r in rots])


NAMED_GROUPS = ("cyclic-shift", "diagonal-phase", "rotation", "dihedral")


def named_group(name: str, n: int | None = None, order: int | None = None) -> UnitaryGroup:
    if name == "cyclic-shift":
        return cyclic_shift_group(n or order)
    if name == "diagonal-phase":
        return diagonal_phase_group(n or order, order)
    if name in ("rotation", "dihedral"):
        if n not in (None, 2):
            raise DimensionMismatch(f"{name} group acts on the real plane (n = 2), not n = {n}")
        if order is None:
            raise ValueError(f"{name} group needs an order")
        return rotation_group(order) if name == "rotation" else dihedral_group(order)
    raise ValueError(f"unknown group {name!r}; expected one of {', '.join(NAMED_GROUPS)}")


# -- ensemble specifications ------------------------------------------------

def _as_factor(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    return phi[:, None] if phi.ndim == 1 else phi


@dataclass(frozen=True, eq=False)
class GuSpec:
    group: UnitaryGroup
    generator: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "generator", _as_factor(self.generator))


@dataclass(frozen=True, eq=False)
class CguSpec:
    group: UnitaryGroup
    generators: tuple
    generator_group: UnitaryGroup | None = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(_as_factor(g) for g in self.generators))

    @property
    def r(self) -> int:
        return len(self.generators)


def generate_gu(spec: GuSpec, tol: Tolerances = DEFAULT_TOL) -> StateEnsemble:
    g = spec.group
    if spec.generator.shape[0] != g.n:
        raise DimensionMismatch(f"generator has {spec.generator.shape[0]} rows, group acts on n={g.n}")
    m = g.order
    return build_ensemble([State(1.0 / m, factor=u @ spec.generator) for u in g.elements], tol)


def generate_cgu(spec: CguSpec, tol: Tolerances = DEFAULT_TOL) -> StateEnsemble:
    g = spec.group
    for k, phi in enumerate(spec.generators):
        if phi.shape[0] != g.n:
            raise DimensionMismatch(f"generator {k} has {phi.shape[0]} rows, group acts on n={g.n}")
    w = 1.0 / (g.order * spec.r)
    return build_ensemble([State(w, factor=u @ phi) for u in g.elements for phi in spec.generators], tol)


def _frame_inverse(group: UnitaryGroup, generators) -> np.ndarray:
    """``(Phi Phi*)^-1`` for the unweighted factors ``U_i phi_k``."""
    frame = sum(u @ phi @ phi.conj().T @ u.conj().T for u in group.elements for phi in generators)
    return np.linalg.inv(herm(frame))


# -- SIM generators and optimality conditions ------------------------------

def gu_sim_generator(spec: GuSpec, beta: float) -> np.ndarray:
    """Generator ``mu`` of the SIM factors: ``mu_i = U_i mu``.

    Normalised so that the lifted factors coincide with the SIM factors of
    the generated ensemble, i.e. ``mu = gamma Delta^-1 phi / sqrt(m)``.
    """
    return cgu_sim_generators(CguSpec(spec.group, (spec.generator,)), beta)[0]


def cgu_sim_generators(spec: CguSpec, beta: float) -> list:
    """Generators ``mu_k`` with SIM factors ``mu_ik = U_i mu_k``."""
    ens = generate_cgu(spec)
    # the first r SIM factors belong to U_1 = I, so they are the generators
    return sim_factors(ens, beta)[: spec.r]


def gu_condition_check(spec: GuSpec, tol: Tolerances = DEFAULT_TOL) -> ConditionReport:
    """Test ``phi* (Phi Phi*)^-1 phi = alpha I``; always true for a rank-one generator."""
    return cgu_condition_check(CguSpec(spec.group, (spec.generator,)), tol)


def cgu_condition_check(spec: CguSpec, tol: Tolerances = DEFAULT_TOL) -> ConditionReport:
    """Test ``phi_k* (Phi Phi*)^-1 phi_k = alpha I`` with one ``alpha`` for all ``k``."""
    t = _frame_inverse(spec.group, spec.generators)
    return scalar_condition([herm(phi.conj().T @ t @ phi) for phi in spec.generators], tol.cond)


@dataclass
class CommutationReport:
    commutes: bool
    theta: np.ndarray | None  # theta[i, k] in [0, 2 pi), or None
    deviation: float
    mu_bar: np.ndarray | None = None


def commuting_generators_check(spec: CguSpec, beta: float | None = None,
                               tol: Tolerances = DEFAULT_TOL) -> CommutationReport:
    """Check ``U_i V_k = exp(i theta(i, k)) V_k U_i`` for all pairs.

    The phase is read off the largest-magnitude entry of ``V_k U_i``.  When
    the groups commute up to phase and ``beta`` is given, the single SIM
    generator ``mu_bar`` (with ``mu_ik = U_i V_k mu_bar``) is included; it
    is the SIM factor of the state generated by ``phi_1``.
    """
    if spec.generator_group is None:
        raise GeneratorGroupMissing("the specification has no generator group")
    us, vs = spec.group.elements, spec.generator_group.elements
    theta = np.zeros((len(us), len(vs)))
    worst = 0.0
    commutes = True
    for i, u in enumerate(us):
        for k, v in enumerate(vs):
            vu, uv = v @ u, u @ v
            a, b = np.unravel_index(np.argmax(np.abs(vu)), vu.shape)
            if abs(vu[a, b]) < PHASE_REFERENCE_MIN:
                commutes = False
                worst = max(worst, np.inf)
                continue
            phase = uv[a, b] / vu[a, b]
            phase /= abs(phase) if abs(phase) > 0 else 1.0
            dev = _frobenius(uv, phase * vu)
            worst = max(worst, dev)
            theta[i, k] = np.angle(phase) % (2 * np.pi)
            if dev > tol.group:
                commutes = False
    mu_bar = None
    if commutes and beta is not None:
        mu_bar = cgu_sim_generators(spec, beta)[0]
    return CommutationReport(commutes, theta if commutes else None, worst, mu_bar)


# -- symmetry-reduced problems ---------------------------------------------

@dataclass
class ReducedResult:
    generators: list          # optimal Pi_k
    measurement: RejectingMeasurement
    problem: SdpProblem
    solution: SdpSolution
    certificate: OptimalityCertificate

    @property
    def objective(self) -> float:
        return self.solution.objective


def build_cgu_reduced(spec: CguSpec, beta: float) -> SdpProblem:
    """Reduced detection problem over the generators ``Pi_1..Pi_r``.

    Maximise ``(1/r) sum_k Tr(rho_k Pi_k)`` (which is ``P_D``) subject to
    ``Pi_k >= 0``, ``S = I - sum_{i,k} U_i Pi_k U_i* >= 0`` and
    ``l sum_k Tr(Delta Pi_k) = 1 - beta``.  At ``beta = 0`` the slack is
    forced to zero and the operator inequality becomes an equality.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    g, r = spec.group, spec.r
    n, l = g.n, g.order
    ens = generate_cgu(spec)
    prob = SdpProblem(sense="max", label="cgu-reduced" if r > 1 else "gu-reduced")
    names = [f"pi{k}" for k in range(1, r + 1)]
    for name, phi in zip(names, spec.generators):
        prob.add_block(name, n)
        prob.objective[name] = phi @ phi.conj().T / r
    eye = np.eye(n)
    terms = {name: [(1.0, u) for u in g.elements] for name in names}
    with_slack = beta > 0
    if with_slack:
        prob.add_block("s", n, slack=True)
        terms["s"] = [(1.0, eye)]
    prob.add_matrix_equality(terms, eye)
    if with_slack:
        prob.add_equality({name: l * ens.delta for name in names}, 1.0 - beta)
        start = {name: (1.0 - beta) / (l * r) * eye for name in names}
        start["s"] = beta * eye
    else:
        start = {name: eye / (l * r) for name in names}
    prob.start = start
    return prob


def build_gu_reduced(spec: GuSpec, beta: float) -> SdpProblem:
    return build_cgu_reduced(CguSpec(spec.group, (spec.generator,)), beta)


def lift(group: UnitaryGroup, generators: Sequence) -> RejectingMeasurement:
    """Covariant measurement ``Pi_ik = U_i Pi_k U_i*`` with ``Pi_0 = I - sum Pi_ik``."""
    ops = [group.conjugate(i, herm(np.asarray(p, dtype=complex)))
           for i in range(group.order) for p in generators]
    return RejectingMeasurement.completed(ops)


def solve_cgu_reduced(spec: CguSpec, beta: float, options: SolverOptions | None = None,
                      tol: Tolerances = DEFAULT_TOL) -> ReducedResult:
    prob = build_cgu_reduced(spec, beta)
    sol = solve(prob, options)
    if sol.status != OPTIMAL:
        raise SolverError(f"reduced SDP stopped with status {sol.status}")
    gens = [herm(sol[f"pi{k}"]) for k in range(1, spec.r + 1)]
    meas = lift(spec.group, gens)
    if beta > 0:
        meas = adjust_inconclusive(generate_cgu(spec, tol), meas, beta)
    report = validate_povm(meas, tol)
    if not report.ok:
        raise InvalidPOVM("lifted measurement is invalid: " + "; ".join(report.failures))
    return ReducedResult(gens, meas, prob, sol, _reduced_certificate(spec, sol, beta))


def _reduced_certificate(spec: CguSpec, sol: SdpSolution, beta: float) -> OptimalityCertificate:
    """Full-problem certificate from the reduced multipliers.

    With ``Y`` the multiplier of the operator (in)equality, averaged over the
    group, and ``z`` that of the rate equation, ``X = Y + z Delta`` and
    ``delta = z`` is dual feasible for the full problem with the same value.
    """
    g = spec.group
    n = g.n
    y = sol.multipliers
    ymat = from_coords(y[: n * n], n)
    ybar = herm(sum(g.conjugate(i, ymat) for i in range(g.order)) / g.order)
    ens = generate_cgu(spec)
    if beta > 0:
        z = float(y[n * n])
        return OptimalityCertificate(herm(ybar + z * ens.delta), z, beta)
    half = eigh_sqrt(ens.delta, -0.5)
    delta = float(np.linalg.eigvalsh(herm(half @ ybar @ half))[0])
    return OptimalityCertificate(ybar, delta, beta)


def solve_gu_reduced(spec: GuSpec, beta: float, options: SolverOptions | None = None,
                     tol: Tolerances = DEFAULT_TOL) -> ReducedResult:
    return solve_cgu_reduced(CguSpec(spec.group, (spec.generator,)), beta, options, tol)


# -- covariance --------------------------------------------------------------

def symmetrize(group: UnitaryGroup, measurement: RejectingMeasurement, r: int = 1,
               tol: Tolerances = DEFAULT_TOL) -> RejectingMeasurement:
    """Group average ``Pi_ik -> (1/l) sum_j U_j Pi_(r(j,i), k) U_j*``.

    Preserves ``P_D`` and ``P_I`` for (C)GU ensembles with the state order
    of :func:`generate_cgu`, and returns a covariant measurement.
    """
    l = group.order
    if measurement.m != l * r:
        raise DimensionMismatch(f"measurement has {measurement.m} outcomes, expected {l * r}")
    report = validate_povm(measurement, tol)
    if not report.ok:
        raise InvalidPOVM("; ".join(report.failures))
    ops = measurement.conclusive
    out = []
    for i in range(l):
        for k in range(r):
            acc = sum(group.conjugate(j, ops[group.table[j, i] * r + k]) for j in range(l))
            out.append(herm(acc / l))
    return RejectingMeasurement.completed(out)


def covariance_deviation(group: UnitaryGroup, measurement: RejectingMeasurement, r: int = 1) -> float:
    """Largest ``||Pi_ik - U_i Pi_1k U_i*||`` (spectral norm)."""
    ops = measurement.conclusive
    worst = 0.0
    for i in range(group.order):
        for k in range(r):
            diff = ops[i * r + k] - group.conjugate(i, ops[k])
            worst = max(worst, float(np.linalg.norm(diff, 2)))
    return worst
