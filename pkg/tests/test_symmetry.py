import numpy as np
import pytest

from qdetect.errors import DimensionMismatch, DuplicateElements, GeneratorGroupMissing, NotClosed, NotUnitary
from qdetect.measurement import evaluate
from qdetect.sdp import shape_summary, solve_detection
from qdetect.sim import sim_measurement
from qdetect.symmetry import (CguSpec, GuSpec, build_cgu_reduced, build_gu_reduced, close_group,
                              commuting_generators_check, covariance_deviation, cyclic_shift_group,
                              diagonal_phase_group, dihedral_group, generate_cgu, generate_gu,
                              gu_condition_check, gu_sim_generator, named_group, rotation_group,
                              solve_cgu_reduced, solve_gu_reduced, symmetrize)

from conftest import cgu_spec, fourier_spec, trine_spec

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def test_closure_and_table():
    g = close_group([X, np.eye(2)])
    assert np.allclose(g.elements[0], np.eye(2))
    assert g.table.tolist() == [[0, 1], [1, 0]]
    for grp in (rotation_group(5), dihedral_group(4), cyclic_shift_group(3), diagonal_phase_group(3)):
        l = grp.order
        for j in range(l):
            for i in range(l):
                k = grp.table[j, i]
                assert np.allclose(grp.elements[j].conj().T @ grp.elements[i], grp.elements[k])
        # Latin square
        assert all(sorted(row) == list(range(l)) for row in grp.table)


def test_group_validation_errors():
    with pytest.raises(NotClosed):
        close_group([np.eye(2), X, Z])
    with pytest.raises(NotUnitary):
        close_group([np.eye(2), 2 * X])
    with pytest.raises(DuplicateElements):
        close_group([np.eye(2), X, X])
    with pytest.raises(ValueError):
        named_group("no-such-group", n=2)


def test_group_orders():
    assert rotation_group(3).order == 3
    assert dihedral_group(3).order == 6
    assert diagonal_phase_group(4).order == 4
    assert named_group("cyclic-shift", n=4).order == 4


def test_generated_ensembles():
    ens = generate_gu(trine_spec())
    assert ens.m == 3 and np.allclose(ens.priors, 1 / 3)
    assert np.allclose(ens.delta, np.eye(2) / 2)
    spec = cgu_spec()
    cgu = generate_cgu(spec)
    assert cgu.m == spec.group.order * spec.r
    # state order i * r + k: state (i, k) = U_i rho_k U_i*
    rho_1 = np.outer(spec.generators[1], spec.generators[1].conj())
    assert np.allclose(cgu.densities[1 * spec.r + 1], X @ rho_1 @ X)


def test_gu_condition_and_sim_generator():
    spec = fourier_spec()
    assert gu_condition_check(spec).holds
    ens = generate_gu(spec)
    beta = 0.5
    mu = gu_sim_generator(spec, beta)
    meas = sim_measurement(ens, beta)
    assert np.allclose(np.outer(mu, mu.conj()) if mu.ndim == 1 else mu @ mu.conj().T, meas.conclusive[0])


@pytest.mark.parametrize("make,beta", [(trine_spec, 0.2), (trine_spec, 0.6), (fourier_spec, 0.5)])
def test_gu_reduced_matches_full(make, beta):
    spec = make()
    ens = generate_gu(spec)
    red = solve_gu_reduced(spec, beta)
    full = solve_detection(ens, beta)
    assert abs(red.objective - full.probabilities.p_d) < 1e-6
    p = evaluate(ens, red.measurement)
    assert abs(p.p_i - beta) < 1e-9
    assert covariance_deviation(spec.group, red.measurement) < 1e-9


@pytest.mark.parametrize("beta", [0.0, 0.2, 0.6])
def test_cgu_reduced_matches_full(beta):
    spec = cgu_spec()
    ens = generate_cgu(spec)
    red = solve_cgu_reduced(spec, beta)
    full = solve_detection(ens, beta)
    assert abs(red.objective - full.probabilities.p_d) < 1e-6


def test_reduced_problem_sizes():
    info = shape_summary(build_gu_reduced(trine_spec(), 0.3))
    assert info["unknowns"] == 4
    spec = cgu_spec()
    info = shape_summary(build_cgu_reduced(spec, 0.3))
    assert info["unknowns"] == spec.r * 4
    assert info["constraint_groups"] == spec.r + 2


def test_symmetrize_makes_covariant_and_keeps_value():
    spec = fourier_spec()
    ens = generate_gu(spec)
    res = solve_detection(ens, 0.5)
    sym = symmetrize(spec.group, res.measurement)
    assert covariance_deviation(spec.group, sym) <= 1e-7
    before, after = evaluate(ens, res.measurement), evaluate(ens, sym)
    assert abs(before.p_d - after.p_d) <= 1e-8
    assert abs(before.p_i - after.p_i) <= 1e-9
    with pytest.raises(DimensionMismatch):
        symmetrize(rotation_group(3), res.measurement)


def test_commuting_generators():
    # generators related by Z, which commutes with {I, X} only up to a phase of -1
    v = np.array([np.cos(0.3), np.sin(0.3)])
    group = close_group([np.eye(2), X])
    spec = CguSpec(group, (v, Z @ v), close_group([np.eye(2), Z]))
    rep = commuting_generators_check(spec)
    assert rep.commutes
    phases = np.mod(rep.theta, 2 * np.pi)
    assert np.all(np.isclose(phases, 0) | np.isclose(phases, np.pi) | np.isclose(phases, 2 * np.pi))
    with pytest.raises(GeneratorGroupMissing):
        commuting_generators_check(CguSpec(group, (v, Z @ v)))
