import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdetect.certificate import OptimalityCertificate, check_optimality, duality_gap
from qdetect.errors import DimensionMismatch, InfeasibleInput
from qdetect.measurement import adjust_inconclusive, mix, reject_all
from qdetect.sdp import solve_detection
from qdetect.sim import sim_certificate, sim_measurement
from qdetect.symmetry import generate_gu

from conftest import random_ensemble, random_measurement, trine_spec


def test_dual_value():
    cert = OptimalityCertificate(np.diag([0.5, 0.25]), 0.5, 0.2)
    assert abs(cert.dual_value - (0.75 - 0.1)) < 1e-15


def test_solver_pair_passes(rng):
    ens = random_ensemble(rng, 3, 4)
    res = solve_detection(ens, 0.25)
    rep = check_optimality(ens, res.measurement, res.certificate, 0.25)
    assert rep.optimal
    assert rep.gap <= 1e-6
    assert rep.max_infeasibility <= rep.kkt_tol
    assert set(rep.as_dict()) >= {"verdict", "gap", "feasibility_min_eigenvalues", "slackness_norms"}


def test_suboptimal_measurement_is_flagged():
    ens = generate_gu(trine_spec())
    beta = 0.3
    meas = mix(sim_measurement(ens, beta), reject_all(2, 3), 0.0)
    rep = check_optimality(ens, meas, sim_certificate(ens, beta), beta)
    assert rep.optimal
    # move probability mass from outcome 1 to outcome 2: still a POVM, same P_I, lower P_D
    ops = list(meas.conclusive)
    ops[1], ops[0] = ops[1] + 0.5 * ops[0], 0.5 * ops[0]
    worse = type(meas).from_operators(meas.reject, ops)
    rep = check_optimality(ens, worse, sim_certificate(ens, beta), beta)
    assert not rep.optimal
    assert rep.gap > 1e-3


def test_infeasible_certificate_is_flagged():
    ens = generate_gu(trine_spec())
    meas = sim_measurement(ens, 0.3)
    rep = check_optimality(ens, meas, OptimalityCertificate(np.zeros((2, 2)), 0.0, 0.3), 0.3)
    assert not rep.optimal
    assert rep.max_infeasibility > 0.1


def test_dimension_mismatch(rng):
    ens = random_ensemble(rng, 2, 3)
    cert = OptimalityCertificate(np.eye(3), 0.0, 0.0)
    with pytest.raises(DimensionMismatch):
        check_optimality(ens, reject_all(2, 3), cert)
    with pytest.raises(DimensionMismatch):
        check_optimality(ens, reject_all(2, 2), OptimalityCertificate(np.eye(2), 0.0, 0.0))


def test_duality_gap_requires_matching_rate(rng):
    ens = random_ensemble(rng, 2, 2)
    res = solve_detection(ens, 0.2)
    with pytest.raises(InfeasibleInput):
        duality_gap(ens, res.measurement, res.certificate, 0.5)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), beta=st.sampled_from([0.0, 0.3, 0.7]))
def test_weak_duality(seed, beta):
    # any feasible measurement scores at most the certified dual value
    rng = np.random.default_rng(seed)
    ens = random_ensemble(rng, 2, 3)
    res = solve_detection(ens, beta)
    other = adjust_inconclusive(ens, random_measurement(rng, 2, 3), beta)
    assert duality_gap(ens, other, res.certificate, beta) >= -1e-6
