"""Acceptance criteria A1-A10.

Each test records one PASS/FAIL line, printed in the pytest terminal summary
("acceptance criteria" section) and also to stdout as the test runs.
"""

import functools
import time

import numpy as np
import pytest

from qdetect.certificate import check_optimality
from qdetect.linalg import numerical_rank
from qdetect.measurement import evaluate, validate_povm
from qdetect.oracle import grid_search
from qdetect.sdp import build_primal, recover_primal, shape_summary, solve_detection, solve_dual, solve_primal
from qdetect.sim import sim_certificate, sim_measurement
from qdetect.symmetry import (build_cgu_reduced, build_gu_reduced, covariance_deviation, generate_cgu,
                              generate_gu, solve_cgu_reduced, solve_gu_reduced, symmetrize)

from conftest import (ACCEPTANCE, cgu_spec, fourier_spec, overlap_pair, random_ensemble, random_measurement,
                      trine_spec)

TOL_GAP = 1e-6

# every P_D returned by a solver in this module, with its beta, for the budget bound
RETURNED = []


def _record(beta, p_d):
    RETURNED.append((float(beta), float(p_d)))
    return p_d


def criterion(code, title, budget):
    """Time the test, check its runtime budget (seconds) and record a PASS/FAIL line."""
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            passed, detail = False, "error"
            try:
                detail = fn(*args, **kwargs) or "ok"
                elapsed = time.perf_counter() - start
                assert budget is None or elapsed < budget, f"runtime {elapsed:.1f} s exceeds {budget} s"
                passed = True
            except AssertionError as exc:
                detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
                raise
            finally:
                elapsed = time.perf_counter() - start
                ACCEPTANCE.append((code, title, passed, detail, elapsed))
                print(f"{code} {title}: {'PASS' if passed else 'FAIL'} ({detail}; {elapsed:.2f} s)")
        return run
    return wrap


@criterion("A1", "Normalization", budget=1.0)
def test_a1_normalization():
    rng = np.random.default_rng(101)
    worst = 0.0
    for k in range(200):
        n, m = 1 + k % 4, 1 + (k // 4) % 6
        ens = random_ensemble(rng, n, m)
        p = evaluate(ens, random_measurement(rng, n, m))
        worst = max(worst, abs(p.p_d + p.p_e + p.p_i - 1))
    assert worst <= 1e-9, f"max |P_D+P_E+P_I-1| = {worst:.2e}"
    return f"200 pairs, max deviation {worst:.1e}"


@criterion("A2", "beta_min closed form", budget=1.0)
def test_a2_beta_min_closed_form():
    worst = 0.0
    for deg in (30, 60, 80):
        c = np.cos(np.radians(deg))
        ens = overlap_pair(c)
        # oracle: eigenvalues (1 +- cos) / 2 of the 2x2 average
        lam = np.array([(1 - c) / 2, (1 + c) / 2])
        assert np.allclose(ens.spectrum().eigenvalues[::-1], lam, atol=1e-12)
        worst = max(worst, abs(ens.spectrum().beta_min - c))
    assert worst <= 1e-10, f"max |beta_min - cos| = {worst:.2e}"
    return f"max deviation {worst:.1e}"


@criterion("A3", "SIM = SDP on symmetric ensembles", budget=30.0)
def test_a3_sim_equals_sdp():
    worst_gap, worst_res = 0.0, 0.0
    for make in (trine_spec, fourier_spec):
        ens = generate_gu(make())
        for beta in (ens.spectrum().beta_min, 0.5, 0.8):
            meas = sim_measurement(ens, beta)
            p_sim = evaluate(ens, meas).p_d
            p_sdp = _record(beta, solve_detection(ens, beta).probabilities.p_d)
            worst_gap = max(worst_gap, abs(p_sim - p_sdp))
            rep = check_optimality(ens, meas, sim_certificate(ens, beta), beta)
            assert rep.optimal, f"{make.__name__} beta={beta}: {rep.verdict}"
            worst_res = max(worst_res, rep.max_infeasibility, rep.max_slackness, abs(rep.gap))
    assert worst_gap <= 1e-6, f"max |P_D(SIM) - P_D(SDP)| = {worst_gap:.2e}"
    assert worst_res <= 1e-6, f"max certificate residual {worst_res:.2e}"
    trine = generate_gu(trine_spec())
    p0 = _record(0.0, solve_detection(trine, 0.0).probabilities.p_d)
    assert abs(p0 - 2 / 3) <= 1e-6, f"trine at beta=0: {p0}"
    return f"max |SIM-SDP| {worst_gap:.1e}, max residual {worst_res:.1e}, trine(0) = {p0:.9f}"


@criterion("A4", "Strong duality", budget=300.0)
def test_a4_strong_duality():
    rng = np.random.default_rng(404)
    worst, count = 0.0, 0
    for k in range(20):
        n = 2 + k % 3
        pure = k % 2 == 1
        m = int(rng.integers(n if pure else 2, 7))
        ens = random_ensemble(rng, n, m, pure=pure)
        for beta in (0.1, 0.5):
            dual = solve_dual(ens, beta)
            primal = solve_primal(ens, beta)
            rec = recover_primal(ens, dual.x, dual.delta, beta)
            assert validate_povm(rec).ok, f"ensemble {k}, beta={beta}: recovered POVM invalid"
            p_rec = _record(beta, evaluate(ens, rec).p_d)
            _record(beta, primal.objective)
            worst = max(worst, abs(primal.objective - dual.value), abs(p_rec - dual.value))
            count += 1
    assert worst <= 1e-6, f"max |primal - dual| = {worst:.2e}"
    return f"{count} solves, max |primal-dual| {worst:.1e}"


@criterion("A5", "Unambiguous limit", budget=5.0)
def test_a5_unambiguous_limit():
    rng = np.random.default_rng(505)
    worst_e, worst_d = 0.0, 0.0
    for n in (2, 3, 4):
        for _ in range(3):
            ens = random_ensemble(rng, n, n, pure=True)
            bmin = ens.spectrum().beta_min
            p = evaluate(ens, sim_measurement(ens, bmin))
            worst_e = max(worst_e, p.p_e)
            worst_d = max(worst_d, abs(p.p_d - (1 - bmin)))
    assert worst_e <= 1e-8, f"max P_E = {worst_e:.2e}"
    assert worst_d <= 1e-8, f"max |P_D - (1 - beta_min)| = {worst_d:.2e}"
    return f"max P_E {worst_e:.1e}, max |P_D-(1-beta_min)| {worst_d:.1e}"


@criterion("A6", "Reduced-full agreement", budget=120.0)
def test_a6_reduced_full():
    worst = 0.0
    cases = [("gu", trine_spec()), ("gu", fourier_spec()), ("cgu", cgu_spec())]
    for kind, spec in cases:
        ens = generate_gu(spec) if kind == "gu" else generate_cgu(spec)
        n, m = ens.n, ens.m
        for beta in (0.2, 0.6):
            if kind == "gu":
                red, prob = solve_gu_reduced(spec, beta), build_gu_reduced(spec, beta)
                expect_unknowns = n ** 2
            else:
                red, prob = solve_cgu_reduced(spec, beta), build_cgu_reduced(spec, beta)
                expect_unknowns = spec.r * n ** 2
            full = solve_detection(ens, beta)
            worst = max(worst, abs(_record(beta, red.objective) - _record(beta, full.probabilities.p_d)))
            assert shape_summary(prob)["unknowns"] == expect_unknowns
            assert build_primal(ens, beta).num_variables == (m + 1) * n ** 2
    assert worst <= 1e-6, f"max |reduced - full| = {worst:.2e}"
    return f"max |reduced-full| {worst:.1e}; unknowns n^2 / rn^2 vs (m+1)n^2"


@criterion("A7", "Covariance", budget=None)
def test_a7_covariance():
    worst_cov, worst_pd = 0.0, 0.0
    for make in (trine_spec, fourier_spec):
        spec = make()
        ens = generate_gu(spec)
        for beta in (0.2, 0.6):
            res = solve_detection(ens, beta)
            sym = symmetrize(spec.group, res.measurement)
            worst_cov = max(worst_cov, covariance_deviation(spec.group, sym))
            worst_pd = max(worst_pd, abs(evaluate(ens, sym).p_d - _record(beta, res.probabilities.p_d)))
    assert worst_cov <= 1e-7, f"max covariance deviation {worst_cov:.2e}"
    assert worst_pd <= 1e-8, f"max P_D change {worst_pd:.2e}"
    return f"max deviation {worst_cov:.1e}, max P_D change {worst_pd:.1e}"


def _a8_corpus():
    from qdetect.ensemble import pure_ensemble
    rng = np.random.default_rng(808)
    yield "overlap-0.5", overlap_pair(0.5, (0.6, 0.4))
    yield "complex-pair", random_ensemble(rng, 2, 2, pure=True)
    yield "trine", generate_gu(trine_spec())
    yield "three-real", pure_ensemble([[1, 0], [np.cos(.5), np.sin(.5)], [np.cos(2), np.sin(2)]], [0.5, 0.3, 0.2])
    yield "random-real-3", random_ensemble(rng, 2, 3, pure=True, real=True)


@criterion("A8", "Oracle agreement", budget=180.0)
def test_a8_oracle_agreement():
    worst = 0.0
    for name, ens in _a8_corpus():
        for beta in (0.0, 0.3):
            sdp = _record(beta, solve_detection(ens, beta).probabilities.p_d)
            best = grid_search(ens, beta, 64).p_d
            assert best - 2e-2 <= sdp <= best + 2e-2 + TOL_GAP, f"{name} beta={beta}: sdp {sdp} vs grid {best}"
            worst = max(worst, abs(sdp - best))
    return f"10 cases, max |SDP - grid| {worst:.1e}"


@criterion("A9", "Rank property", budget=None)
def test_a9_rank():
    rng = np.random.default_rng(909)
    worst, count = 0, 0
    ensembles = [random_ensemble(rng, n, m, pure=True) for n, m in [(2, 3), (3, 4), (3, 6), (4, 5)]]
    ensembles.append(generate_gu(trine_spec()))
    for ens in ensembles:
        for beta in (0.0, 0.3, 0.7):
            res = solve_detection(ens, beta)
            _record(beta, res.probabilities.p_d)
            ranks = [numerical_rank(pi, 1e-7) for pi in res.measurement.conclusive]
            worst = max(worst, max(ranks))
            count += len(ranks)
    assert worst <= 1, f"an optimal operator has rank {worst}"
    return f"{count} operators, max rank {worst}"


@criterion("A10", "Budget bound", budget=None)
def test_a10_budget_bound():
    # A10 also solves its own corpus so it holds when run on its own
    rng = np.random.default_rng(1010)
    for k in range(6):
        ens = random_ensemble(rng, 2 + k % 3, 3 + k % 3, pure=k % 2 == 0)
        for beta in (0.0, 0.25, 0.5, 0.9):
            _record(beta, solve_detection(ens, beta).probabilities.p_d)
    spec = trine_spec()
    ens = generate_gu(spec)
    for beta in (0.0, 0.4, 0.95):
        _record(beta, solve_gu_reduced(spec, beta).objective)
        _record(beta, evaluate(ens, sim_measurement(ens, beta)).p_d)
    excess = max(p - (1 - b) for b, p in RETURNED)
    assert excess <= 1e-8, f"max P_D - (1 - beta) = {excess:.2e}"
    return f"{len(RETURNED)} values, max P_D-(1-beta) {excess:.1e}"
