import numpy as np
import pytest

from qdetect.errors import UnsupportedSize
from qdetect.measurement import evaluate, validate_povm
from qdetect.oracle import grid_search, random_restart_ascent
from qdetect.symmetry import generate_gu

from conftest import overlap_pair, random_ensemble, trine_spec


def test_grid_returns_feasible_measurement():
    ens = overlap_pair(0.5)
    res = grid_search(ens, 0.3, 32)
    assert validate_povm(res.measurement).ok
    p = evaluate(ens, res.measurement)
    assert abs(p.p_i - 0.3) < 1e-9
    assert abs(p.p_d - res.p_d) < 1e-12
    assert res.evaluations > 0 and res.resolution == 32


def test_grid_is_lower_bound_close_to_closed_form():
    s, beta = 0.6, 0.2
    exact = (1 - beta + np.sqrt((1 - beta) ** 2 - (s - beta) ** 2)) / 2
    coarse = grid_search(overlap_pair(s), beta, 32)
    fine = grid_search(overlap_pair(s), beta, 128)
    assert fine.p_d <= exact + 1e-9
    assert exact - fine.p_d < 5e-3
    assert fine.p_d >= coarse.p_d - 1e-12


def test_grid_trine_at_zero():
    res = grid_search(generate_gu(trine_spec()), 0.0, 64)
    assert 2 / 3 - 1e-3 < res.p_d <= 2 / 3 + 1e-9


def test_grid_complex_pair(rng):
    ens = random_ensemble(rng, 2, 2, pure=True)
    res = grid_search(ens, 0.0, 48)
    diff = ens.priors[0] * ens.densities[0] - ens.priors[1] * ens.densities[1]
    helstrom = 0.5 * (1 + np.abs(np.linalg.eigvalsh(diff)).sum())
    assert helstrom - 5e-3 < res.p_d <= helstrom + 1e-9


def test_grid_size_limits(rng):
    with pytest.raises(UnsupportedSize):
        grid_search(random_ensemble(rng, 3, 3, pure=True), 0.0, 8)
    with pytest.raises(UnsupportedSize):
        grid_search(random_ensemble(rng, 2, 3), 0.0, 8)
    with pytest.raises(UnsupportedSize):
        grid_search(random_ensemble(rng, 2, 4, pure=True, real=True), 0.0, 8)


def test_ascent_reaches_known_optimum():
    res = random_restart_ascent(generate_gu(trine_spec()), 0.0, restarts=20, seed=7)
    assert abs(res.p_d - 2 / 3) < 1e-6
    res = random_restart_ascent(overlap_pair(0.0), 0.3, restarts=5, seed=1)
    assert abs(res.p_d - 0.7) < 1e-6


def test_ascent_is_seeded():
    ens = overlap_pair(0.4)
    a = random_restart_ascent(ens, 0.2, restarts=3, seed=11)
    b = random_restart_ascent(ens, 0.2, restarts=3, seed=11)
    assert a.p_d == b.p_d
