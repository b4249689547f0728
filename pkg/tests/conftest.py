import numpy as np
import pytest

from qdetect.ensemble import State, build_ensemble, pure_ensemble
from qdetect.errors import DeltaSingular
from qdetect.symmetry import CguSpec, GuSpec, named_group, rotation_group


def random_density(rng, n, rank=None):
    rank = n if rank is None else rank
    a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_vector(rng, n, real=False):
    v = rng.normal(size=n) + (0 if real else 1j * rng.normal(size=n))
    return v / np.linalg.norm(v)


def random_priors(rng, m):
    p = rng.uniform(0.2, 1.0, size=m)
    return p / p.sum()


def random_ensemble(rng, n, m, pure=False, real=False):
    """Random ensemble with a well-conditioned average; redraws (with full-rank states) if needed."""
    if pure and m < n:
        raise ValueError("m pure states cannot span n > m dimensions")
    full_rank = False
    while True:
        priors = random_priors(rng, m)
        if pure:
            specs = [State(p, factor=random_vector(rng, n, real)) for p in priors]
        else:
            specs = [State(p, density=random_density(rng, n, None if full_rank else int(rng.integers(1, n + 1))))
                     for p in priors]
        try:
            ens = build_ensemble(specs)
        except DeltaSingular:
            ens = None
        if ens is not None and np.linalg.eigvalsh(ens.delta)[0] > 1e-3:
            return ens
        full_rank = True


def random_measurement(rng, n, m):
    """Random POVM {Pi_0..Pi_m} via G^{-1/2} B_i B_i* G^{-1/2}."""
    from qdetect.linalg import eigh_sqrt
    from qdetect.measurement import RejectingMeasurement
    bs = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(m + 1)]
    ops = [b @ b.conj().T for b in bs]
    g = eigh_sqrt(sum(ops), -0.5)
    ops = [g @ a @ g for a in ops]
    return RejectingMeasurement.from_operators(ops[0], ops[1:])


def trine_spec():
    return GuSpec(rotation_group(3), np.array([1.0, 0.0]))


def fourier_spec():
    g = np.array([1.0, 0.9, 0.8, 0.7])
    return GuSpec(named_group("diagonal-phase", n=4), g / np.linalg.norm(g))


def cgu_spec():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    group = named_group("cyclic-shift", n=2)
    assert np.allclose(group.elements[1], x)
    return CguSpec(group, (np.array([1.0, 0.0]), np.array([np.cos(0.4), np.sin(0.4)])))


def overlap_pair(cos_theta, priors=(0.5, 0.5)):
    s = np.sqrt(1 - cos_theta ** 2)
    return pure_ensemble([[1.0, 0.0], [cos_theta, s]], priors)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting -----------------------------------------------------------

ACCEPTANCE = []  # (code, title, passed, detail, seconds), filled by test_acceptance.py


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for code, title, passed, detail, seconds in sorted(ACCEPTANCE, key=lambda r: int(r[0][1:])):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{code} {title}: {status} ({detail}; {seconds:.2f} s)")
