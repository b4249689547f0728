"""Brute-force optimisers for tiny instances, independent of the SDP engine.

Both searches only ever return measurements that satisfy every constraint
exactly, so their values are lower bounds on the optimum.

``grid_search`` (qubits, pure states, ``m <= 3``) enumerates rank-one
conclusive operators ``Pi_i = t_i |v_i><v_i|``.  For pure states every
optimal ``Pi_i`` has rank at most one, so nothing is lost by this form.
Directions run over a grid; the weights are not gridded exhaustively.  With
the directions fixed, ``P_I = beta`` is one linear equation in the weights
and ``P_D`` is linear in them.  For ``m = 2`` the remaining weight is solved
exactly on the interval where ``Pi_0 >= 0``.  For ``m = 3`` the first weight
is gridded and the last two are solved the same way; at ``beta = 0``, where
``Pi_0 = 0`` pins all three weights, they are solved from
``sum_i Pi_i = I`` directly.  When every state is
real, directions are restricted to the real circle, where a real optimum
exists.

``random_restart_ascent`` parameterises a full POVM as
``Pi_i = G^-1/2 B_i B_i* G^-1/2`` with ``G = sum_i B_i B_i*`` and maximises
``P_D`` under ``P_I = beta`` with SLSQP from random starts.
"""

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .ensemble import StateEnsemble
from .errors import UnsupportedSize
from .measurement import RejectingMeasurement, adjust_inconclusive, evaluate, reject_all

# candidate weights are accepted when lambda_max(sum_i Pi_i) <= 1 + this
PSD_SLACK = 1e-12
# directions are evaluated in chunks of this many tuples
CHUNK = 1 << 16


@dataclass
class OracleResult:
    p_d: float
    measurement: RejectingMeasurement
    resolution: int
    evaluations: int


def _pure_vectors(ensemble: StateEnsemble) -> np.ndarray:
    if not ensemble.is_pure:
        raise UnsupportedSize("the grid oracle handles pure states only")
    vecs = np.array([f[:, 0] / np.linalg.norm(f[:, 0]) for f in ensemble.factors])
    return vecs


def _is_real(vecs: np.ndarray, tol: float = 1e-12) -> bool:
    for v in vecs:
        k = int(np.argmax(np.abs(v)))
        w = v * np.conj(v[k]) / abs(v[k])
        if np.max(np.abs(w.imag)) > tol:
            return False
    return True


def _directions(resolution: int, real: bool) -> np.ndarray:
    """Unit vectors on the grid, shape ``(count, 2)``."""
    if real:
        a = np.pi * np.arange(resolution) / resolution
        return np.stack([np.cos(a), np.sin(a)], axis=1).astype(complex)
    theta = np.linspace(0.0, np.pi, resolution)
    phi = 2 * np.pi * np.arange(resolution) / resolution
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    v = np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], axis=-1).reshape(-1, 2)
    # theta = 0 and theta = pi collapse over phi; keep one copy of each
    keep = np.ones(len(v), bool)
    keep[1:resolution] = False
    keep[-resolution + 1:] = False
    return v[keep]


def _lam_max(p, r, q):
    """Largest eigenvalue of the Hermitian 2x2 ``[[p, q], [q*, r]]`` (vectorised)."""
    return 0.5 * (p + r) + np.sqrt(0.25 * (p - r) ** 2 + np.abs(q) ** 2)


def _best_pair(b11, b22, b12, da, db, aa, ab, ca, cb, rem):
    """Best ``x Pi_a + y Pi_b`` on top of a fixed part ``B``.

    ``da``, ``db`` are the rank-one projectors (as ``(11, 22, 12)`` triples),
    ``aa``, ``ab`` their ``Tr(Delta .)`` weights, ``ca``, ``cb`` their
    objective weights and ``rem`` the remaining ``1 - beta`` budget.  Solves
    ``x aa + y ab = rem``, ``x, y >= 0`` and ``lambda_max(B + x Pi_a + y Pi_b) <= 1``.
    Returns ``(value, x, y)`` with ``value = -inf`` where infeasible.
    """
    # y = (rem - x aa) / ab; M(x) = B + (rem/ab) Pi_b + x (Pi_a - (aa/ab) Pi_b) = B' + x D
    k = rem / ab
    e11, e22, e12 = b11 + k * db[0], b22 + k * db[1], b12 + k * db[2]
    s = aa / ab
    d11, d22, d12 = da[0] - s * db[0], da[1] - s * db[1], da[2] - s * db[2]
    # det(I - B' - x D) = c2 x^2 + c1 x + c0
    c2 = d11 * d22 - np.abs(d12) ** 2
    c1 = -(1 - e11) * d22 - (1 - e22) * d11 - 2 * np.real(e12 * np.conj(d12))
    c0 = (1 - e11) * (1 - e22) - np.abs(e12) ** 2
    hi = np.where(rem > 0, rem / aa, 0.0)
    cands = [np.zeros_like(hi), hi]
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = c1 ** 2 - 4 * c2 * c0
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        quad = np.abs(c2) > 1e-14
        r1 = np.where(quad, (-c1 - sq) / (2 * c2), -c0 / c1)
        r2 = np.where(quad, (-c1 + sq) / (2 * c2), np.nan)
    cands += [r1, r2]
    slope = ca - s * cb
    best = np.full(hi.shape, -np.inf)
    best_x = np.zeros_like(hi)
    for x in cands:
        x = np.clip(np.nan_to_num(x, nan=-1.0), -1.0, None)
        ok = (x >= 0) & (x <= hi) & (rem >= 0)
        lam = _lam_max(e11 + x * d11, e22 + x * d22, e12 + x * d12)
        ok &= lam <= 1 + PSD_SLACK
        val = np.where(ok, k * cb + x * slope, -np.inf)
        better = val > best
        best = np.where(better, val, best)
        best_x = np.where(better, x, best_x)
    return best, best_x, (rem - best_x * aa) / ab


def _proj(v):
    """``(|v0|^2, |v1|^2, v0 v1*)`` for rows of ``v``."""
    return np.abs(v[..., 0]) ** 2, np.abs(v[..., 1]) ** 2, v[..., 0] * np.conj(v[..., 1])


def _resolve_identity(tup, pr, c):
    """Weights with ``sum_i t_i |v_i><v_i| = I`` for real direction triples."""
    # coordinates (11, 22, Re 12) of each projector; columns are the three operators
    cols = np.stack([np.stack([pr[0][i], pr[1][i], pr[2][i].real], axis=-1) for i in tup], axis=-1)
    det = np.linalg.det(cols)
    good = np.abs(det) > 1e-12
    ts = np.full((tup.shape[1], 3), -1.0)
    rhs = np.broadcast_to(np.array([1.0, 1.0, 0.0]), (int(good.sum()), 3))
    ts[good] = np.linalg.solve(cols[good], rhs[..., None])[..., 0]
    ok = good & np.all(ts >= -PSD_SLACK, axis=1)
    ts = np.clip(ts, 0.0, None)
    val = sum(ts[:, j] * c[j, tup[j]] for j in range(3))
    return np.where(ok, val, -np.inf), ts


def grid_search(ensemble: StateEnsemble, beta: float, resolution: int = 64) -> OracleResult:
    """Best rank-one measurement over a direction grid (see module docstring)."""
    if ensemble.n != 2 or ensemble.m > 3:
        raise UnsupportedSize(f"grid oracle needs n = 2 and m <= 3, got n={ensemble.n}, m={ensemble.m}")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    vecs = _pure_vectors(ensemble)
    real = _is_real(vecs)
    if not real and ensemble.m > 2:
        raise UnsupportedSize("complex ensembles are supported for m <= 2 only")
    dirs = _directions(resolution, real)
    delta = ensemble.delta
    a = np.einsum("ka,ab,kb->k", dirs.conj(), delta, dirs).real            # Tr(Delta |v><v|)
    c = ensemble.priors[:, None] * np.abs(vecs.conj() @ dirs.T) ** 2         # p_i |<psi_i|v>|^2
    pr = _proj(dirs)
    m, nd = ensemble.m, len(dirs)
    rem0 = 1.0 - beta
    weights = np.linspace(0.0, 1.0, resolution) if m == 3 else np.zeros(1)
    best = (-np.inf, None)
    evaluations = 0
    # enumerate direction tuples (i_1, ..., i_m) in lexicographic order, chunked
    total = nd ** m
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK))
        tup = np.array(np.unravel_index(idx, (nd,) * m))
        ia, ib = tup[-2], tup[-1]
        da = tuple(p[ia] for p in pr)
        db = tuple(p[ib] for p in pr)
        if m == 3 and beta == 0.0:
            # P_I = 0 forces Pi_0 = 0: the weights solve sum_i t_i |v_i><v_i| = I exactly
            val, ts = _resolve_identity(tup, pr, c)
            evaluations += len(idx)
            k = int(np.argmax(val))
            if val[k] > best[0]:
                best = (float(val[k]), (tup[:, k].copy(), *ts[k]))
            continue
        for t in weights:
            if m == 3:
                i1 = tup[0]
                b11, b22, b12 = (t * p[i1] for p in pr)
                rem = rem0 - t * a[i1]
                base = t * c[0, i1]
            else:
                b11 = b22 = np.zeros(len(idx))
                b12 = np.zeros(len(idx), complex)
                rem = np.full(len(idx), rem0)
                base = 0.0
            val, x, y = _best_pair(b11, b22, b12, da, db, a[ia], a[ib], c[-2, ia], c[-1, ib], rem)
            val = val + base
            evaluations += len(idx)
            k = int(np.argmax(val))
            if val[k] > best[0]:
                best = (float(val[k]), (tup[:, k].copy(), t, float(x[k]), float(y[k])))
    if best[1] is None:
        return OracleResult(0.0, reject_all(2, m), resolution, evaluations)
    tup, *ts = best[1]
    if m == 2:
        ts = ts[1:]
    ops = [w * np.outer(dirs[i], dirs[i].conj()) for w, i in zip(ts, tup)]
    meas = RejectingMeasurement.completed(ops)
    return OracleResult(evaluate(ensemble, meas, check=False).p_d, meas, resolution, evaluations)


# -- random-restart ascent ---------------------------------------------------

def _unpack(params: np.ndarray, n: int, m: int) -> np.ndarray:
    """Batch of parameter vectors -> operators ``B_i``, shape ``(batch, m+1, n, n)``."""
    half = params.shape[-1] // 2
    z = params[..., :half] + 1j * params[..., half:]
    return z.reshape(params.shape[:-1] + (m + 1, n, n))


def _povms(params: np.ndarray, n: int, m: int) -> np.ndarray:
    b = _unpack(params, n, m)
    outer = b @ np.conj(np.swapaxes(b, -1, -2))
    g = outer.sum(axis=-3)
    w, v = np.linalg.eigh(g)
    inv_half = (v * (1.0 / np.sqrt(np.maximum(w, 1e-300)))[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    return inv_half[..., None, :, :] @ outer @ inv_half[..., None, :, :]


def _values(params, n, m, costs, delta):
    """``(P_D, P_I)`` for a batch of parameter vectors."""
    pis = _povms(params, n, m)
    p_d = np.einsum("iab,...iba->...", costs, pis[..., 1:, :, :]).real
    p_i = np.einsum("ab,...ba->...", delta, pis[..., 0, :, :]).real
    return p_d, p_i


def _fd_grad(fun, x, h=1e-7):
    """Central differences evaluated as one batch; ``fun`` maps ``(k, P) -> (k,)``."""
    eye = np.eye(x.size) * h
    pts = np.concatenate([x + eye, x - eye])
    vals = fun(pts)
    return (vals[: x.size] - vals[x.size:]) / (2 * h)


def random_restart_ascent(ensemble: StateEnsemble, beta: float, restarts: int = 20,
                          seed: int = 0, max_iter: int = 300) -> OracleResult:
    """Best of ``restarts`` local maximisations; deterministic for a given seed."""
    n, m = ensemble.n, ensemble.m
    if n > 3 or m > 4:
        raise UnsupportedSize(f"ascent oracle needs n <= 3 and m <= 4, got n={n}, m={m}")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    costs = np.array([p * rho for p, rho in zip(ensemble.priors, ensemble.densities)])
    delta = ensemble.delta
    size = 2 * (m + 1) * n * n
    rng = np.random.default_rng(seed)

    def neg_pd(x):
        return -_values(x, n, m, costs, delta)[0]

    def rate(x):
        return _values(x, n, m, costs, delta)[1] - beta

    best_val, best_meas = -np.inf, None
    evaluations = 0
    for _ in range(restarts):
        x0 = rng.normal(size=size)
        res = scipy.optimize.minimize(
            lambda x: float(neg_pd(x[None])[0]), x0,
            jac=lambda x: _fd_grad(neg_pd, x),
            constraints=[{"type": "eq",
                          "fun": lambda x: float(rate(x[None])[0]),
                          "jac": lambda x: _fd_grad(rate, x)}],
            method="SLSQP", options={"maxiter": max_iter, "ftol": 1e-13})
        evaluations += int(res.nfev) * (2 * size + 1)
        pis = _povms(res.x[None], n, m)[0]
        meas = RejectingMeasurement.from_operators(pis[0], list(pis[1:]))
        meas = adjust_inconclusive(ensemble, meas, beta)
        val = evaluate(ensemble, meas, check=False).p_d
        if val > best_val:
            best_val, best_meas = val, meas
    return OracleResult(float(best_val), best_meas, 0, evaluations)
