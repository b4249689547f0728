"""Log-barrier path-following solver for :class:`SdpProblem`.

The solver minimises ``c.x + mu * sum_b -log det X_b`` over the affine set
``A x = b`` for a decreasing sequence of barrier weights ``mu``.  Each
centering step is a damped Newton iteration on the bordered (saddle-point)
KKT system, followed by a backtracking line search that first restores
positive definiteness and then enforces sufficient decrease.

The duality gap of an exactly centred point is ``mu * sum_b dim(X_b)``; the
outer loop stops once that bound is below ``tol_gap / 10``.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import MaxIterations, NoStrictlyFeasibleStart, NumericalFailure
from ..linalg import from_coords, hermitian_basis, to_coords
from .problem import SdpProblem

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
MAX_ITERATIONS = "MaxIterations"
NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class SolverOptions:
    mu0: float = 1.0
    mu_factor: float = 10.0
    armijo: float = 0.01
    backtrack: float = 0.5
    tol_gap: float = 1e-6
    tol_newton: float = 1e-10
    tol_eq: float = 1e-8
    max_outer: int = 60
    max_inner: int = 50
    verbose: bool = False
    raise_on_failure: bool = False


@dataclass
class SdpSolution:
    values: dict
    objective: float
    status: str
    iterations: int
    outer_iterations: int
    mu: float
    residual: float
    gap_bound: float
    multipliers: np.ndarray
    history: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def __getitem__(self, name):
        return self.values[name]


class _Compiled:
    """Flat arrays for one problem: cost, equalities and PSD block slices."""

    def __init__(self, problem: SdpProblem):
        self.problem = problem
        c, a, b = problem.matrices()
        self.c = c
        self.a_full = a
        self.b_full = b
        layout = problem.layout()
        self.layout = layout
        self.psd = [(layout[blk.name], blk.dim) for blk in problem.blocks if blk.psd]
        self.n = c.size
        self.floors = []
        self.caps = []
        self._reduce_rows()

    def _reduce_rows(self):
        # drop linearly dependent equality rows; keep the map back to the originals
        a, b = self.a_full, self.b_full
        if a.shape[0] == 0:
            self.a, self.b = a, b
            self.row_map = np.zeros((0, 0))
            return
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        keep = s > s[0] * 1e-12
        u, s, vt = u[:, keep], s[keep], vt[keep]
        self.a = s[:, None] * vt
        self.b = u.T @ b
        self.row_map = u
        self.inconsistency = float(np.linalg.norm(b - u @ self.b))

    def blocks(self, x):
        return [from_coords(x[sl], d) for sl, d in self.psd]


def _barrier_terms(mats):
    """Barrier value, gradient pieces and Hessian blocks for a list of matrices.

    Returns ``None`` when any matrix is not positive definite.
    """
    value = 0.0
    grads, hessians = [], []
    for m in mats:
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return None
        value -= 2.0 * np.sum(np.log(np.diag(chol).real))
        inv = scipy.linalg.cho_solve((chol, True), np.eye(m.shape[0]))
        inv = 0.5 * (inv + inv.conj().T)
        basis = hermitian_basis(m.shape[0])
        grads.append(-to_coords(inv))
        left = inv @ basis @ inv
        hessians.append(np.einsum("kab,lba->kl", left, basis).real)
    return value, grads, hessians


def _barrier(comp, x):
    """Value, gradient and Hessian of the barrier at ``x`` (``None`` outside the cone)."""
    terms = _barrier_terms(comp.blocks(x))
    if terms is None:
        return None
    value, grads, hessians = terms
    grad = np.zeros(comp.n)
    hess = np.zeros((comp.n, comp.n))
    for (sl, _), gb, hb in zip(comp.psd, grads, hessians):
        grad[sl] += gb
        hess[sl, sl] += hb
    for idx, floor in comp.floors:
        gap = x[idx] - floor
        if gap <= 0:
            return None
        value -= np.log(gap)
        grad[idx] -= 1.0 / gap
        hess[idx, idx] += 1.0 / gap**2
    for diag, cap in comp.caps:
        gap = cap - np.sum(x[diag])
        if gap <= 0:
            return None
        value -= np.log(gap)
        grad[diag] += 1.0 / gap
        hess[np.ix_(diag, diag)] += 1.0 / gap**2
    return value, grad, hess


def _barrier_value(comp, x):
    value = 0.0
    for m in comp.blocks(x):
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return None
        value -= 2.0 * np.sum(np.log(np.diag(chol).real))
    for idx, floor in comp.floors:
        gap = x[idx] - floor
        if gap <= 0:
            return None
        value -= np.log(gap)
    for diag, cap in comp.caps:
        gap = cap - np.sum(x[diag])
        if gap <= 0:
            return None
        value -= np.log(gap)
    return value


def _center(comp: _Compiled, x, t, opts: SolverOptions, cost=None):
    """Damped Newton on ``t c.x + phi(x)`` subject to ``A x = b``.

    Returns ``(x, newton_steps, multipliers, converged)``; multipliers are the
    equality duals scaled back by ``1/t``.
    """
    c = comp.c if cost is None else cost
    a, b = comp.a, comp.b
    p = a.shape[0]
    w = np.zeros(p)
    steps = 0
    converged = False
    for _ in range(opts.max_inner):
        terms = _barrier(comp, x)
        if terms is None:
            raise NumericalFailure("iterate left the positive definite cone")
        phi, grad, h = terms
        g = t * c + grad
        r = b - a @ x
        # symmetric Jacobi scaling: blocks shrinking towards zero have Hessian
        # entries of order 1/mu**2, which would otherwise swamp the solve
        d = 1.0 / np.sqrt(np.maximum(np.diag(h), 1.0))
        kkt = np.zeros((comp.n + p, comp.n + p))
        kkt[:comp.n, :comp.n] = h * d[:, None] * d[None, :]
        kkt[:comp.n, comp.n:] = (a * d[None, :]).T
        kkt[comp.n:, :comp.n] = a * d[None, :]
        rhs = np.concatenate([-g * d, r])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sol = scipy.linalg.solve(kkt, rhs, assume_a="sym")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure(f"singular Newton system: {exc}") from exc
        if not np.all(np.isfinite(sol)):
            raise NumericalFailure("non-finite Newton direction")
        dx, w = sol[:comp.n] * d, sol[comp.n:]
        decrement = float(dx @ h @ dx)
        if decrement / 2.0 <= opts.tol_newton and np.linalg.norm(r) <= opts.tol_eq:
            converged = True
            break
        f0 = t * (c @ x) + phi
        slope = float(g @ dx)
        step = 1.0
        while True:
            xn = x + step * dx
            val = _barrier_value(comp, xn)
            if val is not None:
                fn = t * (c @ xn) + val
                if fn <= f0 + opts.armijo * step * min(slope, 0.0) or step < 1e-14:
                    break
            step *= opts.backtrack
            if step < 1e-14:
                break
        steps += 1
        if step < 1e-14:
            # no representable progress; the point is as centred as rounding allows
            converged = True
            break
        x = xn
    return x, steps, -w / t if t > 0 else w, converged


def _phase_one(comp: _Compiled, opts: SolverOptions):
    """Find ``x`` with ``A x = b`` and every PSD block positive definite.

    Minimises ``s`` over ``(y, s)`` with ``Y_b = X_b + s I`` kept inside the
    cone, stopping as soon as ``s`` is negative.
    """
    if comp.a.shape[0]:
        x0 = np.linalg.lstsq(comp.a, comp.b, rcond=None)[0]
    else:
        x0 = np.zeros(comp.n)
    if not comp.psd:
        return x0
    lows = [np.linalg.eigvalsh(m)[0] for m in comp.blocks(x0)]
    if min(lows) > 1e-8:
        return x0
    s0 = max(0.0, -min(lows)) + 1.0
    # identity direction per PSD block in coordinates
    ident = np.zeros(comp.n)
    for sl, d in comp.psd:
        ident[sl] = to_coords(np.eye(d))
    ext = _Compiled.__new__(_Compiled)
    ext.n = comp.n + 1
    ext.psd = comp.psd
    # s >= -1 and a trace cap per block keep the phase-one barrier bounded below
    ext.floors = [(comp.n, -1.0)]
    y = np.concatenate([x0 + s0 * ident, [s0]])
    ext.caps = []
    for sl, d in comp.psd:
        diag = np.arange(sl.start, sl.start + d)
        ext.caps.append((diag, 10.0 * (1.0 + np.sum(np.abs(y[diag]))) + 100.0 * d))
    ext.a = np.hstack([comp.a, -(comp.a @ ident)[:, None]])
    ext.b = comp.b
    ext.c = np.zeros(ext.n)
    ext.c[-1] = 1.0
    t = 1.0
    for _ in range(opts.max_outer):
        y, _, _, _ = _center(ext, y, t, opts)
        if y[-1] < -1e-6:
            break
        t *= opts.mu_factor
        if t > 1e12:
            break
    if y[-1] >= -1e-9:
        raise NoStrictlyFeasibleStart(
            f"no strictly feasible point found (phase-one bound {y[-1]:.3e})")
    return y[:-1] - y[-1] * ident


def _restore_equalities(comp: _Compiled, x):
    """Remove any equality residual left by damped steps with a least-norm correction.

    The correction is kept only if every PSD block stays positive definite.
    """
    if not comp.a.shape[0]:
        return x
    r = comp.b - comp.a @ x
    if not np.any(r):
        return x
    xn = x + np.linalg.lstsq(comp.a, r, rcond=None)[0]
    if _barrier_value(comp, xn) is None:
        return x
    return xn


def solve(problem: SdpProblem, options: SolverOptions | None = None) -> SdpSolution:
    """Solve ``problem`` with the log-barrier method.

    A strictly feasible start is taken from ``problem.start`` when present and
    otherwise constructed by a phase-one solve.
    """
    opts = options or SolverOptions()
    problem.validate()
    comp = _Compiled(problem)
    if comp.a.shape[0] and comp.inconsistency > 1e-9 * (1 + np.linalg.norm(comp.b_full)):
        raise NoStrictlyFeasibleStart("equality constraints are inconsistent")

    x = None
    if problem.start is not None:
        x = problem.pack(problem.start)
        mats = comp.blocks(x)
        if any(np.linalg.eigvalsh(m)[0] <= 0 for m in mats):
            x = None
    if x is None:
        x = _phase_one(comp, opts)

    degree = max(problem.barrier_degree, 1)
    mu = opts.mu0
    total_steps = 0
    history = []
    status = MAX_ITERATIONS
    w = np.zeros(comp.a.shape[0])
    outer = 0
    for outer in range(1, opts.max_outer + 1):
        x, steps, w, converged = _center(comp, x, 1.0 / mu, opts)
        total_steps += steps
        value = float(comp.c @ x)
        history.append(value)
        if opts.verbose:
            log.info("outer %3d  mu %.3e  newton %2d  objective %+.12f", outer, mu, steps, value)
        if not converged and opts.verbose:
            log.info("outer %3d  centering hit max_inner=%d", outer, opts.max_inner)
        if mu * degree <= opts.tol_gap / 10.0:
            status = OPTIMAL
            break
        mu /= opts.mu_factor

    x = _restore_equalities(comp, x)
    sign = -1.0 if problem.sense == "max" else 1.0
    layout = comp.layout
    values = {}
    for blk in problem.blocks:
        values[blk.name] = from_coords(x[layout[blk.name]], blk.dim)
    for s in problem.scalars:
        values[s] = float(x[layout[s]][0])
    residual = float(np.max(np.abs(comp.a_full @ x - comp.b_full))) if comp.a_full.size else 0.0
    # equality duals for the caller's sign convention and original rows
    multipliers = sign * (comp.row_map @ w) if comp.row_map.size else np.zeros(0)
    sol = SdpSolution(
        values=values,
        objective=sign * float(comp.c @ x),
        status=status,
        iterations=total_steps,
        outer_iterations=outer,
        mu=mu,
        residual=residual,
        gap_bound=mu * degree,
        multipliers=multipliers,
        history=[sign * h for h in history],
    )
    if opts.raise_on_failure and status != OPTIMAL:
        raise MaxIterations(f"barrier loop stopped after {outer} outer iterations")
    return sol
