"""Command-line interface.

Exit codes: 0 success (and, where applicable, optimal); 1 usage, I/O or
parse error; 2 invalid input or a measurement that is not certified
optimal; 3 solver failure.
"""

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .certificate import OptimalityCertificate, check_optimality
from .config import DEFAULT_TOL, Tolerances
from .errors import ConditionFails, DimensionMismatch, QDetectError, SolverError, ValidationError
from .io import (
    EnsembleDocument,
    ParseError,
    encode_certificate,
    encode_measurement,
    load_ensemble,
    load_json,
    parse_solution,
)
from .measurement import RejectingMeasurement, evaluate
from .oracle import grid_search, random_restart_ascent
from .sdp.detection import solve_detection
from .sdp.solver import SolverOptions
from .sim import sim_certificate, sim_measurement, sim_condition_check
from .symmetry import CguSpec, GuSpec, solve_cgu_reduced, solve_gu_reduced

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3
SWEEP_HEADER = ["beta", "p_d", "p_e", "p_i", "gap", "iters", "method"]

log = logging.getLogger("qdetect")


class UsageError(Exception):
    pass


@dataclass
class SolveOutcome:
    method: str          # sdp | sim | gu-reduced | cgu-reduced
    beta: float
    measurement: RejectingMeasurement
    certificate: OptimalityCertificate
    iters: int

    def document(self, ensemble, tol: Tolerances) -> dict:
        probs = evaluate(ensemble, self.measurement, tol)
        report = check_optimality(ensemble, self.measurement, self.certificate, self.beta, tol)
        return {
            "beta": self.beta,
            "method": self.method,
            "p_d": probs.p_d,
            "p_e": probs.p_e,
            "p_i": probs.p_i,
            "gap": report.gap,
            "iters": self.iters,
            "measurement": encode_measurement(self.measurement),
            "certificate": encode_certificate(self.certificate),
            "report": report.as_dict(),
        }


def resolve_method(doc: EnsembleDocument, method: str) -> str:
    if method == "auto":
        method = "reduced" if doc.spec is not None else "full"
    if method == "full":
        return "sdp"
    if method == "sim":
        return "sim"
    if method == "reduced":
        if isinstance(doc.spec, GuSpec):
            return "gu-reduced"
        if isinstance(doc.spec, CguSpec):
            return "cgu-reduced"
        raise UsageError("--method reduced needs a gu or cgu document")
    raise UsageError(f"unknown method {method!r}")


def solve_document(doc: EnsembleDocument, beta: float, method: str,
                   options: SolverOptions, tol: Tolerances) -> SolveOutcome:
    """Solve one ensemble at one ``beta`` with the resolved method tag."""
    ens = doc.ensemble
    if method == "sim":
        meas = sim_measurement(ens, beta)
        cert = sim_certificate(ens, beta, tol)  # ConditionFails when the SIM is not optimal
        return SolveOutcome("sim", beta, meas, cert, 0)
    if method == "gu-reduced":
        res = solve_gu_reduced(doc.spec, beta, options, tol)
        return SolveOutcome(method, beta, res.measurement, res.certificate, res.solution.iterations)
    if method == "cgu-reduced":
        res = solve_cgu_reduced(doc.spec, beta, options, tol)
        return SolveOutcome(method, beta, res.measurement, res.certificate, res.solution.iterations)
    res = solve_detection(ens, beta, options, tol)
    return SolveOutcome("sdp", beta, res.measurement, res.certificate, res.iterations)


# -- argument helpers ----------------------------------------------------------

def _beta(value: str) -> float:
    try:
        beta = float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from exc
    if not 0.0 <= beta < 1.0:
        raise argparse.ArgumentTypeError(f"beta must lie in [0, 1), got {beta}")
    return beta


def parse_beta_grid(text: str) -> list:
    """``a:b:step`` (both ends included when hit) or a comma-separated list; sorted ascending."""
    text = text.strip()
    if not text:
        raise UsageError("empty beta grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"beta grid {text!r}: expected a:b:step")
        try:
            a, b, step = (float(p) for p in parts)
        except ValueError as exc:
            raise UsageError(f"beta grid {text!r}: {exc}") from exc
        if step <= 0:
            raise UsageError("beta grid step must be positive")
        count = int(np.floor((b - a) / step + 1e-9)) + 1
        values = [a + k * step for k in range(max(count, 0))]
    else:
        try:
            values = [float(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise UsageError(f"beta grid {text!r}: {exc}") from exc
    if not values:
        raise UsageError("empty beta grid")
    bad = [v for v in values if not 0.0 <= v < 1.0]
    if bad:
        raise UsageError(f"beta values outside [0, 1): {bad}")
    return sorted(set(round(v, 15) for v in values))


def _options(args) -> SolverOptions:
    kw = {"verbose": args.verbose}
    if args.tol_gap is not None:
        kw["tol_gap"] = args.tol_gap
    if args.max_iters is not None:
        kw["max_outer"] = args.max_iters
    return SolverOptions(**kw)


def _tolerances(args) -> Tolerances:
    return DEFAULT_TOL if args.tol_gap is None else DEFAULT_TOL.with_(gap=args.tol_gap)


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _default_beta(doc: EnsembleDocument, beta: float | None) -> float:
    return doc.ensemble.spectrum().beta_min if beta is None else beta


# -- subcommands -----------------------------------------------------------------

def cmd_validate(args) -> int:
    doc = load_ensemble(args.ensemble)
    ens = doc.ensemble
    spec = ens.spectrum()
    cond = sim_condition_check(ens)
    report = {
        "valid": True,
        "kind": doc.kind,
        "n": ens.n,
        "m": ens.m,
        "priors": ens.priors.tolist(),
        "ranks": list(ens.ranks),
        "delta_eigenvalues": spec.eigenvalues.tolist(),
        "beta_min": spec.beta_min,
        "sim_condition": {"holds": cond.holds, "alpha": cond.alpha, "deviation": cond.deviation},
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_solve(args) -> int:
    doc = load_ensemble(args.ensemble)
    beta = _default_beta(doc, args.beta)
    method = resolve_method(doc, args.method)
    tol = _tolerances(args)
    out = solve_document(doc, beta, method, _options(args), tol)
    body = out.document(doc.ensemble, tol)
    _write(json.dumps(body, indent=2) + "\n", args.out)
    verdict = body["report"]["verdict"]
    if verdict != "Optimal":
        print(f"certificate check: {verdict}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def _sweep_row(doc, beta, method, options, tol):
    try:
        out = solve_document(doc, beta, method, options, tol)
        probs = evaluate(doc.ensemble, out.measurement, tol)
        gap = out.certificate.dual_value - probs.p_d
        return [beta, probs.p_d, probs.p_e, probs.p_i, gap, out.iters, out.method]
    except QDetectError as exc:
        log.warning("beta=%g failed: %s: %s", beta, type(exc).__name__, exc)
        nan = float("nan")
        return [beta, nan, nan, nan, nan, 0, "failed"]


def cmd_sweep(args) -> int:
    grid = parse_beta_grid(args.beta_grid)
    doc = load_ensemble(args.ensemble)
    method = resolve_method(doc, args.method)
    options, tol = _options(args), _tolerances(args)
    # rows are independent solves; map() keeps them in grid order
    with ThreadPoolExecutor(max_workers=max(1, min(args.jobs, len(grid)))) as pool:
        rows = list(pool.map(lambda b: _sweep_row(doc, b, method, options, tol), grid))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
    finally:
        if args.out:
            fh.close()
    return EXIT_INVALID if any(r[-1] == "failed" for r in rows) else EXIT_OK


def cmd_certify(args) -> int:
    sol = parse_solution(load_json(args.solution))
    doc = load_ensemble(args.ensemble)
    try:
        report = check_optimality(doc.ensemble, sol.measurement, sol.certificate, sol.beta)
    except DimensionMismatch as exc:
        raise ParseError(f"solution does not match the ensemble: {exc}") from exc
    print(json.dumps(report.as_dict(), indent=2))
    return EXIT_OK if report.optimal else EXIT_INVALID


def cmd_sim(args) -> int:
    doc = load_ensemble(args.ensemble)
    ens = doc.ensemble
    beta = _default_beta(doc, args.beta)
    meas = sim_measurement(ens, beta)
    probs = evaluate(ens, meas)
    cond = sim_condition_check(ens)
    body = {
        "beta": beta,
        "beta_min": ens.spectrum().beta_min,
        "gamma": float(np.sqrt((1.0 - beta) / ens.n)),
        "p_d": probs.p_d,
        "p_e": probs.p_e,
        "p_i": probs.p_i,
        "condition": {"holds": cond.holds, "alpha": cond.alpha, "deviation": cond.deviation},
        "measurement": encode_measurement(meas),
    }
    if cond.holds:
        cert = sim_certificate(ens, beta)
        body["certificate"] = encode_certificate(cert)
        body["report"] = check_optimality(ens, meas, cert, beta).as_dict()
    _write(json.dumps(body, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    doc = load_ensemble(args.ensemble)
    beta = _default_beta(doc, args.beta)
    if args.kind == "grid":
        res = grid_search(doc.ensemble, beta, args.resolution)
    else:
        res = random_restart_ascent(doc.ensemble, beta, args.restarts, args.seed)
    body = {
        "beta": beta,
        "kind": args.kind,
        "p_d": res.p_d,
        "resolution": res.resolution,
        "evaluations": res.evaluations,
        "measurement": encode_measurement(res.measurement),
    }
    _write(json.dumps(body, indent=2) + "\n", args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-gap", type=float, default=None, help="duality-gap tolerance (default 1e-6)")
    common.add_argument("--max-iters", type=int, default=None, help="maximum outer barrier iterations")
    common.add_argument("--seed", type=int, default=0, help="random seed (oracle ascent)")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--verbose", action="store_true", help="log solver iterations to stderr")

    parser = argparse.ArgumentParser(
        prog="qdetect",
        description="Optimal quantum measurements with a fixed inconclusive rate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="validate an ensemble document")
    p.add_argument("ensemble")
    p.set_defaults(func=cmd_validate)

    methods = ["full", "sim", "reduced", "auto"]
    p = sub.add_parser("solve", parents=[common], help="optimal measurement at one beta")
    p.add_argument("ensemble")
    p.add_argument("--beta", type=_beta, default=None, help="inconclusive rate (default: beta_min)")
    p.add_argument("--method", choices=methods, default="auto")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="solve over a grid of beta values (CSV)")
    p.add_argument("ensemble")
    p.add_argument("--beta-grid", required=True, help="a:b:step or comma-separated list")
    p.add_argument("--method", choices=methods, default="auto")
    p.add_argument("--jobs", type=int, default=4, help="concurrent solves")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("certify", parents=[common], help="check a solution file against an ensemble")
    p.add_argument("solution")
    p.add_argument("ensemble")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sim", parents=[common], help="scaled inverse measurement and its certificate")
    p.add_argument("ensemble")
    p.add_argument("--beta", type=_beta, default=None, help="inconclusive rate (default: beta_min)")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("oracle", parents=[common], help="brute-force lower bound for tiny instances")
    p.add_argument("ensemble")
    p.add_argument("--beta", type=_beta, default=None, help="inconclusive rate (default: beta_min)")
    p.add_argument("--kind", choices=["grid", "ascent"], default="grid")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--restarts", type=int, default=20)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; the contract reserves 2 for invalid input
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ConditionFails) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
