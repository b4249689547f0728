"""JSON documents for ensembles, measurements and certificates.

Complex matrix entries are written as ``[re, im]`` pairs; plain numbers are
accepted on input as real entries.  Parsing is strict: unknown fields are
rejected.

Ensemble document (exactly one of ``states``, ``gu``, ``cgu``)::

    {"n": 2,
     "states": [{"prior": 0.5, "matrix": [[...]]}, {"prior": 0.5, "factor": [...]}]}
    {"n": 2, "gu": {"group": "rotation" | {"name": ..., "order": 3} | [U_1, ...],
                    "generator": [...]}}
    {"n": 2, "cgu": {"group": ..., "generators": [[...], ...], "generatorGroup": ...}}
"""

import json
from dataclasses import dataclass

import numpy as np

from .certificate import OptimalityCertificate
from .config import DEFAULT_TOL, Tolerances
from .ensemble import State, StateEnsemble, build_ensemble
from .errors import QDetectError
from .measurement import RejectingMeasurement
from .symmetry import CguSpec, GuSpec, UnitaryGroup, close_group, generate_cgu, generate_gu, named_group


class ParseError(QDetectError):
    """Malformed document: bad JSON, wrong structure or unknown fields."""


def _check_keys(obj, allowed: set, where: str, required: set = frozenset()) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise ParseError(f"{where}: unknown field(s) {sorted(extra)}")
    missing = set(required) - set(obj)
    if missing:
        raise ParseError(f"{where}: missing field(s) {sorted(missing)}")


def _entry(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ParseError(f"{where}: booleans are not numbers")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ParseError(f"{where}: expected a number or an [re, im] pair, got {x!r}")


def decode_matrix(obj, where: str = "matrix") -> np.ndarray:
    """List of rows -> complex matrix; ``[[a, b], [c, d]]`` is a 2x2 real matrix."""
    if isinstance(obj, list) and obj and all(isinstance(r, list) for r in obj):
        rows = [[_entry(v, where) for v in r] for r in obj]
        if len({len(r) for r in rows}) != 1:
            raise ParseError(f"{where}: ragged matrix")
        return np.array(rows, dtype=complex)
    raise ParseError(f"{where}: expected a list of rows")


def encode_matrix(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        return [[float(v.real), float(v.imag)] for v in a]
    return [[[float(v.real), float(v.imag)] for v in row] for row in a]


def _decode_factor(obj, where: str) -> np.ndarray:
    """A factor is a vector (list of entries) or an ``n x r`` matrix (list of rows).

    A list of two-number lists is read as a complex vector; write a real
    ``n x 2`` factor with explicit ``[re, im]`` entries.
    """
    if isinstance(obj, list) and obj and all(isinstance(r, list) for r in obj) and any(
            any(isinstance(v, list) for v in r) for r in obj):
        return decode_matrix(obj, where)
    if isinstance(obj, list) and obj and all(not isinstance(v, list) or (
            len(v) == 2 and not any(isinstance(w, list) for w in v)) for v in obj):
        return np.array([_entry(v, where) for v in obj], dtype=complex)
    return decode_matrix(obj, where)


def _decode_group(obj, n: int, where: str, tol: Tolerances) -> UnitaryGroup:
    if isinstance(obj, str):
        obj = {"name": obj}
    if isinstance(obj, dict):
        _check_keys(obj, {"name", "order"}, where, {"name"})
        order = obj.get("order")
        if order is not None and (not isinstance(order, int) or order < 1):
            raise ParseError(f"{where}: order must be a positive integer")
        try:
            return named_group(obj["name"], n=n, order=order)
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from exc
    if isinstance(obj, list):
        return close_group([decode_matrix(u, f"{where}[{k}]") for k, u in enumerate(obj)], tol)
    raise ParseError(f"{where}: expected a group name, a {{name, order}} object or a list of matrices")


@dataclass
class EnsembleDocument:
    ensemble: StateEnsemble
    kind: str                      # "states", "gu" or "cgu"
    spec: GuSpec | CguSpec | None = None


def parse_ensemble(doc, tol: Tolerances = DEFAULT_TOL) -> EnsembleDocument:
    _check_keys(doc, {"n", "states", "gu", "cgu"}, "document", {"n"})
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("document: n must be a positive integer")
    kinds = [k for k in ("states", "gu", "cgu") if k in doc]
    if len(kinds) != 1:
        raise ParseError("document: give exactly one of states, gu, cgu")
    kind = kinds[0]
    if kind == "states":
        states = doc["states"]
        if not isinstance(states, list) or not states:
            raise ParseError("states: expected a non-empty list")
        specs = []
        for k, s in enumerate(states):
            where = f"states[{k}]"
            _check_keys(s, {"prior", "matrix", "factor"}, where, {"prior"})
            prior = s["prior"]
            if isinstance(prior, bool) or not isinstance(prior, (int, float)):
                raise ParseError(f"{where}: prior must be a number")
            if ("matrix" in s) == ("factor" in s):
                raise ParseError(f"{where}: give exactly one of matrix, factor")
            if "matrix" in s:
                specs.append(State(float(prior), density=decode_matrix(s["matrix"], where)))
            else:
                specs.append(State(float(prior), factor=_decode_factor(s["factor"], where)))
        ens = build_ensemble(specs, tol)
        spec = None
    elif kind == "gu":
        g = doc["gu"]
        _check_keys(g, {"group", "generator"}, "gu", {"group", "generator"})
        spec = GuSpec(_decode_group(g["group"], n, "gu.group", tol), _decode_factor(g["generator"], "gu.generator"))
        ens = generate_gu(spec, tol)
    else:
        g = doc["cgu"]
        _check_keys(g, {"group", "generators", "generatorGroup"}, "cgu", {"group", "generators"})
        gens = g["generators"]
        if not isinstance(gens, list) or not gens:
            raise ParseError("cgu.generators: expected a non-empty list")
        vgroup = None
        if "generatorGroup" in g:
            vgroup = _decode_group(g["generatorGroup"], n, "cgu.generatorGroup", tol)
        spec = CguSpec(_decode_group(g["group"], n, "cgu.group", tol),
                       tuple(_decode_factor(x, f"cgu.generators[{k}]") for k, x in enumerate(gens)), vgroup)
        ens = generate_cgu(spec, tol)
    if ens.n != n:
        raise ParseError(f"document declares n={n} but the states have dimension {ens.n}")
    return EnsembleDocument(ens, kind, spec)


def load_json(path: str):
    """Read a JSON file; I/O and syntax problems become :class:`ParseError`."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def load_ensemble(path: str, tol: Tolerances = DEFAULT_TOL) -> EnsembleDocument:
    return parse_ensemble(load_json(path), tol)


# -- solution documents ------------------------------------------------------

SOLUTION_FIELDS = {"beta", "method", "p_d", "p_e", "p_i", "gap", "iters",
                   "measurement", "certificate", "report"}


def encode_measurement(meas: RejectingMeasurement) -> dict:
    return {"reject": encode_matrix(meas.reject), "conclusive": [encode_matrix(p) for p in meas.conclusive]}


def decode_measurement(obj) -> RejectingMeasurement:
    _check_keys(obj, {"reject", "conclusive"}, "measurement", {"reject", "conclusive"})
    if not isinstance(obj["conclusive"], list) or not obj["conclusive"]:
        raise ParseError("measurement.conclusive: expected a non-empty list")
    reject = decode_matrix(obj["reject"], "measurement.reject")
    ops = [decode_matrix(p, f"measurement.conclusive[{k}]") for k, p in enumerate(obj["conclusive"])]
    if any(p.shape != reject.shape for p in ops):
        raise ParseError("measurement: operators have different shapes")
    return RejectingMeasurement.from_operators(reject, ops, symmetrize=False)


def encode_certificate(cert: OptimalityCertificate) -> dict:
    return {"X": encode_matrix(cert.x), "delta": float(cert.delta), "dual_value": cert.dual_value}


def decode_certificate(obj, beta: float) -> OptimalityCertificate:
    _check_keys(obj, {"X", "delta", "dual_value"}, "certificate", {"X", "delta"})
    delta = obj["delta"]
    if isinstance(delta, bool) or not isinstance(delta, (int, float)):
        raise ParseError("certificate.delta must be a number")
    return OptimalityCertificate(decode_matrix(obj["X"], "certificate.X"), float(delta), beta)


@dataclass
class SolutionDocument:
    beta: float
    measurement: RejectingMeasurement
    certificate: OptimalityCertificate
    method: str = ""


def parse_solution(doc) -> SolutionDocument:
    _check_keys(doc, SOLUTION_FIELDS, "solution", {"beta", "measurement", "certificate"})
    beta = doc["beta"]
    if isinstance(beta, bool) or not isinstance(beta, (int, float)):
        raise ParseError("solution.beta must be a number")
    return SolutionDocument(float(beta), decode_measurement(doc["measurement"]),
                            decode_certificate(doc["certificate"], float(beta)), str(doc.get("method", "")))
