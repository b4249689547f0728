"""Solver-neutral description of a block-Hermitian SDP.

Variables are named Hermitian blocks (PSD-constrained or free) and named free
real scalars.  The objective and every equality are linear, written as trace
pairings ``Tr(A X)`` against the blocks plus plain coefficients on scalars.
"""

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import DimensionMismatch, NonHermitian
from ..linalg import hermitian_basis, hermitian_deviation, herm, to_coords


@dataclass(frozen=True)
class Block:
    name: str
    dim: int
    psd: bool = True
    slack: bool = False  # PSD slack standing in for an operator inequality

    @property
    def size(self) -> int:
        return self.dim * self.dim


@dataclass
class Equality:
    """``sum_b Tr(A_b X_b) + sum_s a_s s = rhs``."""

    terms: dict
    rhs: float
    group: int = 0


@dataclass
class SdpProblem:
    blocks: list = field(default_factory=list)
    scalars: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    equalities: list = field(default_factory=list)
    sense: str = "max"
    start: dict | None = None
    label: str = ""
    num_groups: int = 0

    def add_block(self, name: str, dim: int, psd: bool = True, slack: bool = False) -> Block:
        if name in self._names():
            raise ValueError(f"duplicate variable name {name!r}")
        block = Block(name, int(dim), psd, slack)
        self.blocks.append(block)
        return block

    def add_scalar(self, name: str) -> None:
        if name in self._names():
            raise ValueError(f"duplicate variable name {name!r}")
        self.scalars.append(name)

    def add_equality(self, terms: Mapping, rhs: float, _group: int | None = None) -> None:
        if _group is None:
            _group = self.num_groups
            self.num_groups += 1
        self.equalities.append(Equality(dict(terms), float(rhs), _group))

    def add_matrix_equality(self, terms: Mapping, rhs: np.ndarray) -> None:
        """Add ``sum_b sum_(w, K) w K X_b K* + sum_s s G_s = R`` as ``dim**2`` real rows.

        ``terms`` maps a block name to a list of ``(weight, K)`` pairs and a
        scalar name to its Hermitian coefficient matrix ``G_s``.
        """
        rhs = np.asarray(rhs, dtype=complex)
        basis = hermitian_basis(rhs.shape[0])
        scalar_set = set(self.scalars)
        group = self.num_groups
        self.num_groups += 1
        for e in basis:
            row = {}
            for name, spec in terms.items():
                if name in scalar_set:
                    row[name] = float(np.trace(e @ np.asarray(spec)).real)
                else:
                    acc = 0
                    for w, k in spec:
                        k = np.asarray(k, dtype=complex)
                        acc = acc + w * (k.conj().T @ e @ k)
                    row[name] = herm(acc)
            self.add_equality(row, float(np.trace(e @ rhs).real), group)

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def _names(self) -> set:
        return {b.name for b in self.blocks} | set(self.scalars)

    @property
    def num_variables(self) -> int:
        return sum(b.size for b in self.blocks) + len(self.scalars)

    @property
    def num_psd_variables(self) -> int:
        return sum(b.size for b in self.blocks if b.psd)

    @property
    def barrier_degree(self) -> int:
        return sum(b.dim for b in self.blocks if b.psd)

    def validate(self, tol: float = 1e-9) -> None:
        dims = {b.name: b.dim for b in self.blocks}
        scalars = set(self.scalars)
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        groups = [("objective", self.objective)]
        groups += [(f"equality {k}", eq.terms) for k, eq in enumerate(self.equalities)]
        for where, terms in groups:
            for name, coeff in terms.items():
                if name in scalars:
                    if not np.isfinite(float(coeff)):
                        raise ValueError(f"{where}: non-finite coefficient on {name!r}")
                    continue
                if name not in dims:
                    raise KeyError(f"{where}: unknown variable {name!r}")
                coeff = np.asarray(coeff)
                if coeff.shape != (dims[name], dims[name]):
                    raise DimensionMismatch(
                        f"{where}: coefficient on {name!r} has shape {coeff.shape}, "
                        f"expected {(dims[name], dims[name])}")
                if hermitian_deviation(coeff) > tol:
                    raise NonHermitian(f"{where}: coefficient on {name!r} is not Hermitian")
        for k, eq in enumerate(self.equalities):
            if not np.isfinite(eq.rhs):
                raise ValueError(f"equality {k}: non-finite right-hand side")

    # -- flattening -----------------------------------------------------

    def layout(self) -> dict:
        """Map each variable name to its slice in the flat coordinate vector."""
        out = {}
        offset = 0
        for b in self.blocks:
            out[b.name] = slice(offset, offset + b.size)
            offset += b.size
        for s in self.scalars:
            out[s] = slice(offset, offset + 1)
            offset += 1
        return out

    def _row(self, terms: Mapping, layout: dict) -> np.ndarray:
        row = np.zeros(self.num_variables)
        scalars = set(self.scalars)
        for name, coeff in terms.items():
            if name in scalars:
                row[layout[name]] += float(coeff)
            else:
                row[layout[name]] += to_coords(np.asarray(coeff, dtype=complex))
        return row

    def matrices(self):
        """Return ``(c, A, b)`` with the objective expressed for minimisation."""
        layout = self.layout()
        c = self._row(self.objective, layout)
        if self.sense == "max":
            c = -c
        if self.equalities:
            a = np.array([self._row(eq.terms, layout) for eq in self.equalities])
            b = np.array([eq.rhs for eq in self.equalities])
        else:
            a = np.zeros((0, self.num_variables))
            b = np.zeros(0)
        return c, a, b

    def pack(self, values: Mapping) -> np.ndarray:
        layout = self.layout()
        x = np.zeros(self.num_variables)
        for b in self.blocks:
            x[layout[b.name]] = to_coords(np.asarray(values[b.name], dtype=complex))
        for s in self.scalars:
            x[layout[s]] = float(values[s])
        return x

    def objective_value(self, values: Mapping) -> float:
        total = 0.0
        for name, coeff in self.objective.items():
            if name in self.scalars:
                total += float(coeff) * float(values[name])
            else:
                total += float(np.trace(np.asarray(coeff) @ np.asarray(values[name])).real)
        return total


def shape_summary(problem: SdpProblem) -> dict:
    """Sizes of a problem.

    ``unknowns`` counts real coordinates outside slack blocks.  A constraint
    group is one PSD condition on a non-slack block or one (matrix or scalar)
    equality; an equality defining a slack block stands for an operator
    inequality and is counted once.
    """
    return {
        "blocks": [(b.name, b.dim, b.psd) for b in problem.blocks],
        "scalars": list(problem.scalars),
        "variables": problem.num_variables,
        "unknowns": sum(b.size for b in problem.blocks if not b.slack) + len(problem.scalars),
        "equalities": len(problem.equalities),
        "constraint_groups": sum(1 for b in problem.blocks if b.psd and not b.slack) + problem.num_groups,
    }


def block_names(problem: SdpProblem, prefix: str) -> Sequence[str]:
    return [b.name for b in problem.blocks if b.name.startswith(prefix)]
