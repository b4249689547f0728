"""Numerical tolerances shared across modules."""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-9
    trace: float = 1e-9
    prob: float = 1e-9
    psd: float = 1e-9
    factor: float = 1e-8
    rank: float = 1e-10
    resolve: float = 1e-8
    triple: float = 1e-9
    cond: float = 1e-8
    kkt: float = 1e-6
    gap: float = 1e-6
    group: float = 1e-8

    def with_(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOL = Tolerances()
