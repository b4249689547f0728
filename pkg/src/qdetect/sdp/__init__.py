"""Log-barrier SDP solver and the detection problems built on it."""

from .problem import Block, Equality, SdpProblem, shape_summary
from .solver import SdpSolution, SolverOptions, solve
from .detection import (
    DetectionResult,
    build_dual,
    build_primal,
    recover_primal,
    solve_detection,
    solve_dual,
    solve_primal,
)

__all__ = [
    "Block", "Equality", "SdpProblem", "shape_summary",
    "SdpSolution", "SolverOptions", "solve",
    "DetectionResult", "build_dual", "build_primal", "recover_primal",
    "solve_detection", "solve_dual", "solve_primal",
]
