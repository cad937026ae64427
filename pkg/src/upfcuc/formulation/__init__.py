"""Model construction: instance containers and the per-strategy builders."""

from .builder import (
    STRATEGIES,
    StrategyConfig,
    build,
    build_dc,
    build_dispatch,
    fix_commitment,
)
from .instance import ProblemInstance, VariableMap
from .solution import UcSolution, extract_solution

__all__ = [
    "STRATEGIES",
    "StrategyConfig",
    "build",
    "build_dc",
    "build_dispatch",
    "fix_commitment",
    "ProblemInstance",
    "VariableMap",
    "UcSolution",
    "extract_solution",
]
