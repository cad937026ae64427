"""Optimization back-ends: LP (HiGHS), branch-and-bound MILP, interior-point NLP."""

from .common import SolveOptions, SolveReport
from .lp import solve_lp
from .milp import solve_milp
from .nlp import solve_nlp

__all__ = ["SolveOptions", "SolveReport", "solve_lp", "solve_milp", "solve_nlp"]
