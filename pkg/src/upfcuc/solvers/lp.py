"""Linear-programming back-end (HiGHS via scipy.optimize.linprog)."""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import linprog

from ..formulation.instance import ProblemInstance
from .common import SolveOptions, SolveReport


def solve_lp(inst: ProblemInstance, options: SolveOptions | None = None,
             lb: np.ndarray | None = None,
             ub: np.ndarray | None = None) -> SolveReport:
    """Solve the continuous relaxation of a linear instance.

    ``lb``/``ub`` override the instance bounds (used by branch-and-bound);
    integrality is ignored here by design.
    """
    if not inst.is_linear:
        raise ValueError("instance has nonlinear terms; use solve_nlp")
    options = options or SolveOptions()
    lb = inst.lb if lb is None else lb
    ub = inst.ub if ub is None else ub
    t0 = time.perf_counter()
    res = linprog(
        inst.c,
        A_ub=inst.A_ub if inst.A_ub.shape[0] else None,
        b_ub=inst.b_ub if inst.A_ub.shape[0] else None,
        A_eq=inst.A_eq if inst.A_eq.shape[0] else None,
        b_eq=inst.b_eq if inst.A_eq.shape[0] else None,
        bounds=np.column_stack([lb, ub]),
        method="highs",
        options={"time_limit": options.time_limit,
                 "primal_feasibility_tolerance": options.feasibility_tol,
                 "dual_feasibility_tolerance": options.feasibility_tol},
    )
    runtime = time.perf_counter() - t0
    if res.status == 0:
        reduced = None
        if getattr(res, "lower", None) is not None:
            reduced = (np.asarray(res.lower.marginals)
                       + np.asarray(res.upper.marginals))
        return SolveReport(status="optimal", x=res.x,
                           objective=float(res.fun) + inst.c0,
                           iterations=int(res.nit), runtime=runtime,
                           reduced_costs=reduced)
    if res.status == 2:
        return SolveReport(status="infeasible", runtime=runtime,
                           message=res.message)
    return SolveReport(status="limit", runtime=runtime, message=res.message)
