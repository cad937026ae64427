"""Branch-and-bound MILP solver on top of the LP back-end.

Node selection is best-bound (ties broken first-in-first-out), branching is
most-fractional (ties broken by lowest variable index, i.e. lowest unit then
earliest hour for the commitment block), so runs are deterministic.  An
initial incumbent comes from deterministic rounding of the root relaxation
(falling back to every binary at its upper bound, which is always
commitment-feasible here); binaries whose root reduced cost already exceeds
the optimality gap are then fixed at their bound before the search starts.
"""

from __future__ import annotations

import heapq
import time

import numpy as np

from ..formulation.instance import ProblemInstance
from .common import SolveOptions, SolveReport, Trace
from .lp import solve_lp


def solve_milp(inst: ProblemInstance,
               options: SolveOptions | None = None) -> SolveReport:
    options = options or SolveOptions()
    trace = Trace(options.trace_path, "milp")
    int_idx = np.nonzero(inst.integrality)[0]
    t0 = time.perf_counter()

    if len(int_idx) == 0:
        return solve_lp(inst, options)

    incumbent_x = None
    incumbent_obj = np.inf
    nodes = 0

    root = solve_lp(inst, options)
    if root.status == "infeasible":
        return SolveReport(status="infeasible",
                           runtime=time.perf_counter() - t0,
                           message="root relaxation infeasible")
    if not root.ok:
        return SolveReport(status="limit", runtime=time.perf_counter() - t0,
                           message=f"root relaxation: {root.message}")
    trace.log("root", f"bound={root.objective:.6f}")

    # warm incumbents, tried in order: the rounded root relaxation, the
    # fractional binaries pushed up, then everything at its upper bound
    rounded = np.round(root.x[int_idx])
    pushed_up = np.where(root.x[int_idx] > 1e-6, inst.ub[int_idx], rounded)
    all_up = inst.ub[int_idx]
    for fixing in (rounded, pushed_up, all_up):
        lb_fix, ub_fix = inst.lb.copy(), inst.ub.copy()
        lb_fix[int_idx] = ub_fix[int_idx] = fixing
        warm = solve_lp(inst, options, lb=lb_fix, ub=ub_fix)
        if warm.ok and warm.objective < incumbent_obj:
            incumbent_x = warm.x.copy()
            incumbent_x[int_idx] = np.round(incumbent_x[int_idx])
            incumbent_obj = warm.objective
            trace.log("incumbent", f"warm obj={incumbent_obj:.6f}")
        if np.isfinite(incumbent_obj):
            break

    counter = 0
    root_lb, root_ub = inst.lb, inst.ub
    if np.isfinite(incumbent_obj) and root.reduced_costs is not None:
        # reduced-cost fixing: a binary at its bound whose reduced cost
        # exceeds the room below the cutoff can never flip in an improving
        # solution
        room = (incumbent_obj
                - max(options.optimality_tol,
                      abs(incumbent_obj) * options.mip_gap)
                - root.objective)
        rc = root.reduced_costs[int_idx]
        span = inst.ub[int_idx] - inst.lb[int_idx]
        at_lb = np.abs(root.x[int_idx] - inst.lb[int_idx]) <= 1e-9
        at_ub = np.abs(root.x[int_idx] - inst.ub[int_idx]) <= 1e-9
        fix_low = at_lb & (rc * span > room)
        fix_high = at_ub & (-rc * span > room)
        if fix_low.any() or fix_high.any():
            root_lb, root_ub = inst.lb.copy(), inst.ub.copy()
            root_ub[int_idx[fix_low]] = inst.lb[int_idx[fix_low]]
            root_lb[int_idx[fix_high]] = inst.ub[int_idx[fix_high]]
            trace.log("fixing", f"low={int(fix_low.sum())} "
                                f"high={int(fix_high.sum())}")

    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
    heapq.heappush(heap, (root.objective, counter, root_lb, root_ub))
    best_bound = root.objective

    def cutoff():
        if not np.isfinite(incumbent_obj):
            return np.inf
        return incumbent_obj - max(options.optimality_tol,
                                   abs(incumbent_obj) * options.mip_gap)

    while heap:
        if (time.perf_counter() - t0 > options.time_limit
                or nodes >= options.max_nodes):
            return SolveReport(
                status="limit", x=incumbent_x,
                objective=incumbent_obj if incumbent_x is not None else None,
                iterations=nodes, runtime=time.perf_counter() - t0,
                bound=heap[0][0] if heap else best_bound,
                message="node or time limit before proving optimality")
        bound, _, lb, ub = heapq.heappop(heap)
        best_bound = bound
        if bound >= cutoff():
            continue
        res = solve_lp(inst, options, lb=lb, ub=ub)
        nodes += 1
        if res.status == "infeasible":
            trace.log("node", f"n={nodes} infeasible")
            continue
        if not res.ok:
            return SolveReport(status="limit", x=incumbent_x,
                               objective=incumbent_obj
                               if incumbent_x is not None else None,
                               iterations=nodes,
                               runtime=time.perf_counter() - t0,
                               bound=best_bound, message=res.message)
        if res.objective >= cutoff():
            trace.log("node", f"n={nodes} pruned obj={res.objective:.6f}")
            continue
        frac = np.abs(res.x[int_idx] - np.round(res.x[int_idx]))
        if frac.max() <= 1e-6:
            x = res.x.copy()
            x[int_idx] = np.round(x[int_idx])
            incumbent_x, incumbent_obj = x, res.objective
            trace.log("incumbent", f"n={nodes} obj={incumbent_obj:.6f}")
            continue
        # most-fractional branching, lowest index on ties
        j = int(int_idx[np.argmin(np.abs(frac - 0.5))])
        val = res.x[j]
        for side in ("down", "up"):
            lb2, ub2 = lb.copy(), ub.copy()
            if side == "down":
                ub2[j] = np.floor(val)
            else:
                lb2[j] = np.ceil(val)
            counter += 1
            heapq.heappush(heap, (res.objective, counter, lb2, ub2))
        trace.log("branch", f"n={nodes} var={inst.vm.label(j)} val={val:.4f} "
                            f"bound={res.objective:.6f}")

    runtime = time.perf_counter() - t0
    if incumbent_x is None:
        return SolveReport(status="infeasible", iterations=nodes,
                           runtime=runtime,
                           message="no integer-feasible point exists")
    return SolveReport(status="optimal", x=incumbent_x, objective=incumbent_obj,
                       iterations=nodes, runtime=runtime, bound=incumbent_obj)
