"""End-to-end driver: build and solve one strategy/variant combination.

The variant decides the pipeline:

- ``DC``      — branch-and-bound on the linear instance.
- ``MIXED``   — DC branch-and-bound for the schedule, then the AC dispatch
                with the commitment fixed; an AC-infeasible schedule is a
                first-class result, not an error.
- ``AC``      — DC solution as warm start, then a depth-limited
                branch-and-bound over the commitment with NLP node solves,
                falling back to the mixed pipeline's result so the answer is
                never worse than MIXED.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ..case import NetworkCase
from ..formulation import StrategyConfig, build, build_dc, fix_commitment
from ..formulation.instance import ProblemInstance
from ..formulation.solution import UcSolution, extract_solution
from ..scenarios import ScenarioSet
from .common import SolveOptions, SolveReport, Trace
from .milp import solve_milp
from .nlp import certify_infeasibility, solve_nlp

_INTEGRAL_TOL = 1e-4


def _failed_solution(cfg: StrategyConfig, rep: SolveReport,
                     provenance: str, u=None) -> UcSolution:
    return UcSolution(strategy=cfg.strategy, variant=cfg.variant,
                      status=rep.status, objective=None, u=u,
                      provenance=provenance, message=rep.message)


def _warm_start_from(src: ProblemInstance, x_src: np.ndarray,
                     dst: ProblemInstance) -> np.ndarray:
    """Map a solution between instances block by block (flat voltages and
    zeros for anything the source does not carry)."""
    x = np.zeros(dst.n)
    for name in ("v_mag_1", "v_mag_2"):
        if name in dst.vm:
            x[dst.vm[name].reshape(-1)] = 1.0
    for name in dst.vm.names:
        if name in src.vm and src.vm[name].shape == dst.vm[name].shape:
            x[dst.vm[name].reshape(-1)] = x_src[src.vm[name].reshape(-1)]
    return x


def _commitment_of(inst: ProblemInstance, x: np.ndarray) -> np.ndarray:
    block = inst.vm["commit"]
    return np.round(x[block.reshape(-1)]).reshape(block.shape)


def _solve_fixed_dispatch(ac_inst: ProblemInstance, u: np.ndarray,
                          x0: np.ndarray, options: SolveOptions,
                          provenance: str) -> UcSolution:
    """AC dispatch under a fixed schedule; certifies infeasibility when the
    local solver cannot find a feasible point."""
    fixed = fix_commitment(ac_inst, u)
    x0 = x0.copy()
    x0[fixed.vm["commit"].reshape(-1)] = u.reshape(-1)
    rep = solve_nlp(fixed, options, x0=x0)
    if rep.ok:
        return extract_solution(fixed, rep.x, rep.status, provenance)
    cert = certify_infeasibility(fixed, options, x0=x0)
    if cert.status == "infeasible":
        cfg = ac_inst.meta["cfg"]
        return UcSolution(
            strategy=cfg.strategy, variant=cfg.variant, status="infeasible",
            objective=None, u=u.astype(int), provenance=provenance,
            message=("schedule admits no dispatch satisfying the network "
                     f"constraints (violation {cert.max_violation:.3e})"))
    # the elastic phase found a feasible point the line search missed
    rep = solve_nlp(fixed, options, x0=cert.x[:fixed.n])
    if rep.ok:
        return extract_solution(fixed, rep.x, rep.status, provenance)
    return _failed_solution(ac_inst.meta["cfg"], rep, provenance,
                            u=u.astype(int))


def _ac_branch_and_bound(ac_inst: ProblemInstance, options: SolveOptions,
                         x_warm: np.ndarray, incumbent: UcSolution | None,
                         max_depth: int = 8,
                         max_nodes: int = 24) -> UcSolution | None:
    """Depth-limited branch-and-bound with NLP node relaxations.

    Node objectives are local, so pruning is heuristic; every integral
    schedule encountered is re-dispatched exactly and the best result kept.
    """
    trace = Trace(options.trace_path, "ac-bnb")
    u_idx = ac_inst.vm["commit"].reshape(-1)
    best = incumbent if incumbent is not None and incumbent.feasible else None
    seen: set[bytes] = set()

    def consider(u: np.ndarray, x0: np.ndarray):
        nonlocal best
        key = u.astype(np.int8).tobytes()
        if key in seen:
            return
        seen.add(key)
        sol = _solve_fixed_dispatch(ac_inst, u, x0, options,
                                    "ac branch-and-bound")
        trace.log("candidate", f"status={sol.status} obj={sol.objective}")
        if sol.feasible and (best is None or not best.feasible
                             or sol.objective < best.objective - 1e-9):
            best = sol

    stack = [(0, ac_inst.lb, ac_inst.ub, x_warm)]
    nodes = 0
    while stack and nodes < max_nodes:
        depth, lb, ub, x0 = stack.pop()
        node = dataclasses.replace(ac_inst, lb=lb, ub=ub)
        rep = solve_nlp(node, options, x0=x0)
        nodes += 1
        if not rep.ok:
            trace.log("node", f"n={nodes} depth={depth} {rep.status}")
            continue
        if (best is not None and best.feasible
                and rep.objective >= best.objective - 1e-6):
            trace.log("node", f"n={nodes} pruned obj={rep.objective:.2f}")
            continue
        uv = rep.x[u_idx]
        frac = np.abs(uv - np.round(uv))
        if frac.max() <= _INTEGRAL_TOL or depth >= max_depth:
            consider(_commitment_of(ac_inst, rep.x), rep.x)
            continue
        j = int(u_idx[np.argmin(np.abs(frac - 0.5))])
        val = rep.x[j]
        trace.log("branch", f"n={nodes} var={ac_inst.vm.label(j)} "
                            f"val={val:.4f} obj={rep.objective:.2f}")
        near, far = (0.0, 1.0) if val < 0.5 else (1.0, 0.0)
        for side in (far, near):  # explore the nearer side first
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[j] = ub2[j] = side
            stack.append((depth + 1, lb2, ub2, rep.x))
    return best


def solve_strategy(case: NetworkCase, scenarios: ScenarioSet | None,
                   cfg: StrategyConfig,
                   options: SolveOptions | None = None) -> UcSolution:
    """Solve one strategy under one model variant, returning the best
    solution found together with how it was obtained."""
    options = options or SolveOptions()
    scen = scenarios if cfg.two_stage else None

    dc_cfg = dataclasses.replace(cfg, variant="DC")
    dc_inst = build_dc(case, scen, dc_cfg)
    dc_rep = solve_milp(dc_inst, options)

    if cfg.variant == "DC":
        if dc_rep.x is None:
            return _failed_solution(cfg, dc_rep, "dc branch-and-bound")
        return extract_solution(dc_inst, dc_rep.x, dc_rep.status,
                                "dc branch-and-bound")

    if dc_rep.x is None:
        return _failed_solution(cfg, dc_rep, "dc stage of " + cfg.variant)

    u_dc = _commitment_of(dc_inst, dc_rep.x)
    ac_inst = build(case, scen, cfg)
    x_warm = _warm_start_from(dc_inst, dc_rep.x, ac_inst)
    mixed = _solve_fixed_dispatch(ac_inst, u_dc, x_warm, options,
                                  "dc schedule + ac dispatch")
    if cfg.variant == "MIXED":
        return mixed

    best = _ac_branch_and_bound(ac_inst, options, x_warm,
                                mixed if mixed.feasible else None)
    if best is not None:
        return best
    if mixed.status == "infeasible":
        return mixed
    return _failed_solution(cfg, dc_rep, "ac branch-and-bound",
                            u=u_dc.astype(int))
