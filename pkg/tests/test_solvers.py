"""Solver back-ends: MILP against exhaustive enumeration, LP/NLP sanity."""

import itertools

import numpy as np
import pytest

from upfcuc.case import schedule_uc_cost
from upfcuc.formulation import StrategyConfig, build_dc, fix_commitment
from upfcuc.solvers import SolveOptions, solve_lp, solve_milp, solve_nlp


def _enumerate_optimum(case, inst, options):
    """Best objective over every commitment, via LP dispatch per schedule."""
    g, t = len(case.units), case.horizon
    best = np.inf
    best_u = None
    for bits in itertools.product((0, 1), repeat=g * t):
        u = np.array(bits).reshape(g, t)
        fixed = fix_commitment(inst, u)
        rep = solve_lp(fixed, options)
        if rep.status == "optimal" and rep.objective < best:
            best, best_u = rep.objective, u
    return best, best_u


def test_milp_matches_enumeration(three_unit_case):
    options = SolveOptions()
    inst = build_dc(three_unit_case, None, StrategyConfig("DM", "DC"))
    brute, brute_u = _enumerate_optimum(three_unit_case, inst, options)
    rep = solve_milp(inst, options)
    assert rep.status == "optimal"
    assert rep.objective == pytest.approx(brute, rel=1e-7)
    # and the schedule's transition cost matches the independent oracle
    u = np.round(rep.x[inst.vm["commit"].reshape(-1)]).reshape(
        inst.vm["commit"].shape).astype(int)
    uc = schedule_uc_cost(three_unit_case.units, u)
    trans = rep.x[inst.vm["transition_cost"].reshape(-1)].sum()
    assert trans == pytest.approx(uc, abs=1e-6)


def test_milp_deterministic(three_unit_case):
    options = SolveOptions()
    inst = build_dc(three_unit_case, None, StrategyConfig("DM", "DC"))
    a = solve_milp(inst, options)
    b = solve_milp(inst, options)
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.x, b.x)
    assert a.iterations == b.iterations


def test_milp_respects_min_off_time(three_unit_case):
    options = SolveOptions()
    inst = build_dc(three_unit_case, None, StrategyConfig("DM", "DC"))
    rep = solve_milp(inst, options)
    u = np.round(rep.x[inst.vm["commit"].reshape(-1)]).reshape(
        inst.vm["commit"].shape).astype(int)
    # unit C has been off 2 h of a 2 h minimum: free to start, but any
    # off-block inside the horizon must last its min_off
    for g, unit in enumerate(three_unit_case.units):
        state = 1 if unit.initially_on else 0
        streak = abs(unit.initial_state)
        for t in range(three_unit_case.horizon):
            if u[g, t] != state:
                need = unit.min_on if state == 1 else unit.min_off
                assert streak >= need
                state, streak = u[g, t], 1
            else:
                streak += 1


def test_lp_relaxation_bounds_milp(three_unit_case):
    options = SolveOptions()
    inst = build_dc(three_unit_case, None, StrategyConfig("DM", "DC"))
    relax = solve_lp(inst, options)
    milp = solve_milp(inst, options)
    assert relax.objective <= milp.objective + 1e-9


def test_infeasible_schedule_reported(three_unit_case):
    options = SolveOptions()
    inst = build_dc(three_unit_case, None, StrategyConfig("DM", "DC"))
    u = np.zeros((3, 3), dtype=int)  # nothing on: load cannot be served
    rep = solve_lp(fix_commitment(inst, u), options)
    assert rep.status == "infeasible"


def test_nlp_kkt_certificate(two_bus_case, reduced_scenarios):
    """The interior-point solver must return a first-order point with a
    small KKT error on an AC dispatch."""
    import dataclasses

    from upfcuc.formulation import build
    from upfcuc.scenarios import Scenario, ScenarioSet

    forecast = np.array([two_bus_case.wind_farms[0].hourly_forecast])
    scen = ScenarioSet(
        scenarios=[Scenario(id=0, probability=1.0, trajectory=forecast)],
        seed=None, provenance="generated")
    inst = build(two_bus_case, scen, StrategyConfig("NM", "AC"))
    u = np.ones((1, two_bus_case.horizon), dtype=int)
    fixed = fix_commitment(inst, u)
    rep = solve_nlp(fixed, SolveOptions())
    assert rep.ok
    assert rep.kkt_error is not None and rep.kkt_error <= 1e-6
