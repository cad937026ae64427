"""Out-of-sample evaluation: accounting identity, recourse ordering,
renormalization, and in-sample consistency."""

import dataclasses

import numpy as np
import pytest

from upfcuc.evaluation import (
    INDICATOR_THRESHOLD_MW,
    EvaluationRun,
    ScenarioDispatch,
    dispatch_scenario,
    evaluate,
    metrics,
)
from upfcuc.formulation import StrategyConfig, build_dc, fix_commitment
from upfcuc.formulation.solution import UcSolution, extract_solution
from upfcuc.solvers import SolveOptions, solve_lp


@pytest.fixture()
def schedule(case):
    u = np.ones((3, case.horizon), dtype=int)
    u[1, 1:7] = 0
    u[2, :10] = 0
    u[2, 19:] = 0
    return u


def _solve(case, scen, strategy, u):
    inst = fix_commitment(
        build_dc(case, scen, StrategyConfig(strategy, "DC")), u)
    rep = solve_lp(inst, SolveOptions())
    assert rep.status == "optimal"
    return extract_solution(inst, rep.x, rep.status, "test")


def test_accounting_identity(case, reduced_scenarios, schedule):
    solution = _solve(case, reduced_scenarios, "SSM", schedule)
    run = evaluate(case, solution, reduced_scenarios,
                   reference=reduced_scenarios)
    report = metrics(run)
    assert report.etc == pytest.approx(
        report.efc + report.ewc + report.elc + report.ucc, rel=1e-9)


def test_in_sample_consistency(case, reduced_scenarios, schedule):
    """Re-dispatching the in-sample scenarios reproduces the optimizer's own
    expected costs."""
    solution = _solve(case, reduced_scenarios, "NM", schedule)
    run = evaluate(case, solution, reduced_scenarios,
                   reference=reduced_scenarios)
    report = metrics(run)
    assert report.n_infeasible == 0
    expected_total = (solution.breakdown["expected_fuel"]
                      + solution.breakdown["expected_curtailment"]
                      + solution.breakdown["expected_shedding"]
                      + solution.breakdown["uc_cost"])
    assert report.etc == pytest.approx(expected_total, rel=1e-6)


def test_ssm_never_worse_than_fsm_per_scenario(case, reduced_scenarios,
                                               schedule):
    """Scenario by scenario, an adjustable UPFC (SSM band) cannot cost more
    than one frozen at the same setpoints (FSM)."""
    fsm = _solve(case, reduced_scenarios, "FSM", schedule)
    ssm_like = dataclasses.replace(fsm, strategy="SSM")
    fsm_like = dataclasses.replace(fsm, strategy="FSM")
    options = SolveOptions()
    for scenario in reduced_scenarios.scenarios:
        a = dispatch_scenario(case, ssm_like, scenario, options,
                              cfg=StrategyConfig("SSM", "DC"))
        b = dispatch_scenario(case, fsm_like, scenario, options,
                              cfg=StrategyConfig("FSM", "DC"))
        assert a.feasible and b.feasible
        assert a.dispatch_cost <= b.dispatch_cost + 1e-4


def test_indicator_threshold():
    d = ScenarioDispatch(
        scenario_id=0, probability=1.0, status="optimal",
        fuel_cost=0.0, curtailment_cost=0.0, shedding_cost=0.0,
        curtailment_mw=np.array([0.0, INDICATOR_THRESHOLD_MW / 2, 5.0]),
        shedding_mw=np.array([0.0, 0.0, 2.0]))
    assert d.curtailed_hours().tolist() == [False, False, True]
    assert d.shed_hours().tolist() == [False, False, True]


def _stub(i, prob, status="optimal", fuel=100.0, wc=10.0, ls=1.0):
    h = np.zeros(4)
    return ScenarioDispatch(
        scenario_id=i, probability=prob, status=status, fuel_cost=fuel,
        curtailment_cost=wc, shedding_cost=ls, curtailment_mw=h,
        shedding_mw=h)


def test_infeasible_scenarios_renormalized():
    run = EvaluationRun("NM", "DC", uc_cost=50.0, dispatches=[
        _stub(0, 0.5, fuel=100.0),
        _stub(1, 0.25, fuel=200.0),
        _stub(2, 0.25, status="infeasible", fuel=np.nan, wc=np.nan,
              ls=np.nan),
    ])
    report = metrics(run)
    assert report.infeasible_probability == pytest.approx(0.25)
    assert report.n_infeasible == 1
    # conditional weights 2/3 and 1/3
    assert report.efc == pytest.approx(100.0 * 2 / 3 + 200.0 / 3)


def test_change_rates_vs_baseline():
    base = EvaluationRun("NM", "DC", uc_cost=0.0,
                         dispatches=[_stub(0, 1.0, fuel=200.0, wc=20.0,
                                           ls=10.0)])
    better = EvaluationRun("SSM", "DC", uc_cost=0.0,
                           dispatches=[_stub(0, 1.0, fuel=150.0, wc=10.0,
                                             ls=0.0)])
    report = metrics(better, baseline=base)
    assert report.change_rates["efc"] == pytest.approx(-0.25)
    assert report.change_rates["ewc"] == pytest.approx(-0.5)
    assert report.change_rates["elc"] == pytest.approx(-1.0)


def test_evaluate_keeps_scenario_order(case, reduced_scenarios, schedule):
    solution = _solve(case, reduced_scenarios, "NM", schedule)
    run = evaluate(case, solution, reduced_scenarios,
                   reference=reduced_scenarios)
    assert [d.scenario_id for d in run.dispatches] == [
        s.id for s in reduced_scenarios.scenarios]
