"""Independent solution checking: clean solutions pass, corruption shows."""

import copy

import numpy as np
import pytest

from upfcuc.formulation import StrategyConfig, build_dc, fix_commitment
from upfcuc.formulation.solution import extract_solution
from upfcuc.solvers import SolveOptions, solve_lp
from upfcuc.validation import validate_solution


@pytest.fixture()
def solved(case, reduced_scenarios):
    u = np.ones((3, case.horizon), dtype=int)
    u[1, 1:7] = 0
    u[2, :10] = 0
    u[2, 19:] = 0
    inst = fix_commitment(
        build_dc(case, reduced_scenarios, StrategyConfig("SSM", "DC")), u)
    rep = solve_lp(inst, SolveOptions())
    assert rep.status == "optimal"
    return extract_solution(inst, rep.x, rep.status, "test")


def test_clean_solution_has_tiny_residuals(case, reduced_scenarios, solved):
    res = validate_solution(case, solved, reduced_scenarios)
    assert res["min_up_down"] == 0
    for family, worst in res.items():
        assert worst < 1e-6, f"{family}: {worst}"


def test_corrupted_dispatch_is_flagged(case, reduced_scenarios, solved):
    bad = copy.deepcopy(solved)
    bad.second_stage["p_gen"][0, 0, 5] += 10.0  # 10 MW out of balance
    res = validate_solution(case, bad, reduced_scenarios)
    assert res["power_balance_scenario"] == pytest.approx(0.1, abs=1e-9)


def test_corrupted_schedule_is_flagged(case, solved):
    bad = copy.deepcopy(solved)
    bad.u = np.array(bad.u)
    bad.u[1, 3] = 1  # pokes a hole in G2's minimum-off block
    res = validate_solution(case, bad)
    assert res["min_up_down"] >= 1


def test_uc_cost_mismatch_is_flagged(case, solved):
    bad = copy.deepcopy(solved)
    bad.breakdown["uc_cost"] += 100.0
    res = validate_solution(case, bad)
    assert res["uc_cost"] > 0.01


def test_scenario_count_mismatch_raises(case, reduced_scenarios, solved):
    import dataclasses
    shorter = dataclasses.replace(
        reduced_scenarios,
        scenarios=[dataclasses.replace(s, probability=0.2)
                   for s in reduced_scenarios.scenarios[:5]])
    with pytest.raises(ValueError):
        validate_solution(case, shorter and solved, shorter)


def test_missing_schedule_raises(case, solved):
    bad = copy.deepcopy(solved)
    bad.u = None
    with pytest.raises(ValueError):
        validate_solution(case, bad)
