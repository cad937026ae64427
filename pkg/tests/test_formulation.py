"""Model construction: strategy semantics, block shapes, and equivalences."""

import dataclasses

import numpy as np
import pytest

from upfcuc.formulation import (
    STRATEGIES,
    StrategyConfig,
    build_dc,
    fix_commitment,
)
from upfcuc.solvers import SolveOptions, solve_lp


def test_strategy_roster():
    assert STRATEGIES == ("DM", "NOM", "NM", "FSM", "SSM", "FSSM")
    assert not StrategyConfig("DM", "DC").two_stage
    assert not StrategyConfig("NOM", "DC").two_stage
    assert StrategyConfig("NM", "DC").two_stage
    assert not StrategyConfig("NM", "DC").upfc_installed
    assert StrategyConfig("FSM", "DC").upfc_first_stage
    assert not StrategyConfig("SSM", "DC").upfc_first_stage
    with pytest.raises(ValueError):
        StrategyConfig("XX", "DC")
    with pytest.raises(ValueError):
        StrategyConfig("DM", "MIXED")


def test_voltage_override(case):
    cfg = StrategyConfig("NM", "AC", v_min_override=0.9, v_max_override=1.1)
    assert cfg.v_limits(case) == (0.9, 1.1)
    assert StrategyConfig("NM", "AC").v_limits(case) == (case.v_min,
                                                         case.v_max)


def test_dc_block_shapes(case, reduced_scenarios):
    inst = build_dc(case, reduced_scenarios, StrategyConfig("SSM", "DC"))
    vm = inst.vm
    g, t, s = len(case.units), case.horizon, len(reduced_scenarios)
    assert vm["commit"].shape == (g, t)
    assert vm["transition_cost"].shape == (g, t)
    assert vm["p_gen_2"].shape == (s, g, t)
    assert vm["wind_curt"].shape == (s, len(case.wind_farms), t)
    assert vm["load_shed"].shape == (s, len(case.load_buses), t)
    assert vm["upfc_p_2"].shape == (s, len(case.upfc_devices), t)
    # commitment variables are the only integral ones
    int_idx = np.flatnonzero(inst.integrality)
    np.testing.assert_array_equal(np.sort(vm["commit"].reshape(-1)), int_idx)


def test_fix_commitment_freezes_bounds(case, reduced_scenarios):
    inst = build_dc(case, reduced_scenarios, StrategyConfig("NM", "DC"))
    u = np.ones((len(case.units), case.horizon), dtype=int)
    u[2, :9] = 0
    fixed = fix_commitment(inst, u)
    idx = fixed.vm["commit"].reshape(-1)
    np.testing.assert_array_equal(fixed.lb[idx], u.reshape(-1))
    np.testing.assert_array_equal(fixed.ub[idx], u.reshape(-1))
    assert not fixed.integrality[idx].any()


def _fixed_objective(case, scen, cfg, u):
    inst = fix_commitment(build_dc(case, scen, cfg), u)
    rep = solve_lp(inst, SolveOptions())
    assert rep.status == "optimal"
    return rep.objective, inst, rep


@pytest.fixture()
def reference_schedule(case):
    u = np.ones((3, case.horizon), dtype=int)
    u[1, 1:7] = 0  # G2 off for its minimum-plus block
    u[2, :10] = 0
    u[2, 19:] = 0
    return u


def test_nm_equals_zero_rating_ssm(case, reduced_scenarios,
                                   reference_schedule):
    """With the device ratings shrunk to nothing, every UPFC strategy
    collapses to the no-UPFC dispatch."""
    nm_obj, _, _ = _fixed_objective(case, reduced_scenarios,
                                    StrategyConfig("NM", "DC"),
                                    reference_schedule)
    tiny = dataclasses.replace(case, upfc_devices=[
        dataclasses.replace(d, t_sh_max=1e-9, t_se_max=1e-9, p_dc_max=1e-9,
                            delta_p=1e-9, delta_q_se=1e-9, delta_q_sh=1e-9)
        for d in case.upfc_devices])
    for strategy in ("FSM", "SSM", "FSSM"):
        obj, _, _ = _fixed_objective(tiny, reduced_scenarios,
                                     StrategyConfig(strategy, "DC"),
                                     reference_schedule)
        assert obj == pytest.approx(nm_obj, rel=1e-6)


def test_strategy_flexibility_ordering(case, reduced_scenarios,
                                       reference_schedule):
    """More recourse can never cost more: NM >= FSM >= SSM >= FSSM under a
    common schedule."""
    objs = {}
    for strategy in ("NM", "FSM", "SSM", "FSSM"):
        objs[strategy], _, _ = _fixed_objective(
            case, reduced_scenarios, StrategyConfig(strategy, "DC"),
            reference_schedule)
    assert objs["NM"] >= objs["FSM"] - 1e-6
    assert objs["FSM"] >= objs["SSM"] - 1e-6
    assert objs["SSM"] >= objs["FSSM"] - 1e-6


def test_solution_residuals_within_gate(case, reduced_scenarios,
                                        reference_schedule):
    """At the LP optimum every instance row holds to solver precision."""
    _, inst, rep = _fixed_objective(case, reduced_scenarios,
                                    StrategyConfig("SSM", "DC"),
                                    reference_schedule)
    assert np.abs(inst.eq_residual(rep.x)).max(initial=0.0) < 1e-6
    assert inst.ineq_residual(rep.x).max(initial=0.0) < 1e-6


def test_first_stage_objective_is_transition_cost_only(case,
                                                       reduced_scenarios):
    """Fuel enters through the scenarios; with one zero-cost scenario the
    objective reduces to the schedule's transition cost."""
    from upfcuc.case import schedule_uc_cost
    u = np.ones((3, case.horizon), dtype=int)
    u[1, 1:7] = 0
    inst = fix_commitment(
        build_dc(case, reduced_scenarios, StrategyConfig("NM", "DC")), u)
    rep = solve_lp(inst, SolveOptions())
    trans = rep.x[inst.vm["transition_cost"].reshape(-1)].sum()
    assert trans == pytest.approx(schedule_uc_cost(case.units, u), abs=1e-5)
