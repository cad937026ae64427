"""Independent re-checking of a solved schedule and dispatch.

Every constraint family is re-evaluated from the case data with arithmetic
that shares nothing with the optimization model: AC balances go through the
admittance-matrix power-flow oracle, DC balances through a susceptance
Laplacian assembled here.  The result maps family names to their worst
residual (p.u. for power families), so a corrupted solution shows up as a
large residual in the family that was broken.
"""

from __future__ import annotations

import numpy as np

from .case import NetworkCase, schedule_uc_cost
from .formulation.solution import UcSolution
from .powerflow import bus_injections
from .scenarios import ScenarioSet


def _worst(d: dict, family: str, value) -> None:
    v = float(np.max(value)) if np.size(value) else 0.0
    d[family] = max(d.get(family, 0.0), v)


def _min_up_down_violations(case: NetworkCase, u: np.ndarray) -> int:
    count = 0
    for g, unit in enumerate(case.units):
        state = 1 if unit.initially_on else 0
        streak = abs(unit.initial_state)
        for t in range(case.horizon):
            if u[g, t] != state:
                need = unit.min_on if state == 1 else unit.min_off
                if streak < need:
                    count += 1
                state, streak = u[g, t], 1
            else:
                streak += 1
    return count


def _net_injection(case: NetworkCase, u, stage: dict, wind_mw, shed_mw):
    """Per-bus net active injection in p.u. implied by the dispatch arrays."""
    base = case.mva_base
    horizon = stage["p_gen"].shape[-1]
    inj = -case.p_load[:, :horizon] / base
    for g, unit in enumerate(case.units):
        inj[unit.bus - 1] += stage["p_gen"][g] / base
    for k, farm in enumerate(case.wind_farms):
        inj[farm.bus - 1] += wind_mw[k] / base
    if shed_mw is not None:
        for i, bus in enumerate(case.load_buses):
            inj[bus - 1] += shed_mw[i] / base
    return inj


def _upfc_injection(case: NetworkCase, stage: dict):
    """(p, q_from, q_to) p.u. bus-injection contributions of the UPFCs."""
    base = case.mva_base
    n, horizon = case.n_bus, stage["p_gen"].shape[-1]
    p = np.zeros((n, horizon))
    q_add = np.zeros((n, horizon))
    if "upfc_p" not in stage:
        return p, q_add
    for k, dev in enumerate(case.upfc_devices):
        line = case.line_by_id(dev.series_line)
        p[line.from_bus - 1] += stage["upfc_p"][k] / base
        p[line.to_bus - 1] -= stage["upfc_p"][k] / base
        if "upfc_q_se" in stage:
            q_add[line.from_bus - 1] += (stage["upfc_q_se"][k]
                                         + stage["upfc_q_sh"][k]) / base
            q_add[line.to_bus - 1] += stage["upfc_q_eq"][k] / base
    return p, q_add


def _check_stage(res: dict, case: NetworkCase, u, stage: dict,
                 wind_mw, shed_mw, suffix: str) -> None:
    base = case.mva_base
    inj = _net_injection(case, u, stage, wind_mw, shed_mw)
    up, uq = _upfc_injection(case, stage)

    if "v_mag" in stage:  # AC: oracle power flow from the Ybus
        p_bus, q_bus = bus_injections(case, stage["v_mag"], stage["v_ang"])
        _worst(res, "power_balance" + suffix, np.abs(p_bus - inj - up))
        qinj = -case.q_load[:, :inj.shape[1]] / base
        for g, unit in enumerate(case.units):
            qinj[unit.bus - 1] += stage["q_gen"][g] / base
        for k, farm in enumerate(case.wind_farms):
            served = wind_mw[k] / base
            qinj[farm.bus - 1] -= served * farm.tan_phi
        _worst(res, "reactive_balance" + suffix, np.abs(q_bus - qinj - uq))
    else:  # DC: susceptance Laplacian assembled independently
        lap = np.zeros((case.n_bus, case.n_bus))
        for ln in case.lines:
            a, b = ln.from_bus - 1, ln.to_bus - 1
            lap[a, a] += 1 / ln.x
            lap[b, b] += 1 / ln.x
            lap[a, b] -= 1 / ln.x
            lap[b, a] -= 1 / ln.x
        _worst(res, "power_balance" + suffix,
               np.abs(lap @ stage["v_ang"] - inj - up))

    # line ratings on the reported flows plus the flow/angle consistency
    if "p_flow" in stage:
        pf = stage["p_flow"] / base
        for e, ln in enumerate(case.lines):
            cap = ln.capacity_mw / base
            _worst(res, "line_rating" + suffix,
                   np.maximum(np.abs(pf[2 * e]) - cap, 0.0))
            if "v_mag" not in stage:
                a, b = ln.from_bus - 1, ln.to_bus - 1
                angle_flow = (stage["v_ang"][a] - stage["v_ang"][b]) / ln.x
                shift = np.zeros(pf.shape[1])
                for k, dev in enumerate(case.upfc_devices):
                    if dev.series_line == ln.id and "upfc_p" in stage:
                        shift = stage["upfc_p"][k] / base
                _worst(res, "flow_definition" + suffix,
                       np.abs(pf[2 * e] - (angle_flow - shift)))

    # generation limits and ramping against the schedule
    pg = stage["p_gen"] / base
    pavl = stage.get("p_avail", stage["p_gen"]) / base
    for g, unit in enumerate(case.units):
        ug = u[g]
        _worst(res, "gen_limits" + suffix, np.maximum(
            unit.p_min / base * ug - pg[g], 0.0))
        _worst(res, "gen_limits" + suffix, np.maximum(
            pg[g] - pavl[g], 1e-12) - 1e-12)
        _worst(res, "gen_limits" + suffix, np.maximum(
            pavl[g] - unit.p_max / base * ug, 0.0))
        prev_p = (unit.p_min / base if unit.initially_on else 0.0)
        prev_u = 1.0 if unit.initially_on else 0.0
        p_seq = np.concatenate([[prev_p], pg[g]])
        u_seq = np.concatenate([[prev_u], ug])
        up_room = (unit.ramp_up * u_seq[:-1]
                   + unit.startup_ramp * (u_seq[1:] - u_seq[:-1]).clip(0)
                   ) / base
        dn_room = (unit.ramp_down * u_seq[1:]
                   + unit.shutdown_ramp * (u_seq[:-1] - u_seq[1:]).clip(0)
                   ) / base
        _worst(res, "ramp" + suffix,
               np.maximum(np.diff(p_seq) - up_room, 0.0))
        _worst(res, "ramp" + suffix,
               np.maximum(-np.diff(p_seq) - dn_room, 0.0))


def validate_solution(case: NetworkCase, solution: UcSolution,
                      scenario_set: ScenarioSet | None = None) -> dict:
    """Worst residual per constraint family, from independent arithmetic.

    First-stage balances use the forecast wind; second-stage balances are
    checked only when the matching ``scenario_set`` is supplied.
    """
    if solution.u is None:
        raise ValueError("solution carries no schedule to validate")
    u = np.asarray(solution.u, float)
    res: dict[str, float] = {}

    res["min_up_down"] = float(_min_up_down_violations(case, u.astype(int)))
    recomputed = schedule_uc_cost(case.units, u.astype(int))
    reported = solution.breakdown.get("uc_cost", recomputed)
    res["uc_cost"] = abs(recomputed - reported) / max(1.0, abs(recomputed))

    if solution.first_stage:
        forecast = np.array([w.hourly_forecast for w in case.wind_farms])
        _check_stage(res, case, u, solution.first_stage, forecast, None, "")

    second = solution.second_stage
    if second and scenario_set is not None and "p_gen" in second:
        n_s = second["p_gen"].shape[0]
        if n_s != len(scenario_set):
            raise ValueError(
                f"solution has {n_s} scenario dispatches but the set has "
                f"{len(scenario_set)}")
        for s, scenario in enumerate(scenario_set.scenarios):
            stage = {k: v[s] for k, v in second.items()}
            wind = scenario.trajectory - stage.get(
                "wind_curt", np.zeros_like(scenario.trajectory))
            shed = stage.get("load_shed")
            _check_stage(res, case, u, stage, wind, shed, "_scenario")
    return res
