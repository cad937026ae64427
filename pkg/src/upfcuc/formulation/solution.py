"""Typed solution container and extraction from a solved instance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..case import NetworkCase
from .builder import _fuel_pwl, _Prep
from .instance import ProblemInstance

_FIRST_STAGE_BLOCKS = {
    "p_gen_1": ("p_gen", 100.0), "q_gen_1": ("q_gen", 100.0),
    "p_avail_1": ("p_avail", 100.0), "v_mag_1": ("v_mag", 1.0),
    "v_ang_1": ("v_ang", 1.0), "p_flow_1": ("p_flow", 100.0),
    "upfc_p_1": ("upfc_p", 100.0), "upfc_q_se_1": ("upfc_q_se", 100.0),
    "upfc_q_sh_1": ("upfc_q_sh", 100.0), "upfc_q_eq_1": ("upfc_q_eq", 100.0),
}
_SECOND_STAGE_BLOCKS = {
    "p_gen_2": ("p_gen", 100.0), "q_gen_2": ("q_gen", 100.0),
    "p_avail_2": ("p_avail", 100.0), "v_mag_2": ("v_mag", 1.0),
    "v_ang_2": ("v_ang", 1.0), "p_flow_2": ("p_flow", 100.0),
    "upfc_p_2": ("upfc_p", 100.0), "upfc_q_se_2": ("upfc_q_se", 100.0),
    "upfc_q_sh_2": ("upfc_q_sh", 100.0), "upfc_q_eq_2": ("upfc_q_eq", 100.0),
    "wind_curt": ("wind_curt", 100.0), "wind_curt_q": ("wind_curt_q", 100.0),
    "load_shed": ("load_shed", 100.0),
}


@dataclass
class UcSolution:
    strategy: str
    variant: str
    status: str
    objective: float | None
    u: np.ndarray | None  # (n_units, horizon) 0/1
    breakdown: dict = field(default_factory=dict)
    first_stage: dict = field(default_factory=dict)  # MW/MVar/p.u./rad
    second_stage: dict = field(default_factory=dict)  # leading scenario dim
    provenance: str = ""
    scenario_probabilities: np.ndarray | None = None
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status in ("optimal", "locally_optimal")

    def upfc_setpoints(self) -> dict:
        """First-stage UPFC controls in MW/MVar, keyed by control name."""
        return {k: self.first_stage[k]
                for k in ("upfc_p", "upfc_q_se", "upfc_q_sh", "upfc_q_eq")
                if k in self.first_stage}


def _fuel_from_pwl(case: NetworkCase, pg_mw: np.ndarray, u: np.ndarray,
                   n_segments: int) -> float:
    """Piecewise-linear fuel cost of a (G, T) dispatch under a schedule."""
    pp = _Prep(case)
    widths, slopes, fixed = _fuel_pwl(pp, n_segments)
    base = case.mva_base
    total = float((fixed[:, None] * u).sum())
    pg = pg_mw / base
    for g in range(len(case.units)):
        over = np.maximum(pg[g] - pp.pmin[g] * u[g], 0.0)
        for k in range(n_segments):
            fill = np.clip(over - k * widths[g], 0.0, widths[g])
            total += slopes[g, k] * fill.sum()
    return total


def _fuel_quadratic(case: NetworkCase, pg_mw: np.ndarray,
                    u: np.ndarray) -> float:
    total = 0.0
    for g, unit in enumerate(case.units):
        p = pg_mw[g]
        total += unit.fuel_price * (
            unit.fuel_a * u[g]
            + unit.fuel_b * p + unit.fuel_c * p**2).sum()
    return float(total)


def extract_solution(inst: ProblemInstance, x: np.ndarray, status: str,
                     provenance: str = "") -> UcSolution:
    """Unpack a solution vector into physical-unit arrays and a cost
    breakdown whose parts sum to the reported objective."""
    case: NetworkCase = inst.meta["case"]
    cfg = inst.meta["cfg"]
    variant = inst.meta["variant"]
    probs = np.asarray(inst.meta["probs"], dtype=float)
    base = case.mva_base
    vm = inst.vm

    u = np.round(x[vm["commit"].reshape(-1)]).reshape(vm["commit"].shape)
    first = {}
    for block, (name, scale) in _FIRST_STAGE_BLOCKS.items():
        if block in vm:
            first[name] = (x[vm[block].reshape(-1)].reshape(vm[block].shape)
                           * scale)
    second = {}
    for block, (name, scale) in _SECOND_STAGE_BLOCKS.items():
        if block in vm:
            second[name] = (x[vm[block].reshape(-1)].reshape(vm[block].shape)
                            * scale)

    uc_cost = float(x[vm["transition_cost"].reshape(-1)].sum())

    two_stage = len(probs) > 0
    if two_stage:
        pg = second["p_gen"]  # (S, G, T) MW
        if variant == "DC":
            n_seg = vm["fuel_segment"].shape[2]
            fuel = sum(probs[s] * _fuel_from_pwl(case, pg[s], u, n_seg)
                       for s in range(len(probs)))
        else:
            fuel = sum(probs[s] * _fuel_quadratic(case, pg[s], u)
                       for s in range(len(probs)))
        curtail = float((probs[:, None, None] * second["wind_curt"]).sum()
                        * case.price_curtailment)
        shed = float((probs[:, None, None] * second["load_shed"]).sum()
                     * case.price_shedding)
    else:
        pg = first["p_gen"]
        if variant == "DC":
            n_seg = vm["fuel_segment"].shape[1]
            fuel = _fuel_from_pwl(case, pg, u, n_seg)
        else:
            fuel = _fuel_quadratic(case, pg, u)
        curtail = 0.0
        shed = 0.0

    breakdown = dict(uc_cost=uc_cost, expected_fuel=float(fuel),
                     expected_curtailment=curtail, expected_shedding=shed)
    objective = float(inst.objective(x))

    return UcSolution(
        strategy=cfg.strategy, variant=cfg.variant, status=status,
        objective=objective, u=u.astype(int), breakdown=breakdown,
        first_stage=first, second_stage=second, provenance=provenance,
        scenario_probabilities=probs if two_stage else None,
    )
