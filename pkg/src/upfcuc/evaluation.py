"""Out-of-sample evaluation of a unit-commitment solution.

A solved strategy is judged on a large scenario set by re-dispatching every
scenario with the commitment fixed and the UPFC constrained per strategy
(frozen setpoints, a re-dispatch band, or absent).  The per-scenario
dispatches aggregate into expected-cost metrics, curtailment/shedding
probabilities, and voltage statistics; infeasible scenarios are excluded
from the expectations and reported by their probability mass.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from .case import NetworkCase
from .formulation import StrategyConfig, build_dispatch
from .formulation.solution import UcSolution, _fuel_from_pwl, _fuel_quadratic
from .scenarios import Scenario, ScenarioSet
from .solvers import SolveOptions, solve_lp, solve_nlp
from .solvers.nlp import certify_infeasibility

#: below this many MW, shedding/curtailment at an hour does not count as an
#: event (filters solver noise)
INDICATOR_THRESHOLD_MW = 1e-3


@dataclass
class ScenarioDispatch:
    """Result of re-dispatching one scenario under a fixed schedule."""

    scenario_id: int
    probability: float
    status: str
    fuel_cost: float = np.nan
    curtailment_cost: float = np.nan
    shedding_cost: float = np.nan
    curtailment_mw: np.ndarray | None = None  # (horizon,) total over farms
    shedding_mw: np.ndarray | None = None  # (horizon,) total over buses
    v_mag: np.ndarray | None = None  # (n_bus, horizon), AC only
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status in ("optimal", "locally_optimal")

    @property
    def dispatch_cost(self) -> float:
        return self.fuel_cost + self.curtailment_cost + self.shedding_cost

    def shed_hours(self) -> np.ndarray:
        return self.shedding_mw > INDICATOR_THRESHOLD_MW

    def curtailed_hours(self) -> np.ndarray:
        return self.curtailment_mw > INDICATOR_THRESHOLD_MW


@dataclass
class EvaluationRun:
    """All per-scenario dispatches for one solution on one scenario set."""

    strategy: str
    variant: str
    uc_cost: float
    dispatches: list[ScenarioDispatch]

    @property
    def feasible_dispatches(self) -> list[ScenarioDispatch]:
        return [d for d in self.dispatches if d.feasible]

    @property
    def infeasible_probability(self) -> float:
        return sum(d.probability for d in self.dispatches if not d.feasible)

    def _conditional_weights(self) -> np.ndarray:
        """Probabilities of the feasible scenarios, renormalized to one."""
        w = np.array([d.probability for d in self.feasible_dispatches])
        if w.size == 0 or w.sum() <= 0:
            raise ValueError("no feasible scenario dispatches to aggregate")
        return w / w.sum()


@dataclass
class MetricsReport:
    strategy: str
    variant: str
    ucc: float
    efc: float
    ewc: float
    elc: float
    etc: float
    wpcp: float
    lolp: float
    infeasible_probability: float
    n_scenarios: int
    n_infeasible: int
    change_rates: dict = field(default_factory=dict)  # vs a baseline run

    def as_dict(self) -> dict:
        return {
            "strategy": self.strategy, "variant": self.variant,
            "ucc": self.ucc, "efc": self.efc, "ewc": self.ewc,
            "elc": self.elc, "etc": self.etc,
            "wpcp": self.wpcp, "lolp": self.lolp,
            "infeasible_probability": self.infeasible_probability,
            "n_scenarios": self.n_scenarios,
            "n_infeasible": self.n_infeasible,
            "change_rates": dict(self.change_rates),
        }


def _dispatch_costs(case, cfg, inst, x, u):
    """(fuel, curtailment, shedding) in $ for a dispatch solution."""
    vm = inst.vm
    base = case.mva_base
    pg = x[vm["p_gen"].reshape(-1)].reshape(vm["p_gen"].shape) * base
    if cfg.variant == "DC":
        n_seg = vm["fuel_segment"].shape[1]
        fuel = _fuel_from_pwl(case, pg, u, n_seg)
    else:
        fuel = _fuel_quadratic(case, pg, u)
    pwc = x[vm["wind_curt"].reshape(-1)].reshape(vm["wind_curt"].shape) * base
    pls = x[vm["load_shed"].reshape(-1)].reshape(vm["load_shed"].shape) * base
    return (float(fuel), float(pwc.sum() * case.price_curtailment),
            float(pls.sum() * case.price_shedding), pwc, pls)


def _warm_start_for(inst, solution: UcSolution, s_near: int) -> np.ndarray:
    """Initial point from the nearest in-sample second-stage solution."""
    x = np.zeros(inst.n)
    vm = inst.vm
    if "v_mag" in vm:
        x[vm["v_mag"].reshape(-1)] = 1.0
    base = inst.meta["case"].mva_base
    for name in vm.names:
        if name not in solution.second_stage:
            continue
        ref = solution.second_stage[name][s_near]
        if ref.shape != vm[name].shape:
            continue
        scale = 1.0 if name in ("v_mag", "v_ang") else base
        x[vm[name].reshape(-1)] = ref.reshape(-1) / scale
    return np.clip(x, inst.lb, inst.ub)


def _nearest_reference(scenario: Scenario, reference: ScenarioSet) -> int:
    ref = reference.trajectories()
    d = np.linalg.norm(ref - scenario.trajectory[None], axis=(1, 2))
    return int(np.argmin(d))


def dispatch_scenario(case: NetworkCase, solution: UcSolution,
                      scenario: Scenario,
                      options: SolveOptions | None = None,
                      reference: ScenarioSet | None = None,
                      cfg: StrategyConfig | None = None) -> ScenarioDispatch:
    """Re-dispatch one scenario under the solution's schedule and UPFC
    policy; an infeasible dispatch is a first-class result."""
    options = options or SolveOptions()
    if cfg is None:
        cfg = StrategyConfig(solution.strategy, solution.variant)
    setpoints = solution.upfc_setpoints() or None
    inst = build_dispatch(case, cfg, solution.u, scenario.trajectory,
                          setpoints=setpoints)

    if cfg.variant == "DC":
        rep = solve_lp(inst, options)
    else:
        x0 = None
        if reference is not None and solution.second_stage:
            x0 = _warm_start_for(inst, solution,
                                 _nearest_reference(scenario, reference))
        rep = solve_nlp(inst, options, x0=x0)
        if not rep.ok and rep.status != "infeasible":
            cert = certify_infeasibility(inst, options, x0=x0)
            if cert.status == "infeasible":
                rep = cert
            else:
                rep = solve_nlp(inst, options, x0=cert.x[:inst.n])

    if not rep.ok:
        return ScenarioDispatch(scenario.id, scenario.probability,
                                "infeasible" if rep.status == "infeasible"
                                else rep.status, message=rep.message)

    fuel, cwc, cls_, pwc, pls = _dispatch_costs(case, cfg, inst, rep.x,
                                                solution.u)
    v_mag = None
    if "v_mag" in inst.vm:
        v_mag = rep.x[inst.vm["v_mag"].reshape(-1)].reshape(
            inst.vm["v_mag"].shape)
    return ScenarioDispatch(
        scenario.id, scenario.probability, rep.status,
        fuel_cost=fuel, curtailment_cost=cwc, shedding_cost=cls_,
        curtailment_mw=pwc.sum(axis=0), shedding_mw=pls.sum(axis=0),
        v_mag=v_mag)


def _dispatch_worker(args):
    return dispatch_scenario(*args)


def evaluate(case: NetworkCase, solution: UcSolution,
             scenario_set: ScenarioSet,
             options: SolveOptions | None = None,
             reference: ScenarioSet | None = None,
             max_workers: int = 1) -> EvaluationRun:
    """Dispatch every scenario in the set; results keep the set's order
    regardless of worker scheduling."""
    if solution.u is None:
        raise ValueError("solution carries no schedule to evaluate")
    options = options or SolveOptions()
    cfg = StrategyConfig(solution.strategy, solution.variant)
    jobs = [(case, solution, s, options, reference, cfg)
            for s in scenario_set.scenarios]
    if max_workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers) as pool:
            dispatches = list(pool.map(_dispatch_worker, jobs))
    else:
        dispatches = [dispatch_scenario(*j) for j in jobs]
    return EvaluationRun(solution.strategy, solution.variant,
                         solution.breakdown.get("uc_cost", 0.0), dispatches)


def metrics(run: EvaluationRun,
            baseline: "MetricsReport | EvaluationRun | None" = None
            ) -> MetricsReport:
    """Expected costs and event probabilities over the feasible scenarios."""
    feas = run.feasible_dispatches
    w = run._conditional_weights()
    horizon = len(feas[0].shedding_mw)

    efc = float(w @ [d.fuel_cost for d in feas])
    ewc = float(w @ [d.curtailment_cost for d in feas])
    elc = float(w @ [d.shedding_cost for d in feas])
    etc = efc + ewc + elc + run.uc_cost
    wpcp = float(w @ [d.curtailed_hours().sum() / horizon for d in feas])
    lolp = float(w @ [d.shed_hours().sum() / horizon for d in feas])

    report = MetricsReport(
        strategy=run.strategy, variant=run.variant, ucc=run.uc_cost,
        efc=efc, ewc=ewc, elc=elc, etc=etc, wpcp=wpcp, lolp=lolp,
        infeasible_probability=run.infeasible_probability,
        n_scenarios=len(run.dispatches),
        n_infeasible=len(run.dispatches) - len(feas))
    if baseline is not None:
        if isinstance(baseline, EvaluationRun):
            baseline = metrics(baseline)
        report.change_rates = {
            "efc": _change_rate(efc, baseline.efc),
            "ewc": _change_rate(ewc, baseline.ewc),
            "elc": _change_rate(elc, baseline.elc),
            "etc": _change_rate(etc, baseline.etc),
        }
    return report


def _change_rate(value: float, reference: float) -> float:
    if reference == 0:
        return np.inf if value > 0 else 0.0
    return (value - reference) / reference


def voltage_stats(run: EvaluationRun) -> dict:
    """Probability-weighted mean and variance of |V| per bus, treating each
    (scenario, hour) pair with weight p_s / horizon."""
    feas = [d for d in run.feasible_dispatches if d.v_mag is not None]
    if not feas:
        raise ValueError("run carries no voltage profiles (DC evaluation?)")
    w = np.array([d.probability for d in feas])
    w = w / w.sum()
    v = np.stack([d.v_mag for d in feas])  # (S, N, T)
    horizon = v.shape[2]
    wt = np.repeat(w / horizon, horizon)  # weight per (s, t) column
    cols = v.transpose(1, 0, 2).reshape(v.shape[1], -1)  # (N, S*T)
    wt = wt / wt.sum()
    mean = cols @ wt
    var = ((cols - mean[:, None]) ** 2) @ wt
    return {"mean": mean, "variance": var}
