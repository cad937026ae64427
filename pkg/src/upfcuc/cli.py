"""Command-line pipeline: scenario generation, solving, and evaluation.

Subcommands mirror the study workflow::

    upfcuc generate  --out runs/            scenario files (full + reduced)
    upfcuc solve     --out runs/            one solution per strategy/variant
    upfcuc evaluate  --out runs/            metrics tables + plot-data CSV
    upfcuc report    --out runs/            join solve/evaluate artifacts
    upfcuc validate  runs/solution_*.json   independent constraint re-check

Configuration comes from an optional JSON file plus flag overrides; every
artifact is stamped with the seed and a configuration hash.  Exit codes:
0 success, 2 partial failure (some combinations failed or infeasible),
1 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import reporting, scenarios
from .case import NetworkCase, load_bundled_case, load_case
from .evaluation import evaluate, metrics, voltage_stats
from .formulation import STRATEGIES, StrategyConfig
from .reporting import load_solution, save_solution
from .scenarios import ScenarioSet, load_paper_scenarios, load_scenarios
from .solvers import SolveOptions
from .solvers.strategy import solve_strategy
from .validation import validate_solution

VOLTAGE_PROFILES = {
    "default": (None, None),  # case file limits (0.95-1.05 for the bundle)
    "rigid": (0.98, 1.05),
    "relaxed": (0.90, 1.10),
}

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_PARTIAL = 2


@dataclasses.dataclass
class RunConfig:
    case_path: str | None = None  # None = bundled 6-bus case
    seed: int = 2024
    n_generate: int = 1000
    k_reduce: int = 10
    sigma_mw: float = 20.0
    strategies: list[str] = dataclasses.field(
        default_factory=lambda: ["NM", "FSM", "SSM", "FSSM"])
    variants: list[str] = dataclasses.field(default_factory=lambda: ["AC"])
    voltage_profile: str = "default"
    use_paper_scenarios: bool = False
    fresh_evaluation_draw: bool = False
    max_workers: int = 1
    time_limit: float = 600.0
    output_dir: str = "runs"

    def __post_init__(self):
        if self.voltage_profile not in VOLTAGE_PROFILES:
            raise ValueError(
                f"unknown voltage profile {self.voltage_profile!r}; "
                f"choose from {sorted(VOLTAGE_PROFILES)}")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}")
        for v in self.variants:
            if v not in ("AC", "DC", "MIXED"):
                raise ValueError(f"unknown variant {v!r}")
        if self.n_generate < 1 or self.k_reduce < 1:
            raise ValueError("n_generate and k_reduce must be positive")
        if self.k_reduce > self.n_generate:
            raise ValueError("k_reduce cannot exceed n_generate")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def hash(self) -> str:
        return reporting.config_hash(self.as_dict())

    def load_the_case(self) -> NetworkCase:
        if self.case_path is None:
            return load_bundled_case()
        return load_case(self.case_path)

    def strategy_config(self, strategy: str, variant: str) -> StrategyConfig:
        v_min, v_max = VOLTAGE_PROFILES[self.voltage_profile]
        return StrategyConfig(strategy, variant, v_min_override=v_min,
                              v_max_override=v_max)

    def solve_options(self) -> SolveOptions:
        return SolveOptions(time_limit=self.time_limit)


def _load_config(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
    for name in ("case_path", "seed", "n_generate", "k_reduce", "sigma_mw",
                 "voltage_profile", "max_workers", "time_limit",
                 "output_dir"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if getattr(args, "strategies", None):
        values["strategies"] = args.strategies.split(",")
    if getattr(args, "variants", None):
        values["variants"] = args.variants.split(",")
    for flag in ("use_paper_scenarios", "fresh_evaluation_draw"):
        if getattr(args, flag, False):
            values[flag] = True
    if "output_dir" not in values and os.environ.get("UPFCUC_OUTPUT_DIR"):
        values["output_dir"] = os.environ["UPFCUC_OUTPUT_DIR"]
    return RunConfig(**values)


def _header(cfg: RunConfig, provenance: str = "") -> list[str]:
    return reporting.provenance_header(cfg.seed, cfg.hash, provenance)


def _scenario_paths(cfg: RunConfig):
    out = Path(cfg.output_dir)
    return out / "scenarios_full.csv", out / "scenarios_reduced.csv"


def cmd_generate(cfg: RunConfig) -> int:
    case = cfg.load_the_case()
    full_path, reduced_path = _scenario_paths(cfg)
    full = scenarios.generate_lhs(case, cfg.n_generate, cfg.sigma_mw,
                                  cfg.seed)
    if cfg.use_paper_scenarios:
        reduced = load_paper_scenarios()
    else:
        reduced = scenarios.reduce(full, cfg.k_reduce)
    full_path.parent.mkdir(parents=True, exist_ok=True)
    scenarios.save_scenarios(full, full_path)
    scenarios.save_scenarios(reduced, reduced_path)
    print(f"wrote {len(full)} scenarios to {full_path}")
    print(f"wrote {len(reduced)} scenarios to {reduced_path}")
    return EXIT_OK


def _solution_path(cfg: RunConfig, strategy: str, variant: str) -> Path:
    return Path(cfg.output_dir) / f"solution_{variant}_{strategy}.json"


def _reduced_set(cfg: RunConfig) -> ScenarioSet:
    _, reduced_path = _scenario_paths(cfg)
    if cfg.use_paper_scenarios:
        return load_paper_scenarios()
    if not reduced_path.exists():
        raise FileNotFoundError(
            f"{reduced_path} not found; run `upfcuc generate` first "
            "or pass --use-paper-scenarios")
    return load_scenarios(reduced_path)


def cmd_solve(cfg: RunConfig) -> int:
    case = cfg.load_the_case()
    reduced = _reduced_set(cfg)
    options = cfg.solve_options()
    failures = 0
    for variant in cfg.variants:
        solutions = []
        for strategy in cfg.strategies:
            try:
                scfg = cfg.strategy_config(strategy, variant)
            except ValueError as exc:  # e.g. MIXED DM is undefined
                print(f"{variant}/{strategy}: skipped ({exc})")
                failures += 1
                continue
            sol = solve_strategy(case, reduced, scfg, options)
            save_solution(sol, _solution_path(cfg, strategy, variant))
            solutions.append(sol)
            tag = (f"{sol.objective:.2f}" if sol.feasible
                   else f"{sol.status}: {sol.message}")
            print(f"{variant}/{strategy}: {tag}")
            if not sol.feasible and sol.status != "infeasible":
                failures += 1
            if sol.status == "infeasible":
                failures += 1
        out = Path(cfg.output_dir)
        reporting.write_csv(
            out / f"optimization_{variant}.csv", _header(cfg),
            reporting.OPTIMIZATION_COLUMNS,
            reporting.optimization_table_rows(solutions))
        for sol in solutions:
            if sol.u is not None:
                reporting.write_csv(
                    out / f"schedule_{variant}_{sol.strategy}.csv",
                    _header(cfg, sol.provenance),
                    ["unit"] + [f"h{t + 1}" for t in range(case.horizon)],
                    reporting.schedule_grid_rows(sol))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    case = cfg.load_the_case()
    full_path, _ = _scenario_paths(cfg)
    if cfg.fresh_evaluation_draw:
        full = scenarios.generate_lhs(case, cfg.n_generate, cfg.sigma_mw,
                                      cfg.seed + 1)
    elif full_path.exists():
        full = load_scenarios(full_path)
    else:
        full = scenarios.generate_lhs(case, cfg.n_generate, cfg.sigma_mw,
                                      cfg.seed)
    reference = _reduced_set(cfg)
    options = cfg.solve_options()
    failures = 0
    out = Path(cfg.output_dir)
    for variant in cfg.variants:
        reports, runs = [], {}
        baseline = None
        for strategy in cfg.strategies:
            path = _solution_path(cfg, strategy, variant)
            if not path.exists():
                print(f"{variant}/{strategy}: no solution file at {path}")
                failures += 1
                continue
            sol = load_solution(path)
            if not sol.feasible:
                print(f"{variant}/{strategy}: solution is {sol.status}; "
                      "skipped")
                failures += 1
                continue
            run = evaluate(case, sol, full, options, reference=reference,
                           max_workers=cfg.max_workers)
            runs[strategy] = run
            if strategy == "NM":
                baseline = metrics(run)
        for strategy, run in runs.items():
            rep = metrics(run, baseline if strategy != "NM" else None)
            reports.append(rep)
            reporting.atomic_write(
                out / f"metrics_{variant}_{strategy}.json",
                json.dumps(rep.as_dict(), indent=1))
        if reports:
            reporting.write_csv(out / f"evaluation_{variant}.csv",
                                _header(cfg), reporting.METRICS_COLUMNS,
                                reporting.metrics_table_rows(reports))
            cr_rows = reporting.change_rate_table_rows(reports)
            if cr_rows:
                reporting.write_csv(out / f"change_rates_{variant}.csv",
                                    _header(cfg),
                                    reporting.CHANGE_RATE_COLUMNS, cr_rows)
        if variant != "DC":
            for strategy, run in runs.items():
                try:
                    vs = voltage_stats(run)
                except ValueError:
                    continue
                rows = [[i + 1, f"{m:.4f}", f"{v:.6f}"]
                        for i, (m, v) in enumerate(zip(vs["mean"],
                                                       vs["variance"]))]
                reporting.write_csv(
                    out / f"voltage_{variant}_{strategy}.csv", _header(cfg),
                    ["bus", "mean_v", "variance_v"], rows)
    if not any(cfg.strategies):
        print("no strategies configured; nothing to evaluate")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Join optimization and evaluation tables into one summary CSV."""
    out = Path(cfg.output_dir)
    rows = []
    for variant in cfg.variants:
        for strategy in cfg.strategies:
            spath = _solution_path(cfg, strategy, variant)
            if not spath.exists():
                continue
            sol = load_solution(spath)
            mpath = out / f"metrics_{variant}_{strategy}.json"
            m = json.loads(mpath.read_text()) if mpath.exists() else {}
            rows.append([
                variant, strategy, sol.status,
                f"{sol.objective:.2f}" if sol.objective is not None else "--",
                f"{m['etc']:.2f}" if m else "--",
                f"{100 * m['wpcp']:.2f}%" if m else "--",
                f"{100 * m['lolp']:.2f}%" if m else "--",
            ])
    if not rows:
        print("no artifacts found; run solve/evaluate first")
        return EXIT_PARTIAL
    reporting.write_csv(out / "summary.csv", _header(cfg),
                        ["variant", "model", "status", "objective",
                         "etc", "wpcp", "lolp"], rows)
    print(f"wrote {out / 'summary.csv'}")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, solution_files: list[str]) -> int:
    case = cfg.load_the_case()
    try:
        reference = _reduced_set(cfg)
    except FileNotFoundError:
        reference = None
    worst = 0.0
    for path in solution_files:
        sol = load_solution(path)
        if sol.u is None:
            print(f"{path}: no schedule; skipped")
            continue
        try:
            report = validate_solution(case, sol, reference)
        except ValueError:  # scenario count mismatch: schedule checks only
            report = validate_solution(case, sol)
        top = max(report.values()) if report else 0.0
        worst = max(worst, top)
        print(f"{path}: max residual {top:.3e}")
        for family, residual in sorted(report.items()):
            print(f"  {family}: {residual:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="upfcuc", description=__doc__)
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--case-path", dest="case_path")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--strategies", help="comma-separated strategy list")
    p.add_argument("--variants", help="comma-separated variant list")
    p.add_argument("--voltage-profile", dest="voltage_profile",
                   choices=sorted(VOLTAGE_PROFILES))
    p.add_argument("--max-workers", dest="max_workers", type=int)
    p.add_argument("--time-limit", dest="time_limit", type=float)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample and reduce wind scenarios")
    g.add_argument("--n", dest="n_generate", type=int)
    g.add_argument("--k", dest="k_reduce", type=int)
    g.add_argument("--sigma", dest="sigma_mw", type=float)
    g.add_argument("--use-paper-scenarios", action="store_true")

    s = sub.add_parser("solve", help="solve the configured combinations")
    s.add_argument("--use-paper-scenarios", action="store_true")

    e = sub.add_parser("evaluate", help="out-of-sample evaluation")
    e.add_argument("--use-paper-scenarios", action="store_true")
    e.add_argument("--fresh-draw", dest="fresh_evaluation_draw",
                   action="store_true")

    sub.add_parser("report", help="join artifacts into a summary table")

    v = sub.add_parser("validate", help="re-check solution constraints")
    v.add_argument("solution_files", nargs="+")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG_ERROR
    try:
        cfg = _load_config(args)
    except (ValueError, TypeError, json.JSONDecodeError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "report":
            return cmd_report(cfg)
        if args.command == "validate":
            return cmd_validate(cfg, args.solution_files)
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
