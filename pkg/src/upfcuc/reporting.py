"""Run artifacts: solution (de)serialization, provenance-stamped CSV tables,
and atomic file writes.

Every emitted table starts with comment lines carrying the seed, a hash of
the run configuration, and the solver provenance, so an artifact can always
be traced back to the run that produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .evaluation import MetricsReport
from .formulation.solution import UcSolution


def atomic_write(path, data: str) -> None:
    """Write text to ``path`` via a same-directory temp file + rename, so a
    crash never leaves a half-written artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_hash(config_dict: dict) -> str:
    """Stable short hash of a JSON-serializable configuration."""
    blob = json.dumps(config_dict, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def provenance_header(seed, cfg_hash: str, provenance: str = "") -> list[str]:
    lines = [f"# seed: {seed}", f"# config_hash: {cfg_hash}"]
    if provenance:
        lines.append(f"# provenance: {provenance}")
    return lines


def write_csv(path, header_comments: list[str], columns: list[str],
              rows: list[list]) -> None:
    buf = io.StringIO()
    for line in header_comments:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    atomic_write(path, buf.getvalue())


# -- solution files -----------------------------------------------------------


def _arrays_to_lists(d: dict) -> dict:
    return {k: np.asarray(v).tolist() for k, v in d.items()}


def save_solution(solution: UcSolution, path) -> None:
    payload = {
        "strategy": solution.strategy,
        "variant": solution.variant,
        "status": solution.status,
        "objective": solution.objective,
        "u": None if solution.u is None else np.asarray(solution.u).tolist(),
        "breakdown": solution.breakdown,
        "first_stage": _arrays_to_lists(solution.first_stage),
        "second_stage": _arrays_to_lists(solution.second_stage),
        "provenance": solution.provenance,
        "scenario_probabilities": (
            None if solution.scenario_probabilities is None
            else np.asarray(solution.scenario_probabilities).tolist()),
        "message": solution.message,
    }
    atomic_write(path, json.dumps(payload, indent=1))


def load_solution(path) -> UcSolution:
    payload = json.loads(Path(path).read_text())
    arr = lambda v: None if v is None else np.asarray(v)
    return UcSolution(
        strategy=payload["strategy"], variant=payload["variant"],
        status=payload["status"], objective=payload["objective"],
        u=None if payload["u"] is None else np.asarray(payload["u"], int),
        breakdown=payload["breakdown"],
        first_stage={k: np.asarray(v)
                     for k, v in payload["first_stage"].items()},
        second_stage={k: np.asarray(v)
                      for k, v in payload["second_stage"].items()},
        provenance=payload["provenance"],
        scenario_probabilities=arr(payload["scenario_probabilities"]),
        message=payload["message"],
    )


# -- paper-shaped tables ------------------------------------------------------

_DASH = "--"


def optimization_table_rows(solutions: list[UcSolution]) -> list[list]:
    """Rows shaped like the optimization-results tables: model, UC cost,
    expected fuel/curtailment/shedding cost, objective."""
    rows = []
    for sol in solutions:
        if sol.feasible:
            b = sol.breakdown
            rows.append([sol.strategy,
                         f"{b['uc_cost']:.2f}",
                         f"{b['expected_fuel']:.2f}",
                         f"{b['expected_curtailment']:.2f}",
                         f"{b['expected_shedding']:.2f}",
                         f"{sol.objective:.2f}"])
        else:
            rows.append([sol.strategy] + [_DASH] * 5)
    return rows


OPTIMIZATION_COLUMNS = ["model", "uc_cost", "expected_fuel_cost",
                        "expected_wind_curtailment_cost",
                        "expected_load_shedding_cost", "objective_cost"]


def schedule_grid_rows(solution: UcSolution) -> list[list]:
    """One row per unit: hourly 0/1 commitment flags."""
    if solution.u is None:
        return []
    return [[f"G{g + 1}"] + [int(v) for v in solution.u[g]]
            for g in range(solution.u.shape[0])]


def metrics_table_rows(reports: list[MetricsReport]) -> list[list]:
    rows = []
    for r in reports:
        rows.append([r.strategy, f"{r.efc:.2f}", f"{r.ewc:.2f}",
                     f"{r.elc:.2f}", f"{r.etc:.2f}",
                     f"{100 * r.wpcp:.2f}%", f"{100 * r.lolp:.2f}%",
                     f"{100 * r.infeasible_probability:.2f}%"])
    return rows


METRICS_COLUMNS = ["model", "efc", "ewc", "elc", "etc",
                   "wpcp", "lolp", "infeasible_probability"]


def change_rate_table_rows(reports: list[MetricsReport]) -> list[list]:
    rows = []
    for r in reports:
        if not r.change_rates:
            continue
        rows.append([r.strategy] + [
            f"{100 * r.change_rates[k]:.1f}%"
            for k in ("efc", "ewc", "elc", "etc")])
    return rows


CHANGE_RATE_COLUMNS = ["model", "cr_efc", "cr_ewc", "cr_elc", "cr_etc"]
