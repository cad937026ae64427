"""Shared solver option/report containers and the trace log."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

STATUSES = ("optimal", "locally_optimal", "infeasible", "limit")


@dataclass
class SolveOptions:
    feasibility_tol: float = 1e-8
    optimality_tol: float = 1e-6
    mip_gap: float = 1e-6
    nlp_kkt_tol: float = 1e-6
    max_nodes: int = 200_000
    max_iterations: int = 500
    time_limit: float = 600.0
    warm_start: np.ndarray | None = None
    trace_path: str | None = None

    def __post_init__(self):
        for name in ("feasibility_tol", "optimality_tol", "mip_gap",
                     "nlp_kkt_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolveReport:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0  # simplex iterations / NLP iterations / B&B nodes
    runtime: float = 0.0
    bound: float | None = None  # best proven lower bound (MILP)
    kkt_error: float | None = None  # final KKT error (NLP)
    reduced_costs: np.ndarray | None = None  # LP variable reduced costs
    max_violation: float | None = None  # certified violation when infeasible
    message: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "locally_optimal")


class Trace:
    """Tab-separated per-iteration/per-node log, appended to a file."""

    def __init__(self, path: str | None, context: str):
        self.path = Path(path) if path else None
        self.context = context
        self.t0 = time.perf_counter()
        if self.path and not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("context\telapsed_s\tevent\tdetail\n")

    def log(self, event: str, detail: str):
        if self.path is None:
            return
        elapsed = time.perf_counter() - self.t0
        with open(self.path, "a") as f:
            f.write(f"{self.context}\t{elapsed:.3f}\t{event}\t{detail}\n")
