"""Wind-trajectory scenario generation and probability-metric reduction.

Generation uses stratified (Latin hypercube) sampling of the hourly forecast
error; reduction is greedy fast-forward selection under the Kantorovich
distance with a Euclidean trajectory metric.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .case import NetworkCase, wind_reactive

PROVENANCES = ("generated", "reduced", "paper-table")


@dataclass(frozen=True)
class Scenario:
    id: int
    probability: float
    trajectory: np.ndarray  # MW, shape (n_farms, horizon)

    def reactive_trajectory(self, case: NetworkCase) -> np.ndarray:
        """Reactive demand in MVar implied by constant power-factor control."""
        return np.array([
            [wind_reactive(p, farm.power_factor) for p in self.trajectory[k]]
            for k, farm in enumerate(case.wind_farms)
        ])


@dataclass
class ScenarioSet:
    scenarios: list[Scenario]
    seed: int | None
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        total = sum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"scenario probabilities sum to {total}, not 1")

    def __len__(self):
        return len(self.scenarios)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    def trajectories(self) -> np.ndarray:
        """Stacked trajectories, shape (n_scenarios, n_farms, horizon)."""
        return np.array([s.trajectory for s in self.scenarios])


def generate_lhs(case: NetworkCase, n: int, sigma_mw: float,
                 seed: int) -> ScenarioSet:
    """Sample ``n`` wind trajectories with stratified hourly forecast errors.

    Each hour of each farm is a sampling dimension: the n error draws occupy
    the n equiprobable strata of N(0, sigma) exactly once, with an independent
    random permutation per dimension.  Trajectories are forecast + error
    clamped to [0, capacity]; probabilities are uniform 1/n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma_mw < 0:
        raise ValueError("sigma must be >= 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    n_farms = len(case.wind_farms)
    horizon = case.horizon
    trajs = np.empty((n, n_farms, horizon))
    for k, farm in enumerate(case.wind_farms):
        forecast = np.asarray(farm.hourly_forecast)
        for t in range(horizon):
            u = (np.arange(n) + rng.random(n)) / n
            err = sigma_mw * norm.ppf(u) if sigma_mw > 0 else np.zeros(n)
            rng.shuffle(err)
            trajs[:, k, t] = np.clip(forecast[t] + err, 0.0, farm.capacity_mw)
    scenarios = [Scenario(id=i, probability=1.0 / n, trajectory=trajs[i])
                 for i in range(n)]
    return ScenarioSet(scenarios=scenarios, seed=seed, provenance="generated")


def _distance_matrix(trajs: np.ndarray) -> np.ndarray:
    flat = trajs.reshape(len(trajs), -1)
    diff = flat[:, None, :] - flat[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def kantorovich_distance(full: ScenarioSet, kept_indices) -> float:
    """Distance between the full set and the subset indexed by kept_indices."""
    d = _distance_matrix(full.trajectories())
    kept = np.asarray(sorted(kept_indices))
    p = full.probabilities
    others = np.setdiff1d(np.arange(len(full)), kept)
    if len(others) == 0:
        return 0.0
    return float(p[others] @ d[np.ix_(others, kept)].min(axis=1))


def reduce(scenario_set: ScenarioSet, k: int) -> ScenarioSet:
    """Fast-forward selection of k scenarios with probability redistribution.

    Each discarded scenario's probability moves to its nearest retained one
    (ties broken by lowest index, for determinism).
    """
    n = len(scenario_set)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range [1, {n}]")
    if k == n:
        return ScenarioSet(
            scenarios=list(scenario_set.scenarios),
            seed=scenario_set.seed,
            provenance="reduced",
        )
    trajs = scenario_set.trajectories()
    p = scenario_set.probabilities
    d = _distance_matrix(trajs)

    selected: list[int] = []
    # c[i] = distance from i to the nearest selected scenario so far
    c = np.full(n, np.inf)
    remaining = np.ones(n, dtype=bool)
    for _ in range(k):
        # cost of selecting u: sum over non-selected j of p_j * min(c_j, d_ju);
        # the j == u term is min(c_u, 0) = 0, so it can stay in the sum
        cand = np.where(remaining)[0]
        trial = np.minimum(c[remaining][None, :], d[np.ix_(cand, cand)])
        costs = trial @ p[remaining]
        u = cand[int(np.argmin(costs))]
        selected.append(u)
        remaining[u] = False
        c = np.minimum(c, d[:, u])

    selected_arr = np.array(sorted(selected))
    new_p = np.zeros(k)
    pos = {s: i for i, s in enumerate(selected_arr)}
    for j in range(n):
        if j in pos:
            new_p[pos[j]] += p[j]
        else:
            nearest = selected_arr[int(np.argmin(d[j, selected_arr]))]
            new_p[pos[nearest]] += p[j]

    scenarios = [
        Scenario(id=i, probability=new_p[i], trajectory=trajs[s])
        for i, s in enumerate(selected_arr)
    ]
    return ScenarioSet(scenarios=scenarios, seed=scenario_set.seed,
                       provenance="reduced")


# -- CSV I/O ------------------------------------------------------------------


def save_scenarios(scenario_set: ScenarioSet, path) -> None:
    """Write ``hour,s1..sN`` CSV plus a sidecar JSON with probabilities."""
    path = Path(path)
    trajs = scenario_set.trajectories()
    n, n_farms, horizon = trajs.shape
    if n_farms != 1:
        raise ValueError("CSV format supports a single wind farm")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["hour"] + [f"s{i + 1}" for i in range(n)])
        for t in range(horizon):
            w.writerow([t + 1] + [repr(float(trajs[i, 0, t]))
                                  for i in range(n)])
    meta = {
        "probabilities": [s.probability for s in scenario_set.scenarios],
        "seed": scenario_set.seed,
        "provenance": scenario_set.provenance,
    }
    with open(path.with_suffix(".meta.json"), "w") as f:
        json.dump(meta, f, indent=2)


def load_scenarios(path, provenance: str | None = None) -> ScenarioSet:
    """Read a scenario CSV; probabilities come from the sidecar JSON when
    present, else default to uniform."""
    path = Path(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    n = len(header) - 1
    values = np.array([[float(v) for v in r[1:]] for r in body])  # (T, n)
    meta_path = path.with_suffix(".meta.json")
    seed = None
    probs = np.full(n, 1.0 / n)
    if meta_path.exists():
        with open(meta_path) as f:
            meta = json.load(f)
        probs = np.asarray(meta.get("probabilities", probs), dtype=float)
        seed = meta.get("seed")
        provenance = provenance or meta.get("provenance")
    if len(probs) != n:
        raise ValueError("sidecar probabilities do not match scenario count")
    scenarios = [
        Scenario(id=i, probability=float(probs[i]),
                 trajectory=values[:, i][None, :])
        for i in range(n)
    ]
    return ScenarioSet(scenarios=scenarios, seed=seed,
                       provenance=provenance or "generated")


def load_paper_scenarios(path=None) -> ScenarioSet:
    """Load the bundled reduced 10-scenario table (24 hours x 10 columns)."""
    if path is None:
        path = Path(__file__).parent / "data" / "case6" / "scenarios_reduced.csv"
    s = load_scenarios(path, provenance="paper-table")
    if len(s) != 10 or s.scenarios[0].trajectory.shape[1] != 24:
        raise ValueError("paper scenario table must be 24 hours x 10 scenarios")
    return s
