"""Scenario sampling, reduction, and CSV round-trips."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from upfcuc.scenarios import (
    generate_lhs,
    kantorovich_distance,
    load_scenarios,
    reduce,
    save_scenarios,
)

from conftest import scenario_set


def test_lhs_is_stratified_per_hour(case):
    import dataclasses

    from scipy.stats import norm

    # keep the forecast away from 0/capacity so no draw is clipped
    farm = dataclasses.replace(case.wind_farms[0],
                               hourly_forecast=(75.0,) * case.horizon)
    mid = dataclasses.replace(case, wind_farms=[farm])
    n, sigma = 40, 10.0
    full = generate_lhs(mid, n, sigma, seed=7)
    trajs = full.trajectories()  # (n, farms, horizon)
    edges = sigma * norm.ppf(np.arange(1, n) / n)
    lo = np.concatenate([[-np.inf], edges]) - 1e-9
    hi = np.concatenate([edges, [np.inf]]) + 1e-9
    for t in range(mid.horizon):
        errors = np.sort(trajs[:, 0, t] - 75.0)
        # each of the n equiprobable strata holds exactly one draw
        assert ((errors >= lo) & (errors <= hi)).all()


def test_lhs_deterministic(case):
    a = generate_lhs(case, 10, 20.0, seed=3)
    b = generate_lhs(case, 10, 20.0, seed=3)
    np.testing.assert_array_equal(a.trajectories(), b.trajectories())
    c = generate_lhs(case, 10, 20.0, seed=4)
    assert not np.array_equal(a.trajectories(), c.trajectories())


def test_lhs_respects_capacity(case):
    full = generate_lhs(case, 25, 150.0, seed=1)
    trajs = full.trajectories()
    assert trajs.min() >= 0.0
    assert trajs.max() <= case.wind_farms[0].capacity_mw


def _brute_force_best(full, k):
    n = len(full)
    best = min(itertools.combinations(range(n), k),
               key=lambda kept: kantorovich_distance(full, kept))
    return kantorovich_distance(full, best)


@settings(deadline=None, max_examples=20)
@given(st.integers(min_value=0, max_value=10_000),
       st.integers(min_value=1, max_value=4))
def test_reduction_close_to_brute_force(seed, k):
    """Fast-forward selection is greedy; on 5-scenario sets it must stay
    within a small factor of the exhaustive optimum and redistribute all
    probability."""
    rng = np.random.default_rng(seed)
    trajs = rng.uniform(0.0, 100.0, size=(5, 1, 6))
    full = scenario_set(list(trajs))
    reduced = reduce(full, k)
    assert len(reduced) == k
    assert reduced.probabilities.sum() == pytest.approx(1.0)
    kept = [np.flatnonzero(
        (np.abs(trajs - s.trajectory).reshape(5, -1)).sum(axis=1) < 1e-12)[0]
        for s in reduced.scenarios]
    achieved = kantorovich_distance(full, kept)
    optimum = _brute_force_best(full, k)
    assert achieved <= optimum * 1.5 + 1e-9


def test_reduction_probability_goes_to_nearest(three_unit_case):
    trajs = [np.array([[10.0, 10.0, 10.0]]),
             np.array([[11.0, 11.0, 11.0]]),
             np.array([[50.0, 50.0, 50.0]])]
    full = scenario_set(trajs, probabilities=[0.5, 0.3, 0.2])
    reduced = reduce(full, 2)
    # scenarios 0 and 2 are kept; 1's weight moves to its neighbor 0
    got = sorted(zip([tuple(s.trajectory[0]) for s in reduced.scenarios],
                     reduced.probabilities))
    assert got[0][1] == pytest.approx(0.8)
    assert got[1][1] == pytest.approx(0.2)


def test_reduce_identity_when_k_equals_n():
    trajs = [np.full((1, 3), v) for v in (5.0, 9.0, 30.0)]
    full = scenario_set(trajs)
    same = reduce(full, 3)
    np.testing.assert_array_equal(same.trajectories(), full.trajectories())


def test_scenario_roundtrip(tmp_path, reduced_scenarios):
    path = tmp_path / "scen.csv"
    save_scenarios(reduced_scenarios, path)
    again = load_scenarios(path)
    np.testing.assert_allclose(again.trajectories(),
                               reduced_scenarios.trajectories())
    np.testing.assert_allclose(again.probabilities,
                               reduced_scenarios.probabilities)


def test_paper_scenarios_shape(reduced_scenarios):
    assert len(reduced_scenarios) == 10
    assert reduced_scenarios.trajectories().shape == (10, 1, 24)
    assert reduced_scenarios.probabilities.sum() == pytest.approx(1.0)
    assert (reduced_scenarios.probabilities > 0).all()
