"""Artifact round-trips, provenance stamping, and table shaping."""

import json

import numpy as np
import pytest

from upfcuc.evaluation import MetricsReport
from upfcuc.formulation.solution import UcSolution
from upfcuc.reporting import (
    CHANGE_RATE_COLUMNS,
    METRICS_COLUMNS,
    OPTIMIZATION_COLUMNS,
    atomic_write,
    change_rate_table_rows,
    config_hash,
    load_solution,
    metrics_table_rows,
    optimization_table_rows,
    provenance_header,
    save_solution,
    schedule_grid_rows,
    write_csv,
)


def _solution(status="optimal"):
    return UcSolution(
        strategy="SSM", variant="DC", status=status, objective=104000.0,
        u=np.ones((3, 4), dtype=int),
        breakdown={"uc_cost": 747.66, "expected_fuel": 100000.0,
                   "expected_curtailment": 200.0, "expected_shedding": 50.0},
        first_stage={"p_gen": np.full((3, 4), 5.0)},
        second_stage={"p_gen": np.full((2, 3, 4), 6.0)},
        provenance="test", scenario_probabilities=np.array([0.6, 0.4]),
        message="")


def test_solution_roundtrip(tmp_path):
    path = tmp_path / "sol.json"
    save_solution(_solution(), path)
    again = load_solution(path)
    assert again.strategy == "SSM"
    assert again.objective == 104000.0
    np.testing.assert_array_equal(again.u, np.ones((3, 4), dtype=int))
    np.testing.assert_allclose(again.second_stage["p_gen"], 6.0)
    np.testing.assert_allclose(again.scenario_probabilities, [0.6, 0.4])
    assert again.breakdown["uc_cost"] == 747.66


def test_config_hash_stable_and_order_free():
    a = config_hash({"x": 1, "y": [1, 2]})
    b = config_hash({"y": [1, 2], "x": 1})
    assert a == b
    assert len(a) == 12
    assert config_hash({"x": 2, "y": [1, 2]}) != a


def test_write_csv_has_provenance_comments(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, provenance_header(7, "abc123", "unit-test"),
              ["a", "b"], [[1, 2], [3, 4]])
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed: 7"
    assert lines[1] == "# config_hash: abc123"
    assert lines[2] == "# provenance: unit-test"
    assert lines[3] == "a,b"
    assert lines[4:] == ["1,2", "3,4"]


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    path = tmp_path / "x.txt"
    atomic_write(path, "one")
    atomic_write(path, "two")
    assert path.read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]


def test_optimization_table_rows():
    rows = optimization_table_rows([_solution(), _solution("infeasible")])
    assert rows[0] == ["SSM", "747.66", "100000.00", "200.00", "50.00",
                       "104000.00"]
    assert rows[1] == ["SSM", "--", "--", "--", "--", "--"]
    assert len(OPTIMIZATION_COLUMNS) == 6


def test_schedule_grid_rows():
    rows = schedule_grid_rows(_solution())
    assert rows[0][0] == "G1"
    assert rows[2][1:] == [1, 1, 1, 1]
    assert schedule_grid_rows(
        UcSolution("NM", "DC", "infeasible", None, None)) == []


def _report(**kw):
    base = dict(strategy="SSM", variant="DC", ucc=747.66, efc=1.0, ewc=2.0,
                elc=3.0, etc=6.0, wpcp=0.05, lolp=0.01,
                infeasible_probability=0.0, n_scenarios=10, n_infeasible=0)
    base.update(kw)
    return MetricsReport(**base)


def test_metrics_and_change_rate_rows():
    rows = metrics_table_rows([_report()])
    assert rows[0][0] == "SSM"
    assert rows[0][5] == "5.00%"
    assert len(rows[0]) == len(METRICS_COLUMNS)
    with_cr = _report(change_rates={"efc": -0.017, "ewc": -0.736,
                                    "elc": -0.917, "etc": -0.04})
    rows = change_rate_table_rows([_report(), with_cr])
    assert len(rows) == 1  # baselines without change rates are skipped
    assert rows[0] == ["SSM", "-1.7%", "-73.6%", "-91.7%", "-4.0%"]
    assert len(CHANGE_RATE_COLUMNS) == 5


def test_solution_json_is_plain(tmp_path):
    path = tmp_path / "sol.json"
    save_solution(_solution(), path)
    payload = json.loads(path.read_text())
    assert payload["u"] == [[1, 1, 1, 1]] * 3
    assert isinstance(payload["breakdown"]["uc_cost"], float)
