"""Bundled case integrity and the cost primitives."""

import dataclasses

import numpy as np
import pytest

from upfcuc.case import (
    CaseError,
    fuel_cost,
    load_case,
    load_bundled_case,
    save_case,
    schedule_uc_cost,
    transition_cost,
    wind_reactive,
)


def test_bundled_case_shape(case):
    assert case.n_bus == 6
    assert case.horizon == 24
    assert len(case.lines) == 7
    assert len(case.units) == 3
    assert len(case.wind_farms) == 1
    assert len(case.upfc_devices) == 1
    assert case.reference_bus == 1


def test_load_split_sums_to_totals(case):
    fractions = np.array([b.load_fraction for b in case.buses])
    assert fractions.sum() == pytest.approx(1.0)
    # per-bus loads are fractions of the hourly totals
    totals = case.p_load.sum(axis=0)
    for b in case.buses:
        np.testing.assert_allclose(case.p_load[b.id - 1],
                                   b.load_fraction * totals)


def test_reserve_is_fraction_of_load(case):
    np.testing.assert_allclose(case.reserve_mw(),
                               case.reserve_fraction * case.p_load.sum(axis=0))


def test_ybus_row_sums_without_shunts(case):
    # without charging and shunts each row of the Ybus sums to zero
    stripped = dataclasses.replace(
        case,
        buses=[dataclasses.replace(b, shunt_conductance=0.0)
               for b in case.buses],
        lines=[dataclasses.replace(ln, b=0.0) for ln in case.lines])
    np.testing.assert_allclose(stripped.ybus().sum(axis=1), 0.0, atol=1e-12)


def test_fuel_cost_quadratic():
    unit = load_bundled_case().units[0]
    p = 150.0
    expected = unit.fuel_price * (unit.fuel_a + unit.fuel_b * p
                                  + unit.fuel_c * p**2)
    assert fuel_cost(unit, p) == pytest.approx(expected)


def test_transition_cost_symmetric_start_stop(case):
    g2 = case.units[1]
    assert transition_cost(g2, 0, 1) == pytest.approx(g2.startup_cost)
    assert transition_cost(g2, 1, 0) == pytest.approx(g2.shutdown_cost)
    assert transition_cost(g2, 1, 1) == 0.0
    assert g2.shutdown_cost == pytest.approx(g2.startup_cost)


def test_schedule_uc_cost_counts_initial_transition(case):
    u = np.ones((3, 24), dtype=int)
    assert schedule_uc_cost(case.units, u) == pytest.approx(
        case.units[2].startup_cost)  # G3 starts off, turning on at hour 1
    u[2] = 0
    assert schedule_uc_cost(case.units, u) == 0.0


def test_wind_reactive_power_factor():
    assert wind_reactive(100.0, 1.0) == pytest.approx(0.0)
    # cos(phi) = 0.8 -> tan(phi) = 0.75
    assert wind_reactive(80.0, 0.8) == pytest.approx(60.0)


def test_case_roundtrip(tmp_path, case):
    save_case(case, tmp_path / "case")
    again = load_case(tmp_path / "case")
    assert again.n_bus == case.n_bus
    np.testing.assert_allclose(again.p_load, case.p_load)
    assert [u.name for u in again.units] == [u.name for u in case.units]
    assert again.units[1].startup_fuel == case.units[1].startup_fuel


def test_validation_rejects_bad_data(case):
    with pytest.raises(CaseError):
        dataclasses.replace(case, reference_bus=9)
    with pytest.raises(CaseError):
        dataclasses.replace(case, p_load=case.p_load[:, :5])
