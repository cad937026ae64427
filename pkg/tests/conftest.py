"""Shared fixtures: the bundled 6-bus case and small synthetic systems."""

import numpy as np
import pytest

from upfcuc.case import (
    Bus,
    Line,
    NetworkCase,
    ThermalUnit,
    WindFarm,
    load_bundled_case,
)
from upfcuc.scenarios import Scenario, ScenarioSet, load_paper_scenarios


@pytest.fixture(scope="session")
def case():
    return load_bundled_case()


@pytest.fixture(scope="session")
def reduced_scenarios():
    return load_paper_scenarios()


def make_unit(name="U", bus=1, p_max=100.0, p_min=20.0, **kw):
    defaults = dict(
        q_max=50.0, q_min=-50.0, ramp_up=60.0, ramp_down=60.0,
        startup_ramp=p_max, shutdown_ramp=p_max, min_on=1, min_off=1,
        initial_state=1, fuel_a=100.0, fuel_b=20.0, fuel_c=0.001,
        startup_fuel=50.0, shutdown_fuel=50.0, fuel_price=1.0)
    defaults.update(kw)
    return ThermalUnit(name=name, bus=bus, p_max=p_max, p_min=p_min,
                       **defaults)


@pytest.fixture()
def three_unit_case():
    """One bus, three units, three hours: small enough to enumerate every
    commitment (2**9 schedules)."""
    horizon = 3
    units = [
        make_unit("A", p_max=120.0, p_min=30.0, fuel_b=18.0,
                  startup_fuel=80.0, shutdown_fuel=80.0, initial_state=2),
        make_unit("B", p_max=80.0, p_min=15.0, fuel_b=26.0,
                  startup_fuel=40.0, shutdown_fuel=40.0, initial_state=-1),
        make_unit("C", p_max=50.0, p_min=10.0, fuel_b=35.0,
                  startup_fuel=10.0, shutdown_fuel=10.0, initial_state=-2,
                  min_off=2),
    ]
    p_load = np.array([[90.0, 150.0, 110.0]])
    return NetworkCase(
        buses=[Bus(1, "generator", load_fraction=1.0)],
        lines=[], units=units, wind_farms=[], upfc_devices=[],
        p_load=p_load, q_load=0.3 * p_load, reserve_fraction=0.05,
        price_curtailment=73.6, price_shedding=300.0,
        v_min=0.95, v_max=1.05, mva_base=100.0, horizon=horizon,
        reference_bus=1)


@pytest.fixture()
def two_bus_case():
    """Two buses joined by one line, a unit and a wind farm: the smallest
    system where network limits and curtailment both matter."""
    horizon = 4
    forecast = (30.0, 60.0, 45.0, 20.0)
    p_load = np.array([[0.0] * horizon, [80.0, 110.0, 95.0, 70.0]])
    return NetworkCase(
        buses=[Bus(1, "generator"), Bus(2, "load", load_fraction=1.0)],
        lines=[Line(1, 1, 2, 0.01, 0.1, 0.0, 90.0)],
        units=[make_unit("G", bus=1, p_max=150.0, p_min=20.0,
                         ramp_up=100.0, ramp_down=100.0,
                         q_max=90.0, q_min=-90.0)],
        wind_farms=[WindFarm(bus=2, capacity_mw=80.0, power_factor=0.95,
                             hourly_forecast=forecast)],
        upfc_devices=[],
        p_load=p_load, q_load=0.2 * p_load, reserve_fraction=0.0,
        price_curtailment=73.6, price_shedding=300.0,
        v_min=0.9, v_max=1.1, mva_base=100.0, horizon=horizon,
        reference_bus=1)


def scenario_set(trajectories, probabilities=None, provenance="generated"):
    n = len(trajectories)
    probabilities = probabilities or [1.0 / n] * n
    scenarios = [
        Scenario(id=i, probability=probabilities[i],
                 trajectory=np.asarray(trajectories[i], dtype=float))
        for i in range(n)]
    return ScenarioSet(scenarios=scenarios, seed=0, provenance=provenance)
