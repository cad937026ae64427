"""AC power-flow oracle: self-consistency and textbook identities."""

import numpy as np
import pytest

from upfcuc.powerflow import branch_flow, bus_injections, newton_power_flow


def test_flat_profile_zero_injections(case):
    import dataclasses
    stripped = dataclasses.replace(
        case,
        buses=[dataclasses.replace(b, shunt_conductance=0.0)
               for b in case.buses],
        lines=[dataclasses.replace(ln, b=0.0) for ln in case.lines])
    v = np.ones(case.n_bus)
    theta = np.zeros(case.n_bus)
    p, q = bus_injections(stripped, v, theta)
    np.testing.assert_allclose(p, 0.0, atol=1e-12)
    np.testing.assert_allclose(q, 0.0, atol=1e-12)


def test_injections_support_time_dimension(case):
    v = np.ones((case.n_bus, 5)) * 1.02
    theta = np.zeros((case.n_bus, 5))
    theta[2] = np.linspace(0.0, 0.1, 5)
    p, q = bus_injections(case, v, theta)
    assert p.shape == (case.n_bus, 5)
    p0, q0 = bus_injections(case, v[:, 3], theta[:, 3])
    np.testing.assert_allclose(p[:, 3], p0, atol=1e-12)
    np.testing.assert_allclose(q[:, 3], q0, atol=1e-12)


def test_branch_flows_sum_to_injection(case):
    rng = np.random.default_rng(5)
    v = 1.0 + 0.03 * rng.standard_normal(case.n_bus)
    theta = 0.05 * rng.standard_normal(case.n_bus)
    theta[case.reference_bus - 1] = 0.0
    p, _ = bus_injections(case, v, theta)
    for b in range(case.n_bus):
        total = 0.0
        for e, ln in enumerate(case.lines):
            if ln.from_bus - 1 == b:
                total += branch_flow(case, v, theta, e)
            elif ln.to_bus - 1 == b:
                total += branch_flow(case, v, theta, e, reverse=True)
        total += case.buses[b].shunt_conductance * v[b] ** 2
        assert total == pytest.approx(p[b], abs=1e-9)


def test_newton_solves_and_matches_spec(case):
    n = case.n_bus
    bus_types = ["slack"] + ["pq"] * (n - 1)
    p_spec = np.zeros(n)
    q_spec = np.zeros(n)
    # a light load served from the slack bus
    p_spec[3] = -0.4
    q_spec[3] = -0.1
    p_spec[4] = -0.3
    v_spec = np.ones(n)
    v, theta, iters = newton_power_flow(case, p_spec, q_spec, bus_types,
                                        v_spec)
    assert iters < 20
    p, q = bus_injections(case, v, theta)
    np.testing.assert_allclose(p[1:], p_spec[1:], atol=1e-8)
    np.testing.assert_allclose(q[1:], q_spec[1:], atol=1e-8)
    assert theta[0] == 0.0
    assert v[0] == 1.0


def test_newton_rejects_bad_setup(case):
    n = case.n_bus
    with pytest.raises(ValueError):
        newton_power_flow(case, np.zeros(n), np.zeros(n), ["pq"] * n,
                          np.ones(n))
