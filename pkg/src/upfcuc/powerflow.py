"""Standalone AC power-flow utilities used as an independent cross-check.

Everything here works in complex phasor arithmetic straight from the
admittance matrix, deliberately sharing no code with the optimization
formulation, so it can serve as an oracle for balance residuals.
"""

from __future__ import annotations

import numpy as np

from .case import NetworkCase


def bus_injections(case: NetworkCase, v: np.ndarray,
                   theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Active/reactive p.u. injections implied by a voltage profile.

    ``v``/``theta`` may be (N,) or (N, T); the result matches the shape.
    """
    y = case.ybus()
    u = v * np.exp(1j * theta)
    s = u * np.conj(y @ u)
    return s.real, s.imag


def branch_flow(case: NetworkCase, v: np.ndarray, theta: np.ndarray,
                line_index: int, reverse: bool = False) -> np.ndarray:
    """Active p.u. power entering a line at its sending end."""
    ln = case.lines[line_index]
    a, b = ln.from_bus - 1, ln.to_bus - 1
    if reverse:
        a, b = b, a
    y_series = 1.0 / (ln.r + 1j * ln.x)
    y_sh = 1j * ln.b / 2.0
    ua = v[a] * np.exp(1j * theta[a])
    ub = v[b] * np.exp(1j * theta[b])
    s = ua * np.conj((ua - ub) * y_series + ua * y_sh)
    return s.real


def newton_power_flow(case: NetworkCase, p_spec: np.ndarray,
                      q_spec: np.ndarray, bus_types: list[str],
                      v_spec: np.ndarray, tol: float = 1e-10,
                      max_iter: int = 40):
    """Classic polar Newton-Raphson power flow.

    ``bus_types`` entries are 'slack', 'pv' or 'pq'; ``p_spec``/``q_spec``
    are net injections (generation minus load) in p.u.; ``v_spec`` fixes the
    magnitude at slack/PV buses.  Returns (v, theta, iterations).
    """
    n = case.n_bus
    if len(bus_types) != n:
        raise ValueError("bus_types length mismatch")
    slack = [i for i, t in enumerate(bus_types) if t == "slack"]
    if len(slack) != 1:
        raise ValueError("exactly one slack bus required")
    pv = [i for i, t in enumerate(bus_types) if t == "pv"]
    pq = [i for i, t in enumerate(bus_types) if t == "pq"]
    p_idx = pv + pq  # buses with a P equation
    q_idx = pq

    v = np.where([t in ("slack", "pv") for t in bus_types], v_spec, 1.0)
    v = v.astype(float)
    theta = np.zeros(n)
    y = case.ybus()

    for it in range(max_iter):
        p_calc, q_calc = bus_injections(case, v, theta)
        mis = np.concatenate([p_calc[p_idx] - p_spec[p_idx],
                              q_calc[q_idx] - q_spec[q_idx]])
        if np.abs(mis).max() < tol:
            return v, theta, it
        # numerical Jacobian is fine at this scale and keeps the oracle
        # independent of the analytic derivatives under test
        m = len(mis)
        jac = np.zeros((m, m))
        eps = 1e-7
        for k, i in enumerate(p_idx):
            theta[i] += eps
            pc, qc = bus_injections(case, v, theta)
            theta[i] -= eps
            jac[:, k] = np.concatenate([(pc[p_idx] - p_calc[p_idx]),
                                        (qc[q_idx] - q_calc[q_idx])]) / eps
        for k, i in enumerate(q_idx):
            v[i] += eps
            pc, qc = bus_injections(case, v, theta)
            v[i] -= eps
            jac[:, len(p_idx) + k] = np.concatenate(
                [(pc[p_idx] - p_calc[p_idx]),
                 (qc[q_idx] - q_calc[q_idx])]) / eps
        step = np.linalg.solve(jac, -mis)
        theta[p_idx] += step[:len(p_idx)]
        v[q_idx] += step[len(p_idx):]
    raise RuntimeError(f"power flow did not converge in {max_iter} iterations")
