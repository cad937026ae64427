"""Builders for the unit-commitment optimization instances.

``build`` produces the AC variant (trigonometric power balances, reactive
power, voltages, converter-rating circles); ``build_dc`` the linear variant
(angle-based flows, piecewise-linear fuel cost).  Both cover the six dispatch
strategies by pinning or freeing the UPFC variable blocks and the re-dispatch
margins.  All power quantities inside an instance are per-unit on the case
MVA base; costs are in $.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..case import NetworkCase
from ..scenarios import ScenarioSet
from .instance import (
    LinearConstraintBuilder,
    ProblemInstance,
    QuadIneqGroup,
    TrigGroup,
    VariableMap,
)

STRATEGIES = ("DM", "NOM", "NM", "FSM", "SSM", "FSSM")
VARIANTS = ("AC", "DC", "MIXED")

DC_FUEL_SEGMENTS = 10


@dataclass(frozen=True)
class StrategyConfig:
    strategy: str
    variant: str = "AC"
    v_min_override: float | None = None
    v_max_override: float | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "MIXED" and self.strategy == "DM":
            raise ValueError("the mixed variant is undefined for DM")

    @property
    def two_stage(self) -> bool:
        return self.strategy not in ("DM", "NOM")

    @property
    def upfc_installed(self) -> bool:
        return self.strategy not in ("DM", "NM")

    @property
    def upfc_first_stage(self) -> bool:
        return self.strategy in ("NOM", "FSM", "FSSM")

    @property
    def upfc_second_stage(self) -> bool:
        # FSM keeps second-stage UPFC variables but ties them to stage one
        return self.strategy in ("FSM", "SSM", "FSSM")

    def v_limits(self, case: NetworkCase):
        v_min = self.v_min_override if self.v_min_override is not None else case.v_min
        v_max = self.v_max_override if self.v_max_override is not None else case.v_max
        return v_min, v_max


class _Prep:
    """Per-unit numerical arrays derived from a case."""

    def __init__(self, case: NetworkCase):
        base = case.mva_base
        self.case = case
        self.T = case.horizon
        self.N = case.n_bus
        self.G = len(case.units)
        self.E = len(case.lines)
        self.L = len(case.upfc_devices)
        self.W = len(case.wind_farms)
        self.NL = len(case.load_buses)

        self.pl = case.p_load / base  # (N, T)
        self.ql = case.q_load / base
        self.reserve = case.reserve_mw() / base  # (T,)

        self.gen_bus = np.array([u.bus - 1 for u in case.units])
        self.pmax = np.array([u.p_max for u in case.units]) / base
        self.pmin = np.array([u.p_min for u in case.units]) / base
        self.qmax = np.array([u.q_max for u in case.units]) / base
        self.qmin = np.array([u.q_min for u in case.units]) / base
        self.ru = np.array([u.ramp_up for u in case.units]) / base
        self.rd = np.array([u.ramp_down for u in case.units]) / base
        self.su = np.array([u.startup_ramp for u in case.units]) / base
        self.sd = np.array([u.shutdown_ramp for u in case.units]) / base
        self.u_init = np.array([1.0 if u.initially_on else 0.0
                                for u in case.units])
        # previous-hour output at t=0: p_min for units initially on, else 0
        self.pg_init = self.pmin * self.u_init
        self.startup_cost = np.array([u.startup_cost for u in case.units])
        self.shutdown_cost = np.array([u.shutdown_cost for u in case.units])
        self.price = np.array([u.fuel_price for u in case.units])
        self.fa = np.array([u.fuel_a for u in case.units])
        self.fb = np.array([u.fuel_b for u in case.units])
        self.fc = np.array([u.fuel_c for u in case.units])

        self.wind_bus = np.array([w.bus - 1 for w in case.wind_farms])
        self.tanphi = np.array([w.tan_phi for w in case.wind_farms])
        self.wcap = np.array([w.capacity_mw for w in case.wind_farms]) / base
        self.pwf = np.array([w.hourly_forecast for w in case.wind_farms]) / base
        self.qwf = self.pwf * self.tanphi[:, None]

        self.load_bus = np.array([b - 1 for b in case.load_buses])

        ybus = case.ybus()
        self.gbus = ybus.real
        self.bbus = ybus.imag
        self.gshunt = np.array([b.shunt_conductance for b in case.buses])
        self.line_from = np.array([ln.from_bus - 1 for ln in case.lines])
        self.line_to = np.array([ln.to_bus - 1 for ln in case.lines])
        self.line_x = np.array([ln.x for ln in case.lines])
        self.line_cap = np.array([ln.capacity_mw for ln in case.lines]) / base
        self.ref = case.reference_bus - 1

        self.upfc_line = np.array(
            [next(e for e, ln in enumerate(case.lines) if ln.id == d.series_line)
             for d in case.upfc_devices], dtype=int)
        self.upfc_from = self.line_from[self.upfc_line] if self.L else np.array([], int)
        self.upfc_to = self.line_to[self.upfc_line] if self.L else np.array([], int)
        self.tsh = np.array([d.t_sh_max for d in case.upfc_devices]) / base
        self.tse = np.array([d.t_se_max for d in case.upfc_devices]) / base
        self.pdc = np.array([d.p_dc_max for d in case.upfc_devices]) / base
        self.dp = np.array([d.delta_p for d in case.upfc_devices]) / base
        self.dqse = np.array([d.delta_q_se for d in case.upfc_devices]) / base
        self.dqsh = np.array([d.delta_q_sh for d in case.upfc_devices]) / base

        for dev, f in zip(case.upfc_devices, self.upfc_from):
            if dev.shunt_bus - 1 != f:
                raise ValueError(
                    "UPFC shunt converter must parallel the from-side of its "
                    "series line; reorder the line endpoints in the case")

    def scenario_pw(self, scenarios: ScenarioSet) -> np.ndarray:
        """Per-unit wind trajectories, shape (S, W, T)."""
        return scenarios.trajectories() / self.case.mva_base


# -- shared linear constraint families ---------------------------------------


def _transition_cost_rows(cb, u, w, pp: _Prep):
    """w[g,t] >= startup/shutdown cost of the transition into hour t."""
    G, T = pp.G, pp.T
    su = np.repeat(pp.startup_cost, T)
    sd = np.repeat(pp.shutdown_cost, T)
    u_now = u.reshape(-1)
    u_prev = np.column_stack([np.full(G, -1, dtype=int), u[:, :-1]]).reshape(-1)
    prev_const = np.zeros((G, T))
    prev_const[:, 0] = pp.u_init
    prev_const = prev_const.reshape(-1)
    cb.add([(u_now, su), (u_prev, -su), (w.reshape(-1), -1.0)],
           su * prev_const, "transition_cost_startup")
    cb.add([(u_prev, sd), (u_now, -sd), (w.reshape(-1), -1.0)],
           -sd * prev_const, "transition_cost_shutdown")


def _min_up_down_rows(cb, u, lb_u, ub_u, pp: _Prep):
    """Minimum up/down times: initial (as bounds), intra-horizon, terminal."""
    T = pp.T
    for g, unit in enumerate(pp.case.units):
        ut, dt = unit.min_on, unit.min_off
        if unit.initially_on:
            forced_on = min(T, max(0, ut - unit.initial_state))
            forced_off = 0
        else:
            forced_on = 0
            forced_off = min(T, max(0, dt + unit.initial_state))
        lb_u[u[g, :forced_on]] = 1.0
        ub_u[u[g, :forced_off]] = 0.0

        for t in range(forced_on, T):
            u_prev = int(u[g, t - 1]) if t > 0 else -1
            prev_const = pp.u_init[g] if t == 0 else 0.0
            # sum over the window of u_n >= len * (u_t - u_{t-1}); the
            # window is clipped at the horizon end (terminal form)
            win = u[g, t:t + ut]
            k = len(win)
            cb.add([(win[None, :], -1.0), (np.array([u[g, t]]), float(k)),
                    (np.array([u_prev]), -float(k))],
                   [k * prev_const], "min_up")
        for t in range(forced_off, T):
            u_prev = int(u[g, t - 1]) if t > 0 else -1
            prev_const = pp.u_init[g] if t == 0 else 0.0
            # sum over the window of (1 - u_n) >= len * (u_{t-1} - u_t)
            win = u[g, t:t + dt]
            k = len(win)
            cb.add([(win[None, :], 1.0), (np.array([u[g, t]]), -float(k)),
                    (np.array([u_prev]), float(k))],
                   [k - k * prev_const], "min_down")


def _u_term(u_idx, u_val, g_slice=slice(None)):
    """Return (index_array_or_None, constant_values) for the commitment."""
    if u_idx is not None:
        return u_idx, None
    return None, u_val


def _gen_limit_rows(cb, pg, pavl, qg, u_idx, u_val, pp: _Prep, tag_suffix=""):
    """Generation limits tied to the commitment status."""
    flat = lambda a: a.reshape(-1)
    nrow = pg.size
    reps = nrow // pp.G // pp.T  # scenario multiplicity
    pmin = np.tile(np.repeat(pp.pmin, pp.T), reps)
    pmax = np.tile(np.repeat(pp.pmax, pp.T), reps)
    if u_idx is not None:
        uu = flat(np.broadcast_to(u_idx, pg.shape))
        cb.add([(uu, pmin), (flat(pg), -1.0)], np.zeros(nrow),
               "gen_p_min" + tag_suffix)
        cb.add([(flat(pavl), 1.0), (uu, -pmax)], np.zeros(nrow),
               "gen_p_avail_max" + tag_suffix)
    else:
        uu = flat(np.broadcast_to(u_val, pg.shape))
        cb.add([(flat(pg), -1.0)], -pmin * uu, "gen_p_min" + tag_suffix)
        cb.add([(flat(pavl), 1.0)], pmax * uu, "gen_p_avail_max" + tag_suffix)
    cb.add([(flat(pg), 1.0), (flat(pavl), -1.0)], np.zeros(nrow),
           "gen_p_below_avail" + tag_suffix)
    if qg is not None:
        qmin = np.tile(np.repeat(pp.qmin, pp.T), reps)
        qmax = np.tile(np.repeat(pp.qmax, pp.T), reps)
        if u_idx is not None:
            cb.add([(uu, qmin), (flat(qg), -1.0)], np.zeros(nrow),
                   "gen_q_min" + tag_suffix)
            cb.add([(flat(qg), 1.0), (uu, -qmax)], np.zeros(nrow),
                   "gen_q_max" + tag_suffix)
        else:
            cb.add([(flat(qg), -1.0)], -qmin * uu, "gen_q_min" + tag_suffix)
            cb.add([(flat(qg), 1.0)], qmax * uu, "gen_q_max" + tag_suffix)


def _ramp_rows(cb, pg, pavl, u_idx, u_val, pp: _Prep, tag_suffix=""):
    """Ramp-up/startup, shutdown, and ramp-down coupling between hours.

    ``pg``/``pavl`` have shape (G, T); the commitment is either a variable
    index array (G, T) or a constant 0/1 array.
    """
    G, T = pp.G, pp.T
    minus1 = np.full(G, -1, dtype=int)

    def ucol(t):
        if u_idx is not None:
            return u_idx[:, t] if t >= 0 else minus1
        return None

    def uval(t):
        return u_val[:, t] if t >= 0 else pp.u_init

    for t in range(T):
        # p_avail_t <= pg_{t-1} + RU u_{t-1} + SU (u_t - u_{t-1}) + pmax (1 - u_t)
        terms = [(pavl[:, t], np.ones(G))]
        rhs = pp.pmax.copy()
        if t > 0:
            terms.append((pg[:, t - 1], -np.ones(G)))
        else:
            rhs += pp.pg_init
        if u_idx is not None:
            terms.append((ucol(t - 1), -(pp.ru - pp.su)))
            terms.append((ucol(t), -pp.su + pp.pmax))
            if t == 0:
                rhs += (pp.ru - pp.su) * pp.u_init
        else:
            rhs += (pp.ru - pp.su) * uval(t - 1) + (pp.su - pp.pmax) * uval(t)
        cb.add(terms, rhs, "ramp_up" + tag_suffix)

        # pg_{t-1} <= pg_t + RD u_t + SD (u_{t-1} - u_t) + pmax (1 - u_{t-1})
        terms = [(pg[:, t], -np.ones(G))]
        rhs = pp.pmax.copy()
        if t > 0:
            terms.append((pg[:, t - 1], np.ones(G)))
        else:
            rhs -= pp.pg_init
        if u_idx is not None:
            terms.append((ucol(t), -(pp.rd - pp.sd)))
            terms.append((ucol(t - 1), -pp.sd + pp.pmax))
            if t == 0:
                rhs += (pp.sd - pp.pmax) * pp.u_init
        else:
            rhs += (pp.rd - pp.sd) * uval(t) + (pp.sd - pp.pmax) * uval(t - 1)
        cb.add(terms, rhs, "ramp_down" + tag_suffix)

        # p_avail_t <= pmax u_{t+1} + SD (u_t - u_{t+1})
        if t < T - 1:
            terms = [(pavl[:, t], np.ones(G))]
            rhs = np.zeros(G)
            if u_idx is not None:
                terms.append((ucol(t + 1), -(pp.pmax - pp.sd)))
                terms.append((ucol(t), -pp.sd))
            else:
                rhs += (pp.pmax - pp.sd) * uval(t + 1) + pp.sd * uval(t)
            cb.add(terms, rhs, "shutdown_capability" + tag_suffix)


def _angle_rows(cb, th, pp: _Prep, tag: str):
    """|theta_i - theta_j| <= pi across every line, per snapshot."""
    Tn = th.shape[1]
    for a, b in zip(pp.line_from, pp.line_to):
        cb.add([(th[a], 1.0), (th[b], -1.0)], np.full(Tn, math.pi), tag)
        cb.add([(th[b], 1.0), (th[a], -1.0)], np.full(Tn, math.pi), tag)


# -- AC network block ----------------------------------------------------------


class _NlBuilder:
    """Accumulates nonlinear equality rows: trig terms + linear part + rhs."""

    def __init__(self, nvar):
        self.lin = LinearConstraintBuilder(nvar)
        self.trig_parts: list[dict] = []

    @property
    def n_rows(self):
        return self.lin.n_rows

    def add_rows(self, rhs, tag) -> np.ndarray:
        return self.lin.add([], rhs, tag)

    def set_linear(self, rows, terms):
        """Attach linear terms to already-created rows (vectorized)."""
        for idx, coef in terms:
            idx = np.atleast_1d(np.asarray(idx, dtype=int))
            coef = np.asarray(coef, dtype=float)
            if idx.ndim == 1:
                idx = idx[:, None]
                if coef.ndim == 1:
                    coef = coef[:, None]
            coef = np.broadcast_to(coef, idx.shape)
            rr = np.broadcast_to(np.asarray(rows)[:, None], idx.shape)
            keep = idx >= 0
            self.lin.rows.append(rr[keep])
            self.lin.cols.append(idx[keep])
            self.lin.vals.append(coef[keep])

    def add_trig(self, rows, iva, ivb, itha, ithb, cg, cs):
        n = len(rows)
        self.trig_parts.append(dict(
            row=np.asarray(rows, int), iva=np.asarray(iva, int),
            ivb=np.asarray(ivb, int), itha=np.asarray(itha, int),
            ithb=np.asarray(ithb, int),
            cg=np.broadcast_to(np.asarray(cg, float), (n,)).copy(),
            cs=np.broadcast_to(np.asarray(cs, float), (n,)).copy(),
        ))

    def build(self, nvar):
        a, rhs, tags = self.lin.build()
        if self.trig_parts:
            trig = TrigGroup(
                self.n_rows,
                np.concatenate([p["row"] for p in self.trig_parts]),
                np.concatenate([p["iva"] for p in self.trig_parts]),
                np.concatenate([p["ivb"] for p in self.trig_parts]),
                np.concatenate([p["itha"] for p in self.trig_parts]),
                np.concatenate([p["ithb"] for p in self.trig_parts]),
                np.concatenate([p["cg"] for p in self.trig_parts]),
                np.concatenate([p["cs"] for p in self.trig_parts]),
            )
        else:
            trig = TrigGroup.empty(self.n_rows)
        return trig, a, rhs, tags


def _ac_network_block(nl: _NlBuilder, pp: _Prep, v, th, pf,
                      p_inj_terms, q_inj_terms, p_rhs, q_rhs,
                      pu=None, qse=None, qsh=None, qu=None, tag_suffix=""):
    """AC power balances and line-flow definitions for Tn snapshots.

    ``v``/``th`` are (N, Tn) variable index arrays, ``pf`` is (2E, Tn);
    ``p_inj_terms[i]``/``q_inj_terms[i]`` list (idx (Tn,), coef) injection
    terms at bus i (entering the bus with a + sign); ``p_rhs``/``q_rhs`` are
    (N, Tn) constant net injections (wind forecast minus load, etc.).
    The residual convention is  S(V, th) - injections = rhs_const.
    """
    N, Tn = v.shape
    tr = np.arange(Tn)

    p_rows = nl.add_rows(p_rhs.reshape(-1), "p_balance" + tag_suffix)
    q_rows = nl.add_rows(q_rhs.reshape(-1), "q_balance" + tag_suffix)
    p_rows = p_rows.reshape(N, Tn)
    q_rows = q_rows.reshape(N, Tn)

    nz_i, nz_j = np.nonzero((pp.gbus != 0) | (pp.bbus != 0))
    for i, j in zip(nz_i, nz_j):
        g, b = pp.gbus[i, j], pp.bbus[i, j]
        nl.add_trig(p_rows[i], v[i], v[j], th[i], th[j], g, b)
        nl.add_trig(q_rows[i], v[i], v[j], th[i], th[j], -b, g)

    for i in range(N):
        for idx, coef in p_inj_terms[i]:
            nl.set_linear(p_rows[i], [(idx, -np.asarray(coef, float))])
        for idx, coef in q_inj_terms[i]:
            nl.set_linear(q_rows[i], [(idx, -np.asarray(coef, float))])

    # UPFC power injections: +P at the from bus, -P at the to bus (so that
    # the shift conserves power), series+shunt reactive at the from bus and
    # the equivalent non-control reactive injection at the to bus.
    if pu is not None:
        for k in range(pp.L):
            f, t = pp.upfc_from[k], pp.upfc_to[k]
            nl.set_linear(p_rows[f], [(pu[k], -1.0)])
            nl.set_linear(p_rows[t], [(pu[k], 1.0)])
            nl.set_linear(q_rows[f], [(qse[k], -1.0), (qsh[k], -1.0)])
            nl.set_linear(q_rows[t], [(qu[k], -1.0)])

    # directed line flows: pf = V_a^2 (-G_ab + Gs_a) + V_a V_b (G cos + B sin)
    # minus the UPFC shift on its series line (reverse direction gets +shift)
    f_rows = nl.add_rows(np.zeros(2 * pp.E * Tn), "p_flow_def" + tag_suffix)
    f_rows = f_rows.reshape(2 * pp.E, Tn)
    for e in range(pp.E):
        for d, (a, b) in enumerate([(pp.line_from[e], pp.line_to[e]),
                                    (pp.line_to[e], pp.line_from[e])]):
            rows = f_rows[2 * e + d]
            g, bb = pp.gbus[a, b], pp.bbus[a, b]
            nl.add_trig(rows, v[a], v[a], th[a], th[a], -g, 0.0)
            nl.add_trig(rows, v[a], v[b], th[a], th[b], g, bb)
            nl.set_linear(rows, [(pf[2 * e + d], -1.0)])
            if pu is not None and e in pp.upfc_line:
                k = int(np.nonzero(pp.upfc_line == e)[0][0])
                nl.set_linear(rows, [(pu[k], -1.0 if d == 0 else 1.0)])
    return p_rows, q_rows, f_rows


def _converter_rating_rows(vm, pu, qse, qsh, qu, pp: _Prep, quad_rows, tags,
                           tag_suffix=""):
    """Shunt/series MVA circles plus the joint bound on the equivalent
    reactive injection at the receiving bus."""
    Tn = pu.shape[1]
    for k in range(pp.L):
        quad_rows.append((pu[k], qsh[k], np.full(Tn, pp.tsh[k] ** 2)))
        tags.extend(["upfc_shunt_rating" + tag_suffix] * Tn)
        quad_rows.append((pu[k], qse[k], np.full(Tn, pp.tse[k] ** 2)))
        tags.extend(["upfc_series_rating" + tag_suffix] * Tn)
        quad_rows.append((pu[k], qu[k], np.full(Tn, pp.tse[k] ** 2)))
        tags.extend(["upfc_equiv_rating" + tag_suffix] * Tn)


def _redispatch_rows(cb, first, second, delta, tag):
    """|x_s - x_1| <= delta; delta == 0 collapses to an equality elsewhere."""
    flat_s = second.reshape(-1)
    flat_f = np.broadcast_to(first, second.shape).reshape(-1)
    d = np.broadcast_to(delta[:, None], first.shape)
    d = np.broadcast_to(d, second.shape).reshape(-1)
    cb.add([(flat_s, 1.0), (flat_f, -1.0)], d, tag)
    cb.add([(flat_f, 1.0), (flat_s, -1.0)], d, tag)


def _dc_network_rows(cb, pp: _Prep, th, pf, p_inj_terms, p_rhs, pu,
                     tag_suffix=""):
    """Angle-based bus balances and directed flow definitions."""
    Tn = th.shape[1]
    for i in range(pp.N):
        # bus balance: sum_j (th_i - th_j)/x_ij - injections = rhs
        terms = []
        for e in range(pp.E):
            a, b = pp.line_from[e], pp.line_to[e]
            if i == a:
                terms.append((th[a], 1.0 / pp.line_x[e]))
                terms.append((th[b], -1.0 / pp.line_x[e]))
            elif i == b:
                terms.append((th[b], 1.0 / pp.line_x[e]))
                terms.append((th[a], -1.0 / pp.line_x[e]))
        for idx, coef in p_inj_terms[i]:
            terms.append((idx, -coef))
        if pu is not None:
            for k in range(pp.L):
                if i == pp.upfc_from[k]:
                    terms.append((pu[k], -1.0))
                elif i == pp.upfc_to[k]:
                    terms.append((pu[k], 1.0))
        cb.add(terms, p_rhs[i], "p_balance" + tag_suffix)
    for e in range(pp.E):
        for d, (a, b) in enumerate([(pp.line_from[e], pp.line_to[e]),
                                    (pp.line_to[e], pp.line_from[e])]):
            terms = [(pf[2 * e + d], 1.0), (th[a], -1.0 / pp.line_x[e]),
                     (th[b], 1.0 / pp.line_x[e])]
            if pu is not None and e in pp.upfc_line:
                k = int(np.nonzero(pp.upfc_line == e)[0][0])
                terms.append((pu[k], 1.0 if d == 0 else -1.0))
            cb.add(terms, np.zeros(Tn), "p_flow_def" + tag_suffix)


def _fuel_link_rows(cb, pp: _Prep, pg, seg_idx, u_idx, u_val, n_segments,
                    tag):
    """pg = pmin u + sum_k segment_k (u fixed data when u_idx is None)."""
    G, T = pg.shape
    rhs = np.zeros(G * T)
    flat_terms = [(pg.reshape(-1), 1.0)]
    if u_idx is not None:
        flat_terms.append((u_idx.reshape(-1), -np.repeat(pp.pmin, T)))
    else:
        rhs += (pp.pmin[:, None] * u_val).reshape(-1)
    segs = seg_idx.transpose(0, 2, 1).reshape(G * T, n_segments)
    flat_terms.append((segs, -1.0))
    cb.add(flat_terms, rhs, tag)


def _fuel_pwl(pp: _Prep, n_seg: int):
    """Segment slopes ($/p.u.) and fixed-at-minimum cost ($) per unit."""
    base = pp.case.mva_base
    widths = (pp.pmax - pp.pmin) / n_seg  # p.u.
    slopes = np.zeros((pp.G, n_seg))
    for g in range(pp.G):
        pts = (pp.pmin[g] + widths[g] * np.arange(n_seg + 1)) * base  # MW
        cost = pp.price[g] * (pp.fa[g] + pp.fb[g] * pts + pp.fc[g] * pts**2)
        slopes[g] = np.diff(cost) / widths[g] if widths[g] > 0 else 0.0
    pmin_mw = pp.pmin * base
    fixed = pp.price * (pp.fa + pp.fb * pmin_mw + pp.fc * pmin_mw**2)
    return widths, slopes, fixed


# -- main builders -------------------------------------------------------------


def _check_inputs(case, scenarios, cfg):
    if cfg.two_stage:
        if scenarios is None or len(scenarios) == 0:
            raise ValueError(f"strategy {cfg.strategy} needs scenarios")
    if case.upfc_devices == [] and cfg.upfc_installed:
        raise ValueError(f"strategy {cfg.strategy} needs a UPFC in the case")


def build(case: NetworkCase, scenarios: ScenarioSet | None,
          cfg: StrategyConfig) -> ProblemInstance:
    """Assemble the AC instance for a strategy (also the AC leg of MIXED)."""
    _check_inputs(case, scenarios, cfg)
    pp = _Prep(case)
    T, N, G, E, L, W = pp.T, pp.N, pp.G, pp.E, pp.L, pp.W
    S = len(scenarios) if cfg.two_stage else 0
    probs = scenarios.probabilities if cfg.two_stage else np.empty(0)
    pw = pp.scenario_pw(scenarios) if cfg.two_stage else np.empty((0, W, T))
    v_min, v_max = cfg.v_limits(case)
    base = case.mva_base

    vm = VariableMap()
    u = vm.add("commit", (G, T), 0.0, 1.0)
    w = vm.add("transition_cost", (G, T), 0.0, np.inf)
    pg1 = vm.add("p_gen_1", (G, T), 0.0, np.repeat(pp.pmax, T).reshape(G, T))
    qg1 = vm.add("q_gen_1", (G, T),
                 np.repeat(np.minimum(pp.qmin, 0), T).reshape(G, T),
                 np.repeat(np.maximum(pp.qmax, 0), T).reshape(G, T))
    pavl1 = vm.add("p_avail_1", (G, T), 0.0,
                   np.repeat(pp.pmax, T).reshape(G, T))
    v1 = vm.add("v_mag_1", (N, T), v_min, v_max)
    th1 = vm.add("v_ang_1", (N, T))
    cap2 = np.repeat(pp.line_cap, 2)[:, None] * np.ones(T)
    pf1 = vm.add("p_flow_1", (2 * E, T), -cap2, cap2)

    s1 = cfg.upfc_first_stage
    pu1 = vm.add("upfc_p_1", (L, T),
                 -pp.pdc[:, None] if s1 else 0.0,
                 pp.pdc[:, None] if s1 else 0.0)
    qse1 = vm.add("upfc_q_se_1", (L, T),
                  -pp.tse[:, None] if s1 else 0.0,
                  pp.tse[:, None] if s1 else 0.0)
    qsh1 = vm.add("upfc_q_sh_1", (L, T),
                  -pp.tsh[:, None] if s1 else 0.0,
                  pp.tsh[:, None] if s1 else 0.0)
    qu1 = vm.add("upfc_q_eq_1", (L, T),
                 -pp.tse[:, None] if s1 else 0.0,
                 pp.tse[:, None] if s1 else 0.0)

    if cfg.two_stage:
        s2 = cfg.upfc_second_stage
        pg2 = vm.add("p_gen_2", (S, G, T), 0.0,
                     np.broadcast_to(pp.pmax[:, None], (S, G, T)))
        qg2 = vm.add("q_gen_2", (S, G, T),
                     np.broadcast_to(np.minimum(pp.qmin, 0)[:, None], (S, G, T)),
                     np.broadcast_to(np.maximum(pp.qmax, 0)[:, None], (S, G, T)))
        pavl2 = vm.add("p_avail_2", (S, G, T), 0.0,
                       np.broadcast_to(pp.pmax[:, None], (S, G, T)))
        v2 = vm.add("v_mag_2", (S, N, T), v_min, v_max)
        th2 = vm.add("v_ang_2", (S, N, T))
        pf2 = vm.add("p_flow_2", (S, 2 * E, T),
                     -np.broadcast_to(np.repeat(pp.line_cap, 2)[:, None],
                                      (S, 2 * E, T)),
                     np.broadcast_to(np.repeat(pp.line_cap, 2)[:, None],
                                     (S, 2 * E, T)))
        pu2 = vm.add("upfc_p_2", (S, L, T),
                     np.broadcast_to((-pp.pdc if s2 else 0 * pp.pdc)[:, None],
                                     (S, L, T)),
                     np.broadcast_to((pp.pdc if s2 else 0 * pp.pdc)[:, None],
                                     (S, L, T)))
        qse2 = vm.add("upfc_q_se_2", (S, L, T),
                      np.broadcast_to((-pp.tse if s2 else 0 * pp.tse)[:, None],
                                      (S, L, T)),
                      np.broadcast_to((pp.tse if s2 else 0 * pp.tse)[:, None],
                                      (S, L, T)))
        qsh2 = vm.add("upfc_q_sh_2", (S, L, T),
                      np.broadcast_to((-pp.tsh if s2 else 0 * pp.tsh)[:, None],
                                      (S, L, T)),
                      np.broadcast_to((pp.tsh if s2 else 0 * pp.tsh)[:, None],
                                      (S, L, T)))
        qu2 = vm.add("upfc_q_eq_2", (S, L, T),
                     np.broadcast_to((-pp.tse if s2 else 0 * pp.tse)[:, None],
                                     (S, L, T)),
                     np.broadcast_to((pp.tse if s2 else 0 * pp.tse)[:, None],
                                     (S, L, T)))
        pwc = vm.add("wind_curt", (S, W, T), 0.0, pw)
        qwc = vm.add("wind_curt_q", (S, W, T), 0.0,
                     pw * pp.tanphi[None, :, None])
        pls = vm.add("load_shed", (S, pp.NL, T), 0.0,
                     np.broadcast_to(pp.pl[pp.load_bus], (S, pp.NL, T)))

    lb, ub = vm.bounds()
    nvar = vm.n

    # reference angle
    lb[th1[pp.ref]] = ub[th1[pp.ref]] = 0.0
    if cfg.two_stage:
        lb[th2[:, pp.ref, :]] = ub[th2[:, pp.ref, :]] = 0.0

    integrality = np.zeros(nvar, dtype=bool)
    integrality[u.reshape(-1)] = True

    # objective
    c = np.zeros(nvar)
    qdiag = np.zeros(nvar)
    c[w.reshape(-1)] = 1.0
    c[u.reshape(-1)] += np.repeat(pp.price * pp.fa, T)  # no-load fuel
    if cfg.two_stage:
        for s in range(S):
            c[pg2[s].reshape(-1)] = probs[s] * np.repeat(pp.price * pp.fb * base, T)
            qdiag[pg2[s].reshape(-1)] = (
                2.0 * probs[s] * np.repeat(pp.price * pp.fc * base**2, T))
            c[pwc[s].reshape(-1)] = probs[s] * case.price_curtailment * base
            c[pls[s].reshape(-1)] = probs[s] * case.price_shedding * base
    else:
        c[pg1.reshape(-1)] = np.repeat(pp.price * pp.fb * base, T)
        qdiag[pg1.reshape(-1)] = 2.0 * np.repeat(pp.price * pp.fc * base**2, T)

    # linear constraints
    cb_ub = LinearConstraintBuilder(nvar)
    cb_eq = LinearConstraintBuilder(nvar)
    nl = _NlBuilder(nvar)

    _transition_cost_rows(cb_ub, u, w, pp)
    _min_up_down_rows(cb_ub, u, lb, ub, pp)
    _gen_limit_rows(cb_ub, pg1, pavl1, qg1, u, None, pp, "_1")
    _ramp_rows(cb_ub, pg1, pavl1, u, None, pp, "_1")
    _angle_rows(cb_ub, th1, pp, "angle_spread_1")

    # first-stage reserve: sum p_avail + wind forecast >= load + reserve
    cb_ub.add([(pavl1.reshape(G, T).T, -1.0)],
              pp.pwf.sum(axis=0) - pp.pl.sum(axis=0) - pp.reserve, "reserve_1")

    # first-stage balances
    p_inj = [[] for _ in range(N)]
    q_inj = [[] for _ in range(N)]
    for g in range(G):
        p_inj[pp.gen_bus[g]].append((pg1[g], 1.0))
        q_inj[pp.gen_bus[g]].append((qg1[g], 1.0))
    p_rhs = -pp.pl.copy()
    q_rhs = -pp.ql.copy()
    for k in range(W):
        p_rhs[pp.wind_bus[k]] += pp.pwf[k]
        q_rhs[pp.wind_bus[k]] -= pp.qwf[k]  # wind farm consumes reactive power
    _ac_network_block(nl, pp, v1, th1, pf1, p_inj, q_inj, p_rhs, q_rhs,
                      pu1, qse1, qsh1, qu1, "_1")

    quad_rows, quad_tags = [], []
    if cfg.upfc_installed:
        _converter_rating_rows(vm, pu1, qse1, qsh1, qu1, pp, quad_rows,
                               quad_tags, "_1")

    if cfg.two_stage:
        for s in range(S):
            _gen_limit_rows(cb_ub, pg2[s], pavl2[s], qg2[s], u, None, pp, "_2")
            _ramp_rows(cb_ub, pg2[s], pavl2[s], u, None, pp, "_2")
            _angle_rows(cb_ub, th2[s], pp, "angle_spread_2")
            # scenario reserve with curtailment and shedding as printed
            cb_ub.add([(pavl2[s].T, -1.0), (pwc[s].T, 1.0), (pls[s].T, -1.0)],
                      pw[s].sum(axis=0) - pp.pl.sum(axis=0) - pp.reserve,
                      "reserve_2")
            # constant-power-factor coupling of curtailed wind
            cb_eq.add([(qwc[s].reshape(-1), 1.0),
                       (pwc[s].reshape(-1), -np.repeat(pp.tanphi, T))],
                      np.zeros(W * T), "wind_curt_power_factor")

            p_inj = [[] for _ in range(N)]
            q_inj = [[] for _ in range(N)]
            for g in range(G):
                p_inj[pp.gen_bus[g]].append((pg2[s, g], 1.0))
                q_inj[pp.gen_bus[g]].append((qg2[s, g], 1.0))
            for k in range(W):
                p_inj[pp.wind_bus[k]].append((pwc[s, k], -1.0))
                q_inj[pp.wind_bus[k]].append((qwc[s, k], 1.0))
            for i, bidx in enumerate(pp.load_bus):
                p_inj[bidx].append((pls[s, i], 1.0))
            p_rhs = -pp.pl.copy()
            q_rhs = -pp.ql.copy()
            for k in range(W):
                p_rhs[pp.wind_bus[k]] += pw[s, k]
                q_rhs[pp.wind_bus[k]] -= pw[s, k] * pp.tanphi[k]
            _ac_network_block(nl, pp, v2[s], th2[s], pf2[s], p_inj, q_inj,
                              p_rhs, q_rhs, pu2[s], qse2[s], qsh2[s], qu2[s],
                              "_2")
            if cfg.upfc_installed:
                _converter_rating_rows(vm, pu2[s], qse2[s], qsh2[s], qu2[s],
                                       pp, quad_rows, quad_tags, "_2")

        # re-dispatch coupling between the stages
        if cfg.upfc_installed:
            if cfg.strategy == "FSM":
                # zero margins collapse to equalities
                for pairs, tag in [((pu2, pu1), "upfc_redispatch_p"),
                                   ((qse2, qse1), "upfc_redispatch_q_se"),
                                   ((qsh2, qsh1), "upfc_redispatch_q_sh")]:
                    second, first = pairs
                    cb_eq.add([(second.reshape(-1), 1.0),
                               (np.broadcast_to(first, second.shape)
                                .reshape(-1), -1.0)],
                              np.zeros(second.size), tag)
            elif cfg.strategy == "FSSM":
                _redispatch_rows(cb_ub, pu1, pu2, pp.dp, "upfc_redispatch_p")
                _redispatch_rows(cb_ub, qse1, qse2, pp.dqse,
                                 "upfc_redispatch_q_se")
                _redispatch_rows(cb_ub, qsh1, qsh2, pp.dqsh,
                                 "upfc_redispatch_q_sh")
            # NM: everything pinned to zero; SSM: stage-1 setpoints are zero
            # and the margins exceed the ratings, so no rows are needed.

    A_ub, b_ub_vec, ub_tags = cb_ub.build()
    A_eq, b_eq_vec, eq_tags = cb_eq.build()
    trig, A_nl, b_nl, nl_tags = nl.build(nvar)

    if quad_rows:
        quad = QuadIneqGroup(
            np.concatenate([np.asarray(r[0]) for r in quad_rows]),
            np.concatenate([np.asarray(r[1]) for r in quad_rows]),
            np.concatenate([r[2] for r in quad_rows]),
        )
    else:
        quad = None

    inst = ProblemInstance(
        vm=vm, lb=lb, ub=ub, integrality=integrality,
        c0=0.0, c=c, qdiag=qdiag,
        A_eq=A_eq, b_eq=b_eq_vec, eq_tags=eq_tags,
        A_ub=A_ub, b_ub=b_ub_vec, ub_tags=ub_tags,
        trig=trig, A_nl=A_nl, b_nl=b_nl, nl_tags=nl_tags,
        quad=quad, quad_tags=quad_tags,
        meta=dict(case=case, cfg=cfg, probs=probs, variant="AC",
                  scenarios=scenarios, n_units=G, horizon=T),
    )
    _audit_symbols(inst, cfg, ac=True)
    return inst


def build_dc(case: NetworkCase, scenarios: ScenarioSet | None,
             cfg: StrategyConfig,
             n_segments: int = DC_FUEL_SEGMENTS) -> ProblemInstance:
    """Assemble the linear (angle-flow) instance; a MILP once integrality
    on the commitment is enforced."""
    _check_inputs(case, scenarios, cfg)
    pp = _Prep(case)
    T, N, G, E, L, W = pp.T, pp.N, pp.G, pp.E, pp.L, pp.W
    S = len(scenarios) if cfg.two_stage else 0
    probs = scenarios.probabilities if cfg.two_stage else np.empty(0)
    pw = pp.scenario_pw(scenarios) if cfg.two_stage else np.empty((0, W, T))
    base = case.mva_base
    widths, slopes, fixed = _fuel_pwl(pp, n_segments)

    vm = VariableMap()
    u = vm.add("commit", (G, T), 0.0, 1.0)
    w = vm.add("transition_cost", (G, T), 0.0, np.inf)
    pg1 = vm.add("p_gen_1", (G, T), 0.0, np.repeat(pp.pmax, T).reshape(G, T))
    pavl1 = vm.add("p_avail_1", (G, T), 0.0,
                   np.repeat(pp.pmax, T).reshape(G, T))
    th1 = vm.add("v_ang_1", (N, T))
    pf1 = vm.add("p_flow_1", (2 * E, T),
                 -np.repeat(pp.line_cap, 2)[:, None] * np.ones(T),
                 np.repeat(pp.line_cap, 2)[:, None] * np.ones(T))
    s1 = cfg.upfc_first_stage
    pu1 = vm.add("upfc_p_1", (L, T),
                 -pp.pdc[:, None] if s1 else 0.0,
                 pp.pdc[:, None] if s1 else 0.0)
    if cfg.two_stage:
        s2 = cfg.upfc_second_stage
        pg2 = vm.add("p_gen_2", (S, G, T), 0.0,
                     np.broadcast_to(pp.pmax[:, None], (S, G, T)))
        pavl2 = vm.add("p_avail_2", (S, G, T), 0.0,
                       np.broadcast_to(pp.pmax[:, None], (S, G, T)))
        th2 = vm.add("v_ang_2", (S, N, T))
        pf2 = vm.add("p_flow_2", (S, 2 * E, T),
                     -np.broadcast_to(np.repeat(pp.line_cap, 2)[:, None],
                                      (S, 2 * E, T)),
                     np.broadcast_to(np.repeat(pp.line_cap, 2)[:, None],
                                     (S, 2 * E, T)))
        pu2 = vm.add("upfc_p_2", (S, L, T),
                     np.broadcast_to((-pp.pdc if s2 else 0 * pp.pdc)[:, None],
                                     (S, L, T)),
                     np.broadcast_to((pp.pdc if s2 else 0 * pp.pdc)[:, None],
                                     (S, L, T)))
        pwc = vm.add("wind_curt", (S, W, T), 0.0, pw)
        pls = vm.add("load_shed", (S, pp.NL, T), 0.0,
                     np.broadcast_to(pp.pl[pp.load_bus], (S, pp.NL, T)))
        seg = vm.add("fuel_segment", (S, G, n_segments, T), 0.0,
                     np.broadcast_to(widths[:, None, None], (S, G, n_segments, T)))
    else:
        seg = vm.add("fuel_segment", (G, n_segments, T), 0.0,
                     np.broadcast_to(widths[:, None, None], (G, n_segments, T)))

    lb, ub = vm.bounds()
    nvar = vm.n
    lb[th1[pp.ref]] = ub[th1[pp.ref]] = 0.0
    if cfg.two_stage:
        lb[th2[:, pp.ref, :]] = ub[th2[:, pp.ref, :]] = 0.0

    integrality = np.zeros(nvar, dtype=bool)
    integrality[u.reshape(-1)] = True

    c = np.zeros(nvar)
    c[w.reshape(-1)] = 1.0
    c[u.reshape(-1)] += np.repeat(fixed, T)  # cost of running at minimum
    if cfg.two_stage:
        for s in range(S):
            c[seg[s].reshape(-1)] = probs[s] * np.repeat(slopes.reshape(-1), T)
            c[pwc[s].reshape(-1)] = probs[s] * case.price_curtailment * base
            c[pls[s].reshape(-1)] = probs[s] * case.price_shedding * base
    else:
        c[seg.reshape(-1)] = np.repeat(slopes.reshape(-1), T)

    cb_ub = LinearConstraintBuilder(nvar)
    cb_eq = LinearConstraintBuilder(nvar)

    _transition_cost_rows(cb_ub, u, w, pp)
    _min_up_down_rows(cb_ub, u, lb, ub, pp)
    _gen_limit_rows(cb_ub, pg1, pavl1, None, u, None, pp, "_1")
    _ramp_rows(cb_ub, pg1, pavl1, u, None, pp, "_1")
    cb_ub.add([(pavl1.T, -1.0)],
              pp.pwf.sum(axis=0) - pp.pl.sum(axis=0) - pp.reserve, "reserve_1")

    def dc_network(cb, th, pf, p_inj_terms, p_rhs, pu, tag_suffix):
        _dc_network_rows(cb, pp, th, pf, p_inj_terms, p_rhs, pu, tag_suffix)

    def fuel_link(cb, pg, seg_idx, u_idx, tag):
        _fuel_link_rows(cb, pp, pg, seg_idx, u_idx, None, n_segments, tag)

    p_inj = [[] for _ in range(N)]
    for g in range(G):
        p_inj[pp.gen_bus[g]].append((pg1[g], 1.0))
    p_rhs = -pp.pl.copy()
    for k in range(W):
        p_rhs[pp.wind_bus[k]] += pp.pwf[k]
    dc_network(cb_eq, th1, pf1, p_inj, p_rhs, pu1, "_1")

    if cfg.two_stage:
        for s in range(S):
            _gen_limit_rows(cb_ub, pg2[s], pavl2[s], None, u, None, pp, "_2")
            _ramp_rows(cb_ub, pg2[s], pavl2[s], u, None, pp, "_2")
            cb_ub.add([(pavl2[s].T, -1.0), (pwc[s].T, 1.0), (pls[s].T, -1.0)],
                      pw[s].sum(axis=0) - pp.pl.sum(axis=0) - pp.reserve,
                      "reserve_2")
            fuel_link(cb_eq, pg2[s], seg[s], u, "fuel_segment_link")
            p_inj = [[] for _ in range(N)]
            for g in range(G):
                p_inj[pp.gen_bus[g]].append((pg2[s, g], 1.0))
            for k in range(W):
                p_inj[pp.wind_bus[k]].append((pwc[s, k], -1.0))
            for i, bidx in enumerate(pp.load_bus):
                p_inj[bidx].append((pls[s, i], 1.0))
            p_rhs = -pp.pl.copy()
            for k in range(W):
                p_rhs[pp.wind_bus[k]] += pw[s, k]
            dc_network(cb_eq, th2[s], pf2[s], p_inj, p_rhs, pu2[s], "_2")
        if cfg.upfc_installed:
            if cfg.strategy == "FSM":
                cb_eq.add([(pu2.reshape(-1), 1.0),
                           (np.broadcast_to(pu1, pu2.shape).reshape(-1), -1.0)],
                          np.zeros(pu2.size), "upfc_redispatch_p")
            elif cfg.strategy == "FSSM":
                _redispatch_rows(cb_ub, pu1, pu2, pp.dp, "upfc_redispatch_p")
    else:
        fuel_link(cb_eq, pg1, seg, u, "fuel_segment_link")

    A_ub, b_ub_vec, ub_tags = cb_ub.build()
    A_eq, b_eq_vec, eq_tags = cb_eq.build()

    inst = ProblemInstance(
        vm=vm, lb=lb, ub=ub, integrality=integrality,
        c0=0.0, c=c, qdiag=np.zeros(nvar),
        A_eq=A_eq, b_eq=b_eq_vec, eq_tags=eq_tags,
        A_ub=A_ub, b_ub=b_ub_vec, ub_tags=ub_tags,
        meta=dict(case=case, cfg=cfg, probs=probs, variant="DC",
                  scenarios=scenarios, n_units=G, horizon=T,
                  pwl=(widths, slopes, fixed)),
    )
    _audit_symbols(inst, cfg, ac=False)
    return inst


def _dispatch_upfc_bounds(pp: _Prep, cfg: StrategyConfig, setpoints, name,
                          delta, rating):
    """(lb, ub) arrays (L, T) for one UPFC control in a dispatch problem.

    DM/NM pin to zero; NOM/FSM freeze at the committed setpoint; SSM allows
    a band around zero and FSSM a band around the setpoint, both clipped to
    the converter rating.
    """
    T = pp.T
    if not cfg.upfc_installed:
        z = np.zeros((pp.L, T))
        return z, z.copy()
    center = np.zeros((pp.L, T))
    if cfg.strategy in ("NOM", "FSM", "FSSM"):
        center = np.asarray(setpoints[name], dtype=float) / pp.case.mva_base
    if cfg.strategy in ("NOM", "FSM"):
        return center.copy(), center.copy()
    band = delta[:, None] * np.ones(T)
    cap = rating[:, None] * np.ones(T)
    return np.maximum(center - band, -cap), np.minimum(center + band, cap)


def build_dispatch(case: NetworkCase, cfg: StrategyConfig, u: np.ndarray,
                   wind_mw: np.ndarray, setpoints: dict | None = None,
                   n_segments: int = DC_FUEL_SEGMENTS) -> ProblemInstance:
    """Single-trajectory economic dispatch under a fixed schedule.

    ``u`` is a 0/1 (n_units, horizon) schedule entering as data, ``wind_mw``
    a (n_wind, horizon) realized wind trajectory in MW, and ``setpoints`` the
    committed UPFC controls in MW/MVar (required for NOM/FSM/FSSM).  The
    variant in ``cfg`` picks AC or DC physics; the strategy decides how far
    the UPFC may move, purely through variable bounds.
    """
    pp = _Prep(case)
    T, N, G, E, L, W = pp.T, pp.N, pp.G, pp.E, pp.L, pp.W
    base = case.mva_base
    ac = cfg.variant != "DC"
    u = np.asarray(u, dtype=float)
    if u.shape != (G, T):
        raise ValueError(f"schedule shape {u.shape} != {(G, T)}")
    pw = np.asarray(wind_mw, dtype=float) / base
    if pw.shape != (W, T):
        raise ValueError(f"wind shape {pw.shape} != {(W, T)}")
    if cfg.upfc_first_stage and setpoints is None:
        raise ValueError(f"strategy {cfg.strategy} needs UPFC setpoints")
    v_min, v_max = cfg.v_limits(case)

    vm = VariableMap()
    pg = vm.add("p_gen", (G, T), 0.0, np.repeat(pp.pmax, T).reshape(G, T))
    pavl = vm.add("p_avail", (G, T), 0.0,
                  np.repeat(pp.pmax, T).reshape(G, T))
    th = vm.add("v_ang", (N, T))
    cap2 = np.repeat(pp.line_cap, 2)[:, None] * np.ones(T)
    pf = vm.add("p_flow", (2 * E, T), -cap2, cap2)
    pu_lb, pu_ub = _dispatch_upfc_bounds(pp, cfg, setpoints, "upfc_p",
                                         pp.dp, pp.pdc)
    pu = vm.add("upfc_p", (L, T), pu_lb, pu_ub)
    if ac:
        qg = vm.add("q_gen", (G, T),
                    np.repeat(np.minimum(pp.qmin, 0), T).reshape(G, T),
                    np.repeat(np.maximum(pp.qmax, 0), T).reshape(G, T))
        v = vm.add("v_mag", (N, T), v_min, v_max)
        qse_lb, qse_ub = _dispatch_upfc_bounds(pp, cfg, setpoints,
                                               "upfc_q_se", pp.dqse, pp.tse)
        qse = vm.add("upfc_q_se", (L, T), qse_lb, qse_ub)
        qsh_lb, qsh_ub = _dispatch_upfc_bounds(pp, cfg, setpoints,
                                               "upfc_q_sh", pp.dqsh, pp.tsh)
        qsh = vm.add("upfc_q_sh", (L, T), qsh_lb, qsh_ub)
        # the equivalent reactive injection is not a control: rating-bound
        # for every strategy with the device installed
        cap_qu = pp.tse[:, None] * np.ones(T) if cfg.upfc_installed else 0.0
        qu = vm.add("upfc_q_eq", (L, T),
                    -cap_qu if cfg.upfc_installed else 0.0, cap_qu)
    pwc = vm.add("wind_curt", (W, T), 0.0, pw)
    if ac:
        qwc = vm.add("wind_curt_q", (W, T), 0.0, pw * pp.tanphi[:, None])
    pls = vm.add("load_shed", (pp.NL, T), 0.0, pp.pl[pp.load_bus])
    if not ac:
        widths, slopes, fixed = _fuel_pwl(pp, n_segments)
        seg = vm.add("fuel_segment", (G, n_segments, T), 0.0,
                     np.broadcast_to(widths[:, None, None],
                                     (G, n_segments, T)))

    lb, ub = vm.bounds()
    nvar = vm.n
    lb[th[pp.ref]] = ub[th[pp.ref]] = 0.0

    c = np.zeros(nvar)
    qdiag = np.zeros(nvar)
    if ac:
        c[pg.reshape(-1)] = np.repeat(pp.price * pp.fb * base, T)
        qdiag[pg.reshape(-1)] = 2.0 * np.repeat(pp.price * pp.fc * base**2, T)
        c0 = float((pp.price * pp.fa) @ u.sum(axis=1))  # no-load fuel
    else:
        c[seg.reshape(-1)] = np.repeat(slopes.reshape(-1), T)
        c0 = float(fixed @ u.sum(axis=1))
    c[pwc.reshape(-1)] = case.price_curtailment * base
    c[pls.reshape(-1)] = case.price_shedding * base

    cb_ub = LinearConstraintBuilder(nvar)
    cb_eq = LinearConstraintBuilder(nvar)

    _gen_limit_rows(cb_ub, pg, pavl, qg if ac else None, None, u, pp)
    _ramp_rows(cb_ub, pg, pavl, None, u, pp)
    _angle_rows(cb_ub, th, pp, "angle_spread")
    cb_ub.add([(pavl.T, -1.0), (pwc.T, 1.0), (pls.T, -1.0)],
              pw.sum(axis=0) - pp.pl.sum(axis=0) - pp.reserve, "reserve")

    p_inj = [[] for _ in range(N)]
    q_inj = [[] for _ in range(N)]
    for g in range(G):
        p_inj[pp.gen_bus[g]].append((pg[g], 1.0))
        if ac:
            q_inj[pp.gen_bus[g]].append((qg[g], 1.0))
    for k in range(W):
        p_inj[pp.wind_bus[k]].append((pwc[k], -1.0))
        if ac:
            q_inj[pp.wind_bus[k]].append((qwc[k], 1.0))
    for i, bidx in enumerate(pp.load_bus):
        p_inj[bidx].append((pls[i], 1.0))
    p_rhs = -pp.pl.copy()
    q_rhs = -pp.ql.copy()
    for k in range(W):
        p_rhs[pp.wind_bus[k]] += pw[k]
        q_rhs[pp.wind_bus[k]] -= pw[k] * pp.tanphi[k]

    quad_rows, quad_tags = [], []
    if ac:
        nl = _NlBuilder(nvar)
        cb_eq.add([(qwc.reshape(-1), 1.0),
                   (pwc.reshape(-1), -np.repeat(pp.tanphi, T))],
                  np.zeros(W * T), "wind_curt_power_factor")
        _ac_network_block(nl, pp, v, th, pf, p_inj, q_inj, p_rhs, q_rhs,
                          pu, qse, qsh, qu)
        if cfg.upfc_installed:
            _converter_rating_rows(vm, pu, qse, qsh, qu, pp, quad_rows,
                                   quad_tags)
        trig, A_nl, b_nl, nl_tags = nl.build(nvar)
    else:
        _dc_network_rows(cb_eq, pp, th, pf, p_inj, p_rhs, pu)
        _fuel_link_rows(cb_eq, pp, pg, seg, None, u, n_segments,
                        "fuel_segment_link")

    A_ub, b_ub_vec, ub_tags = cb_ub.build()
    A_eq, b_eq_vec, eq_tags = cb_eq.build()

    if quad_rows:
        quad = QuadIneqGroup(
            np.concatenate([np.asarray(r[0]) for r in quad_rows]),
            np.concatenate([np.asarray(r[1]) for r in quad_rows]),
            np.concatenate([r[2] for r in quad_rows]),
        )
    else:
        quad = None

    kwargs = dict(trig=trig, A_nl=A_nl, b_nl=b_nl, nl_tags=nl_tags) if ac \
        else {}
    return ProblemInstance(
        vm=vm, lb=lb, ub=ub, integrality=np.zeros(nvar, dtype=bool),
        c0=c0, c=c, qdiag=qdiag,
        A_eq=A_eq, b_eq=b_eq_vec, eq_tags=eq_tags,
        A_ub=A_ub, b_ub=b_ub_vec, ub_tags=ub_tags,
        quad=quad, quad_tags=quad_tags,
        meta=dict(case=case, cfg=cfg, probs=np.empty(0),
                  variant="AC" if ac else "DC", scenarios=None,
                  n_units=G, horizon=T, u=u, dispatch=True),
        **kwargs,
    )


def fix_commitment(inst: ProblemInstance, u: np.ndarray) -> ProblemInstance:
    """Pin the commitment variables to a 0/1 schedule and drop integrality."""
    u = np.asarray(u, dtype=float)
    idx = inst.vm["commit"]
    if u.shape != idx.shape:
        raise ValueError(f"schedule shape {u.shape} != {idx.shape}")
    lb = inst.lb.copy()
    ub = inst.ub.copy()
    lb[idx.reshape(-1)] = u.reshape(-1)
    ub[idx.reshape(-1)] = u.reshape(-1)
    return replace(inst, lb=lb, ub=ub,
                   integrality=np.zeros(inst.n, dtype=bool))


_FIRST_STAGE_AC = ("commit", "transition_cost", "p_gen_1", "q_gen_1",
                   "p_avail_1", "v_mag_1", "v_ang_1", "p_flow_1", "upfc_p_1",
                   "upfc_q_se_1", "upfc_q_sh_1", "upfc_q_eq_1")
_SECOND_STAGE_AC = ("p_gen_2", "q_gen_2", "p_avail_2", "v_mag_2", "v_ang_2",
                    "p_flow_2", "upfc_p_2", "upfc_q_se_2", "upfc_q_sh_2",
                    "upfc_q_eq_2", "wind_curt", "wind_curt_q", "load_shed")
_FIRST_STAGE_DC = ("commit", "transition_cost", "p_gen_1", "p_avail_1",
                   "v_ang_1", "p_flow_1", "upfc_p_1")
_SECOND_STAGE_DC = ("p_gen_2", "p_avail_2", "v_ang_2", "p_flow_2", "upfc_p_2",
                    "wind_curt", "load_shed")


def _audit_symbols(inst: ProblemInstance, cfg: StrategyConfig, ac: bool):
    """Every decision symbol of the model maps to exactly one variable block."""
    expected = set(_FIRST_STAGE_AC if ac else _FIRST_STAGE_DC)
    if cfg.two_stage:
        expected |= set(_SECOND_STAGE_AC if ac else _SECOND_STAGE_DC)
    if not ac:
        expected.add("fuel_segment")
    present = set(inst.vm.names)
    missing = expected - present
    extra = present - expected
    assert not missing and not extra, (missing, extra)
