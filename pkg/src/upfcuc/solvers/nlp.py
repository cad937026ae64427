"""Primal-dual interior-point solver for the AC instances.

Inequalities get slacks, bounds get log barriers, and the symmetric
primal-dual KKT system is factorized sparsely each iteration.  Globalization
is a filter line search with a fraction-to-boundary rule; non-convexity and
rank deficiency are handled by a primal/dual regularization ladder.  Variables
with equal bounds are eliminated up front (their columns are dropped from
every derivative).  ``certify_infeasibility`` solves the elastic companion
problem (equalities relaxed by signed violation variables, minimizing total
violation) to tell genuinely infeasible instances from solver failures.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..formulation.instance import ProblemInstance
from .common import SolveOptions, SolveReport, Trace

# barrier/filter constants
MU0 = 0.1
KAPPA_EPS = 10.0
KAPPA_MU = 0.2
THETA_MU = 1.5
GAMMA_THETA = 1e-5
GAMMA_PHI = 1e-5
ETA_PHI = 1e-4
S_THETA = 1.1
S_PHI = 2.3
DELTA_LS = 1.0
KAPPA_SIGMA = 1e10
REG_LADDER = (0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4)
DUAL_REG = 1e-8


class _Reduced:
    """View of an instance with fixed (lb == ub) variables eliminated."""

    def __init__(self, inst: ProblemInstance, fix_tol: float = 0.0):
        self.inst = inst
        fixed = inst.ub - inst.lb <= fix_tol
        self.free = np.nonzero(~fixed)[0]
        self.x_full = np.where(fixed, inst.lb, 0.0)
        self.lb = inst.lb[self.free]
        self.ub = inst.ub[self.free]
        self.n = len(self.free)

    def full(self, x):
        out = self.x_full.copy()
        out[self.free] = x
        return out

    def objective(self, x):
        return self.inst.objective(self.full(x))

    def grad(self, x):
        return self.inst.objective_grad(self.full(x))[self.free]

    def c_eq(self, x):
        return self.inst.eq_residual(self.full(x))

    def c_in(self, x):
        return self.inst.ineq_residual(self.full(x))

    def j_eq(self, x):
        return self.inst.eq_jacobian(self.full(x)).tocsc()[:, self.free].tocsr()

    def j_in(self, x):
        return self.inst.ineq_jacobian(self.full(x)).tocsc()[:, self.free].tocsr()

    def hess(self, x, y_eq, y_in):
        h = self.inst.lagrangian_hessian(self.full(x), y_eq, y_in)
        return h.tocsc()[:, self.free].tocsr()[self.free].tocsc()


def _interior(x, lb, ub, kappa1=1e-2, kappa2=1e-2):
    """Push a start point strictly inside its bounds."""
    pl = np.where(np.isfinite(lb), kappa1 * np.maximum(1.0, np.abs(lb)), 0.0)
    pu = np.where(np.isfinite(ub), kappa1 * np.maximum(1.0, np.abs(ub)), 0.0)
    width = ub - lb
    both = np.isfinite(lb) & np.isfinite(ub)
    pl = np.where(both, np.minimum(pl, kappa2 * width), pl)
    pu = np.where(both, np.minimum(pu, kappa2 * width), pu)
    return np.clip(x, lb + pl, ub - pu)


def solve_nlp(inst: ProblemInstance, options: SolveOptions | None = None,
              x0: np.ndarray | None = None) -> SolveReport:
    options = options or SolveOptions()
    trace = Trace(options.trace_path, "nlp")
    t0 = time.perf_counter()
    red = _Reduced(inst)
    n, m_eq, m_in = red.n, inst.n_eq, inst.n_ineq
    lb, ub = red.lb, red.ub
    has_lb = np.isfinite(lb)
    has_ub = np.isfinite(ub)

    if x0 is not None:
        x = x0[red.free].copy()
    else:
        x = np.zeros(red.n)
        both = has_lb & has_ub
        x[both] = 0.5 * (lb[both] + ub[both])
        x[has_lb & ~both] = lb[has_lb & ~both]
        x[has_ub & ~both] = ub[has_ub & ~both]
    x = _interior(x, lb, ub)
    s = np.maximum(-red.c_in(x), 1e-2) if m_in else np.empty(0)
    y_eq = np.zeros(m_eq)
    y_in = np.zeros(m_in)
    z_l = np.where(has_lb, 1.0, 0.0)
    z_u = np.where(has_ub, 1.0, 0.0)
    z_s = np.ones(m_in)

    mu = MU0
    theta0 = None
    filt: list[tuple[float, float]] = []
    delta_last = 0.0
    ls_failures = 0

    def barrier(xv, sv):
        out = red.objective(xv)
        out -= mu * np.log(np.where(has_lb, xv - lb, 1.0)).sum()
        out -= mu * np.log(np.where(has_ub, ub - xv, 1.0)).sum()
        if m_in:
            out -= mu * np.log(sv).sum()
        return out

    def infeas(c_e, c_i, sv):
        return (np.abs(c_e).sum() if m_eq else 0.0) + (
            np.abs(c_i + sv).sum() if m_in else 0.0)

    for it in range(options.max_iterations):
        if time.perf_counter() - t0 > options.time_limit:
            return SolveReport(status="limit", x=red.full(x),
                               objective=red.objective(x), iterations=it,
                               runtime=time.perf_counter() - t0)
        g = red.grad(x)
        c_e = red.c_eq(x)
        c_i = red.c_in(x)
        je = red.j_eq(x)
        ji = red.j_in(x)
        dl = np.where(has_lb, x - lb, 1.0)
        du = np.where(has_ub, ub - x, 1.0)

        r_x = g + (je.T @ y_eq if m_eq else 0.0) + \
            (ji.T @ y_in if m_in else 0.0) - z_l + z_u
        r_s = y_in - z_s
        comp_l = np.where(has_lb, dl * z_l, 0.0)
        comp_u = np.where(has_ub, du * z_u, 0.0)
        comp_s = s * z_s

        n_dual = max(1, m_eq + m_in + has_lb.sum() + has_ub.sum() + m_in)
        s_d = max(100.0, (np.abs(y_eq).sum() + np.abs(y_in).sum()
                          + z_l.sum() + z_u.sum() + z_s.sum()) / n_dual) / 100.0
        n_comp = max(1, has_lb.sum() + has_ub.sum() + m_in)
        s_c = max(100.0, (z_l.sum() + z_u.sum() + z_s.sum()) / n_comp) / 100.0

        def kkt_error(mu_val):
            parts = [np.abs(r_x).max(initial=0.0) / s_d,
                     np.abs(r_s).max(initial=0.0) / s_d if m_in else 0.0,
                     np.abs(c_e).max(initial=0.0) if m_eq else 0.0,
                     np.abs(c_i + s).max(initial=0.0) if m_in else 0.0,
                     np.abs(comp_l - mu_val * has_lb).max(initial=0.0) / s_c,
                     np.abs(comp_u - mu_val * has_ub).max(initial=0.0) / s_c,
                     np.abs(comp_s - mu_val).max(initial=0.0) / s_c
                     if m_in else 0.0]
            return max(parts)

        err0 = kkt_error(0.0)
        trace.log("iter", f"it={it} mu={mu:.2e} err={err0:.3e} "
                          f"theta={infeas(c_e, c_i, s):.3e}")
        if err0 <= options.nlp_kkt_tol:
            return SolveReport(
                status="locally_optimal", x=red.full(x),
                objective=red.objective(x),
                iterations=it, runtime=time.perf_counter() - t0,
                kkt_error=err0)
        while kkt_error(mu) <= KAPPA_EPS * mu and mu > options.nlp_kkt_tol / 20:
            mu = max(options.nlp_kkt_tol / 20, min(KAPPA_MU * mu, mu ** THETA_MU))
            filt.clear()

        sigma_l = np.where(has_lb, z_l / dl, 0.0)
        sigma_u = np.where(has_ub, z_u / du, 0.0)
        w = red.hess(x, y_eq, y_in)

        rhs_x = -(g + (je.T @ y_eq if m_eq else 0.0)
                  + (ji.T @ y_in if m_in else 0.0)) \
            + mu * np.where(has_lb, 1.0 / dl, 0.0) \
            - mu * np.where(has_ub, 1.0 / du, 0.0)
        rhs_e = -c_e
        rhs_i = -(c_i + s) + (s / z_s) * y_in - mu / z_s if m_in else np.empty(0)
        rhs = np.concatenate([rhs_x, rhs_e, rhs_i])

        # regularization ladder: factorize, demand a descent direction
        sol = None
        start = delta_last / 10.0 if delta_last > 0 else 0.0
        ladder = [d for d in REG_LADDER if d >= start] or [REG_LADDER[-1]]
        for delta_w in ladder:
            kmat = sp.bmat([
                [w + sp.diags(sigma_l + sigma_u + delta_w),
                 je.T if m_eq else None, ji.T if m_in else None],
                [je if m_eq else None,
                 -DUAL_REG * sp.eye(m_eq) if m_eq else None, None],
                [ji if m_in else None, None,
                 -sp.diags(s / z_s) if m_in else None],
            ], format="csc")
            try:
                lu = splu(kmat)
                sol = lu.solve(rhs)
            except (RuntimeError, ValueError):
                continue
            if not np.all(np.isfinite(sol)):
                sol = None
                continue
            delta_last = delta_w
            break
        if sol is None:
            return SolveReport(status="limit", x=red.full(x),
                               iterations=it, runtime=time.perf_counter() - t0,
                               message="KKT factorization failed at every "
                                       "regularization level")
        dx = sol[:n]
        ds = -(c_i + s) - ji @ dx if m_in else np.empty(0)
        # barrier directional derivative (used by the Armijo switching rule)
        dphi = g @ dx - mu * ((dx / dl)[has_lb].sum()) \
            + mu * ((dx / du)[has_ub].sum()) \
            - (mu * (ds / s).sum() if m_in else 0.0)
        dy_e = sol[n:n + m_eq]
        dy_i = sol[n + m_eq:]
        dz_s = mu / s - z_s - (z_s / s) * ds if m_in else np.empty(0)
        dz_l = np.where(has_lb, mu / dl - z_l - sigma_l * dx, 0.0)
        dz_u = np.where(has_ub, mu / du - z_u + sigma_u * dx, 0.0)

        tau = max(0.99, 1.0 - mu)

        def ftb(v, dv, mask=None):
            if mask is not None:
                neg = (dv < 0) & mask
            else:
                neg = dv < 0
            if not neg.any():
                return 1.0
            return min(1.0, float((-tau * v[neg] / dv[neg]).min()))

        a_max = min(ftb(dl, dx, has_lb), ftb(du, -dx, has_ub),
                    ftb(s, ds) if m_in else 1.0)
        a_dual = min(ftb(dl * 0 + z_l, dz_l, has_lb),
                     ftb(du * 0 + z_u, dz_u, has_ub),
                     ftb(z_s, dz_s) if m_in else 1.0)

        theta = infeas(c_e, c_i, s)
        if theta0 is None:
            theta0 = max(1.0, theta)
        theta_max = 1e4 * theta0
        theta_min = 1e-4 * theta0
        phi = barrier(x, s)

        alpha = a_max
        accepted = False
        by_armijo = False
        for _ in range(40):
            xt = x + alpha * dx
            st = s + alpha * ds
            c_et = red.c_eq(xt)
            c_it = red.c_in(xt)
            theta_t = infeas(c_et, c_it, st)
            phi_t = barrier(xt, st)
            if theta_t > theta_max or not np.isfinite(phi_t):
                alpha *= 0.5
                continue
            dominated = any(theta_t >= th and phi_t >= ph for th, ph in filt)
            if dominated:
                alpha *= 0.5
                continue
            switching = (dphi < 0 and alpha * (-dphi) ** S_PHI
                         > DELTA_LS * theta ** S_THETA)
            if theta <= theta_min and switching:
                if phi_t <= phi + ETA_PHI * alpha * dphi:
                    accepted, by_armijo = True, True
                    break
            else:
                if (theta_t <= (1 - GAMMA_THETA) * theta
                        or phi_t <= phi - GAMMA_PHI * theta):
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            ls_failures += 1
            delta_last = max(delta_last * 10, 1e-4)
            if ls_failures >= 3:
                return SolveReport(
                    status="limit", x=red.full(x), iterations=it,
                    runtime=time.perf_counter() - t0, kkt_error=err0,
                    max_violation=float(max(
                        np.abs(c_e).max(initial=0.0),
                        np.maximum(c_i, 0.0).max(initial=0.0))),
                    message="line search failed; point may be infeasible")
            continue
        ls_failures = 0
        if not by_armijo:
            filt.append(((1 - GAMMA_THETA) * theta, phi - GAMMA_PHI * theta))

        x = xt
        s = st
        y_eq = y_eq + a_dual * dy_e if m_eq else y_eq
        y_in = y_in + a_dual * dy_i if m_in else y_in
        z_l = z_l + a_dual * dz_l
        z_u = z_u + a_dual * dz_u
        z_s = z_s + a_dual * dz_s if m_in else z_s
        # dual safeguard keeps multipliers consistent with the barrier
        dl = np.where(has_lb, x - lb, 1.0)
        du = np.where(has_ub, ub - x, 1.0)
        z_l = np.where(has_lb, np.clip(z_l, mu / (KAPPA_SIGMA * dl),
                                       KAPPA_SIGMA * mu / dl), 0.0)
        z_u = np.where(has_ub, np.clip(z_u, mu / (KAPPA_SIGMA * du),
                                       KAPPA_SIGMA * mu / du), 0.0)
        if m_in:
            z_s = np.clip(z_s, mu / (KAPPA_SIGMA * s), KAPPA_SIGMA * mu / s)

    return SolveReport(status="limit", x=red.full(x),
                       objective=red.objective(x), iterations=options.max_iterations,
                       runtime=time.perf_counter() - t0,
                       kkt_error=kkt_error(0.0))


def elastic_instance(inst: ProblemInstance) -> ProblemInstance:
    """Companion feasibility problem: every equality row gets a signed
    violation pair and the objective becomes total violation."""
    n = inst.n
    m_lin = inst.A_eq.shape[0]
    m_nl = inst.trig.n_rows if inst.trig is not None else 0
    m = m_lin + m_nl

    # columns: [x | p_lin | q_lin | p_nl | q_nl]
    def zeros(r, c):
        return sp.csr_matrix((r, c))

    a_eq = sp.hstack([inst.A_eq, sp.eye(m_lin), -sp.eye(m_lin),
                      zeros(m_lin, 2 * m_nl)], format="csr") \
        if m_lin else zeros(0, n + 2 * m)
    a_nl = None
    if inst.trig is not None:
        a_nl = sp.hstack([inst.A_nl, zeros(m_nl, 2 * m_lin),
                          sp.eye(m_nl), -sp.eye(m_nl)], format="csr")
    a_ub = sp.hstack([inst.A_ub, zeros(inst.A_ub.shape[0], 2 * m)],
                     format="csr")
    lb = np.concatenate([inst.lb, np.zeros(2 * m)])
    ub = np.concatenate([inst.ub, np.full(2 * m, np.inf)])
    c = np.concatenate([np.zeros(n), np.ones(2 * m)])
    return replace(
        inst,
        lb=lb, ub=ub, integrality=np.zeros(n + 2 * m, dtype=bool),
        c0=0.0, c=c, qdiag=np.zeros(n + 2 * m),
        A_eq=a_eq, A_ub=a_ub, A_nl=a_nl,
        meta=dict(inst.meta, elastic=True, n_original=n),
    )


def certify_infeasibility(inst: ProblemInstance,
                          options: SolveOptions | None = None,
                          x0: np.ndarray | None = None,
                          violation_tol: float = 1e-6) -> SolveReport:
    """Minimize total equality violation; a positive minimum certifies
    infeasibility of the original instance."""
    options = options or SolveOptions()
    ela = elastic_instance(inst)
    start = None
    if x0 is not None:
        start = np.concatenate([x0, np.zeros(ela.n - inst.n)])
    res = solve_nlp(ela, options, x0=start)
    if not res.ok:
        return SolveReport(status="limit", runtime=res.runtime,
                           iterations=res.iterations,
                           message=f"elastic solve ended with {res.status}")
    # judge feasibility by the original residuals at the elastic optimum,
    # not by the elastic objective (the barrier keeps every violation pair
    # slightly positive, which inflates the L1 sum)
    x_orig = res.x[:inst.n]
    violation = float(np.abs(inst.eq_residual(x_orig)).max(initial=0.0))
    if violation > violation_tol:
        return SolveReport(status="infeasible", x=res.x[:inst.n],
                           iterations=res.iterations, runtime=res.runtime,
                           max_violation=violation,
                           message=f"minimum total equality violation "
                                   f"{violation:.3e} (p.u.)")
    return SolveReport(status="locally_optimal", x=res.x[:inst.n],
                       iterations=res.iterations, runtime=res.runtime,
                       max_violation=violation,
                       message="elastic minimum is feasible")
