"""Optimization-instance representation shared by the LP/MILP and NLP solvers.

An instance is a flat variable vector with bounds and an integrality mask,
a linear-plus-diagonal-quadratic objective, sparse linear constraints, and
two vectorized nonlinear constraint groups:

* ``TrigGroup`` — sums of bilinear-trigonometric terms
  ``V_a V_b (g cos(th_a - th_b) + b sin(th_a - th_b))`` that make up AC power
  balances and line-flow definitions (a == b degenerates to ``V_a^2 g``).
* ``QuadIneqGroup`` — converter-rating circles ``x_a^2 + x_b^2 <= r^2``.

Derivatives are analytic and assembled in COO form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class VariableMap:
    """Registry of named variable blocks inside one flat vector."""

    def __init__(self):
        self._blocks: dict[str, np.ndarray] = {}
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._n = 0

    def add(self, name: str, shape, lb=-np.inf, ub=np.inf) -> np.ndarray:
        if name in self._blocks:
            raise ValueError(f"duplicate variable block {name!r}")
        size = int(np.prod(shape))
        idx = np.arange(self._n, self._n + size).reshape(shape)
        self._blocks[name] = idx
        self._lb.append(np.broadcast_to(np.asarray(lb, dtype=float), (size,)
                                        if np.ndim(lb) == 0 else shape).reshape(-1))
        self._ub.append(np.broadcast_to(np.asarray(ub, dtype=float), (size,)
                                        if np.ndim(ub) == 0 else shape).reshape(-1))
        self._n += size
        return idx

    def __contains__(self, name):
        return name in self._blocks

    def __getitem__(self, name) -> np.ndarray:
        return self._blocks[name]

    @property
    def names(self):
        return list(self._blocks)

    @property
    def n(self) -> int:
        return self._n

    def bounds(self):
        if self._n == 0:
            return np.empty(0), np.empty(0)
        return np.concatenate(self._lb), np.concatenate(self._ub)

    def label(self, j: int) -> str:
        """Human-readable name of flat variable j (for dumps and traces)."""
        for name, idx in self._blocks.items():
            flat = idx.reshape(-1)
            if flat[0] <= j <= flat[-1]:
                pos = np.unravel_index(j - flat[0], idx.shape)
                return f"{name}[{','.join(str(p) for p in pos)}]"
        raise IndexError(j)


@dataclass
class TrigGroup:
    """Vectorized AC terms accumulated into rows of an equality residual."""

    n_rows: int
    row: np.ndarray
    iva: np.ndarray
    ivb: np.ndarray
    itha: np.ndarray
    ithb: np.ndarray
    cg: np.ndarray  # cosine coefficient
    cs: np.ndarray  # sine coefficient

    @classmethod
    def empty(cls, n_rows: int):
        z = np.empty(0, dtype=int)
        return cls(n_rows, z, z.copy(), z.copy(), z.copy(), z.copy(),
                   np.empty(0), np.empty(0))

    @classmethod
    def concat(cls, groups: list["TrigGroup"], n_rows: int):
        return cls(
            n_rows,
            np.concatenate([g.row for g in groups]),
            np.concatenate([g.iva for g in groups]),
            np.concatenate([g.ivb for g in groups]),
            np.concatenate([g.itha for g in groups]),
            np.concatenate([g.ithb for g in groups]),
            np.concatenate([g.cg for g in groups]),
            np.concatenate([g.cs for g in groups]),
        )

    def _k(self, x):
        va, vb = x[self.iva], x[self.ivb]
        dth = x[self.itha] - x[self.ithb]
        c, s = np.cos(dth), np.sin(dth)
        k1 = self.cg * c + self.cs * s
        k2 = -self.cg * s + self.cs * c
        return va, vb, k1, k2

    def value(self, x) -> np.ndarray:
        va, vb, k1, _ = self._k(x)
        out = np.zeros(self.n_rows)
        np.add.at(out, self.row, va * vb * k1)
        return out

    def jacobian(self, x) -> sp.csr_matrix:
        va, vb, k1, k2 = self._k(x)
        rows = np.concatenate([self.row] * 4)
        cols = np.concatenate([self.iva, self.ivb, self.itha, self.ithb])
        vals = np.concatenate([vb * k1, va * k1, va * vb * k2, -va * vb * k2])
        return sp.coo_matrix((vals, (rows, cols)),
                             shape=(self.n_rows, len(x))).tocsr()

    def hessian(self, x, lam) -> sp.coo_matrix:
        """Hessian of ``lam . residual`` as a symmetric sparse matrix."""
        va, vb, k1, k2 = self._k(x)
        w = lam[self.row]
        n = len(x)
        e = []

        def add(i, j, v):
            e.append((i, j, w * v))
            e.append((j, i, w * v))

        add(self.iva, self.ivb, k1)
        add(self.iva, self.itha, vb * k2)
        add(self.iva, self.ithb, -vb * k2)
        add(self.ivb, self.itha, va * k2)
        add(self.ivb, self.ithb, -va * k2)
        add(self.itha, self.ithb, va * vb * k1)
        diag_r = np.concatenate([self.itha, self.ithb])
        diag_v = np.concatenate([-w * va * vb * k1, -w * va * vb * k1])
        rows = np.concatenate([np.concatenate([i for i, _, _ in e]), diag_r])
        cols = np.concatenate([np.concatenate([j for _, j, _ in e]), diag_r])
        vals = np.concatenate([np.concatenate([v for _, _, v in e]), diag_v])
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass
class QuadIneqGroup:
    """Rows of the form x_a^2 + x_b^2 - rhs <= 0."""

    ia: np.ndarray
    ib: np.ndarray
    rhs: np.ndarray

    @property
    def n_rows(self):
        return len(self.rhs)

    def value(self, x) -> np.ndarray:
        return x[self.ia] ** 2 + x[self.ib] ** 2 - self.rhs

    def jacobian(self, x) -> sp.csr_matrix:
        m = self.n_rows
        rows = np.concatenate([np.arange(m), np.arange(m)])
        cols = np.concatenate([self.ia, self.ib])
        vals = np.concatenate([2 * x[self.ia], 2 * x[self.ib]])
        return sp.coo_matrix((vals, (rows, cols)), shape=(m, len(x))).tocsr()

    def hessian(self, x, lam) -> sp.coo_matrix:
        rows = np.concatenate([self.ia, self.ib])
        vals = np.concatenate([2 * lam, 2 * lam])
        return sp.coo_matrix((vals, (rows, rows)), shape=(len(x), len(x)))


def _empty_csr(ncols):
    return sp.csr_matrix((0, ncols))


@dataclass
class ProblemInstance:
    """Variables, bounds, objective and tagged constraints of one model."""

    vm: VariableMap
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray  # bool mask
    c0: float
    c: np.ndarray
    qdiag: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    eq_tags: list[str]
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    ub_tags: list[str]
    trig: TrigGroup | None = None
    A_nl: sp.csr_matrix | None = None  # linear part of the trig equality rows
    b_nl: np.ndarray | None = None
    nl_tags: list[str] = field(default_factory=list)
    quad: QuadIneqGroup | None = None
    quad_tags: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.lb)

    @property
    def is_linear(self) -> bool:
        no_trig = self.trig is None or len(self.trig.row) == 0
        no_quad = self.quad is None or self.quad.n_rows == 0
        return no_trig and no_quad and not self.qdiag.any()

    # -- objective ---------------------------------------------------------

    def objective(self, x) -> float:
        return float(self.c0 + self.c @ x + 0.5 * (self.qdiag * x) @ x)

    def objective_grad(self, x) -> np.ndarray:
        return self.c + self.qdiag * x

    # -- constraints ---------------------------------------------------------

    def eq_residual(self, x) -> np.ndarray:
        parts = [self.A_eq @ x - self.b_eq]
        if self.trig is not None:
            parts.append(self.trig.value(x) + self.A_nl @ x - self.b_nl)
        return np.concatenate(parts)

    def eq_jacobian(self, x) -> sp.csr_matrix:
        parts = [self.A_eq]
        if self.trig is not None:
            parts.append(self.trig.jacobian(x) + self.A_nl)
        return sp.vstack(parts, format="csr")

    def ineq_residual(self, x) -> np.ndarray:
        parts = [self.A_ub @ x - self.b_ub]
        if self.quad is not None:
            parts.append(self.quad.value(x))
        return np.concatenate(parts)

    def ineq_jacobian(self, x) -> sp.csr_matrix:
        parts = [self.A_ub]
        if self.quad is not None:
            parts.append(self.quad.jacobian(x))
        return sp.vstack(parts, format="csr")

    @property
    def n_eq(self) -> int:
        n = self.A_eq.shape[0]
        if self.trig is not None:
            n += self.trig.n_rows
        return n

    @property
    def n_ineq(self) -> int:
        n = self.A_ub.shape[0]
        if self.quad is not None:
            n += self.quad.n_rows
        return n

    def lagrangian_hessian(self, x, y_eq, y_ineq) -> sp.csr_matrix:
        """Hessian of f + y_eq . c_eq + y_ineq . c_ineq."""
        h = sp.diags(self.qdiag).tocoo()
        parts = [h]
        if self.trig is not None:
            lam = y_eq[self.A_eq.shape[0]:]
            parts.append(self.trig.hessian(x, lam))
        if self.quad is not None:
            lam = y_ineq[self.A_ub.shape[0]:]
            parts.append(self.quad.hessian(x, lam))
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out.tocsr()

    def all_tags(self):
        return {
            "eq": self.eq_tags,
            "ineq": self.ub_tags,
            "nl_eq": self.nl_tags,
            "quad_ineq": self.quad_tags,
        }

    def residual_report(self, x) -> dict[str, float]:
        """Max violation per tag family at ``x`` (bounds included)."""
        report: dict[str, float] = {}

        def bump(tag, val):
            fam = tag.split(":")[0]
            report[fam] = max(report.get(fam, 0.0), float(val))

        r = self.A_eq @ x - self.b_eq
        for tag, v in zip(self.eq_tags, np.abs(r)):
            bump(tag, v)
        if self.trig is not None:
            r = self.trig.value(x) + self.A_nl @ x - self.b_nl
            for tag, v in zip(self.nl_tags, np.abs(r)):
                bump(tag, v)
        r = self.A_ub @ x - self.b_ub
        for tag, v in zip(self.ub_tags, np.maximum(r, 0.0)):
            bump(tag, v)
        if self.quad is not None:
            for tag, v in zip(self.quad_tags, np.maximum(self.quad.value(x), 0)):
                bump(tag, v)
        bump("bounds", max(np.max(self.lb - x, initial=0.0),
                           np.max(x - self.ub, initial=0.0)))
        return report

    def dump(self) -> str:
        """Readable algebraic dump of variables and constraints for diffing."""
        lines = [f"# instance: {self.n} variables, "
                 f"{self.n_eq} equalities, {self.n_ineq} inequalities"]
        lines.append("## variables (name, lb, ub, integer)")
        for j in range(self.n):
            flag = " int" if self.integrality[j] else ""
            lines.append(f"{self.vm.label(j)}  in [{self.lb[j]:g}, {self.ub[j]:g}]{flag}")

        def linear_row(A, i):
            row = A.getrow(i)
            terms = [f"{v:+g}*{self.vm.label(int(j))}"
                     for j, v in zip(row.indices, row.data)]
            return " ".join(terms)

        lines.append("## linear equalities (tag: lhs = rhs)")
        for i, tag in enumerate(self.eq_tags):
            lines.append(f"{tag}: {linear_row(self.A_eq, i)} = {self.b_eq[i]:g}")
        lines.append("## linear inequalities (tag: lhs <= rhs)")
        for i, tag in enumerate(self.ub_tags):
            lines.append(f"{tag}: {linear_row(self.A_ub, i)} <= {self.b_ub[i]:g}")
        if self.trig is not None:
            lines.append("## nonlinear equalities (tag: trig-row + lhs = rhs)")
            for i, tag in enumerate(self.nl_tags):
                lines.append(f"{tag}: <trig[{i}]> {linear_row(self.A_nl, i)} "
                             f"= {self.b_nl[i]:g}")
        if self.quad is not None:
            lines.append("## rating circles (tag: xa^2 + xb^2 <= rhs)")
            for i, tag in enumerate(self.quad_tags):
                lines.append(
                    f"{tag}: {self.vm.label(int(self.quad.ia[i]))}^2 + "
                    f"{self.vm.label(int(self.quad.ib[i]))}^2 <= {self.quad.rhs[i]:g}")
        return "\n".join(lines)


class LinearConstraintBuilder:
    """Accumulates tagged sparse linear rows (vectorized per family)."""

    def __init__(self, nvar: int):
        self.nvar = nvar
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.rhs: list[np.ndarray] = []
        self.tags: list[str] = []
        self.n_rows = 0

    def add(self, terms, rhs, tag: str) -> np.ndarray:
        """Add a batch of rows.

        ``terms`` is a list of (index_array, coeff) pairs; each index array has
        shape (n_new,) or (n_new, k) and coefficients broadcast against it.
        Entries with index < 0 are skipped (handy for boundary hours).
        Returns the new row indices.
        """
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        n_new = len(rhs)
        base = self.n_rows
        for idx, coef in terms:
            idx = np.atleast_1d(np.asarray(idx, dtype=int))
            coef = np.asarray(coef, dtype=float)
            if idx.ndim == 1:
                idx = idx[:, None]
                if coef.ndim == 1:
                    coef = coef[:, None]
            coef = np.broadcast_to(coef, idx.shape)
            rr = np.broadcast_to(np.arange(base, base + n_new)[:, None], idx.shape)
            keep = idx >= 0
            self.rows.append(rr[keep])
            self.cols.append(idx[keep])
            self.vals.append(coef[keep])
        self.rhs.append(rhs)
        self.tags.extend([tag] * n_new)
        self.n_rows += n_new
        return np.arange(base, base + n_new)

    def build(self):
        if self.n_rows == 0:
            return _empty_csr(self.nvar), np.empty(0), []
        a = sp.coo_matrix(
            (np.concatenate(self.vals),
             (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n_rows, self.nvar),
        ).tocsr()
        return a, np.concatenate(self.rhs), self.tags
