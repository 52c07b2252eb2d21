"""Dense two-phase tableau simplex, used only as an independent test oracle.

Deliberately textbook: the LP is converted to standard equality form with
nonnegative variables, phase 1 drives artificials out, phase 2 optimizes the
real objective. Slow but transparent.
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from ldesval.lpcore import EQ, GE, INF, LE, LinearProgram

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7


class _Standardized:
    def __init__(self, lp: LinearProgram):
        n = lp.num_vars
        # each original var maps to an affine combination of standard vars:
        # x_j = shift_j + sum(sign * y_k)
        self.shift = np.zeros(n)
        self.terms = [[] for _ in range(n)]  # list of (std_index, sign)
        cols = 0
        extra_rows = []  # (coeffs dict on std vars, rhs) for finite upper bounds

        for j in range(n):
            lb, ub = lp.lower[j], lp.upper[j]
            if lb == -INF and ub == INF:
                self.terms[j] = [(cols, 1.0), (cols + 1, -1.0)]
                cols += 2
            elif lb == -INF:
                self.shift[j] = ub
                self.terms[j] = [(cols, -1.0)]
                cols += 1
            else:
                self.shift[j] = lb
                self.terms[j] = [(cols, 1.0)]
                if ub != INF:
                    extra_rows.append(({cols: 1.0}, ub - lb))
                cols += 1

        rows = []
        for con in lp.constraints:
            coeffs = {}
            rhs = con.rhs
            for j, a in con.coeffs.items():
                rhs -= a * self.shift[j]
                for k, sign in self.terms[j]:
                    coeffs[k] = coeffs.get(k, 0.0) + a * sign
            rows.append((coeffs, con.relation, rhs))
        for coeffs, rhs in extra_rows:
            rows.append((coeffs, LE, rhs))

        n_slack = sum(1 for _, rel, _ in rows if rel != EQ)
        m = len(rows)
        A = np.zeros((m, cols + n_slack))
        b = np.zeros(m)
        slack = cols
        for i, (coeffs, rel, rhs) in enumerate(rows):
            for k, a in coeffs.items():
                A[i, k] = a
            b[i] = rhs
            if rel == LE:
                A[i, slack] = 1.0
                slack += 1
            elif rel == GE:
                A[i, slack] = -1.0
                slack += 1
        self.A, self.b = A, b
        self.n_structural = cols

        c = np.zeros(cols + n_slack)
        const = lp.objective_constant
        sense = 1.0 if lp.sense == "min" else -1.0
        for j, coef in lp.objective.items():
            const += coef * self.shift[j]  # shifted origin contributes a constant
            for k, sign in self.terms[j]:
                c[k] += sense * coef * sign
        self.c = c
        self.const = const
        self.sense = sense

    def recover(self, y: np.ndarray, lp: LinearProgram) -> np.ndarray:
        x = np.array(self.shift)
        for j in range(lp.num_vars):
            for k, sign in self.terms[j]:
                x[j] += sign * y[k]
        return x


def _simplex(A: np.ndarray, b: np.ndarray, c: np.ndarray, basis: list,
             max_iter: int = 20000) -> Tuple[str, np.ndarray, list]:
    """Minimize c'y over Ay = b, y >= 0, starting from the given basis."""
    m, n = A.shape
    T = np.hstack([A.astype(float), b.reshape(-1, 1).astype(float)])
    basis = list(basis)

    for it in range(max_iter):
        cb = c[basis]
        # reduced costs via the current tableau (T already in canonical form)
        z = cb @ T[:, :n]
        reduced = c - z
        bland = it > max_iter // 2
        if bland:
            candidates = np.where(reduced < -_PIVOT_TOL)[0]
            if len(candidates) == 0:
                break
            enter = int(candidates[0])
        else:
            enter = int(np.argmin(reduced))
            if reduced[enter] >= -_PIVOT_TOL:
                break
        col = T[:, enter]
        positive = col > _PIVOT_TOL
        if not positive.any():
            return "unbounded", T, basis
        ratios = np.full(m, np.inf)
        ratios[positive] = T[positive, n] / col[positive]
        best = ratios.min()
        ties = np.where(ratios <= best + 1e-12)[0]
        # leave by smallest basis index among ties (anti-cycling)
        leave = int(min(ties, key=lambda i: basis[i]))
        pivot = T[leave, enter]
        T[leave] /= pivot
        for i in range(m):
            if i != leave and abs(T[i, enter]) > 1e-14:
                T[i] -= T[i, enter] * T[leave]
        basis[leave] = enter
    else:
        return "limit", T, basis
    return "optimal", T, basis


def solve_reference(lp: LinearProgram) -> Tuple[str, float, np.ndarray]:
    """Return (status, objective, x) with objective in the LP's own sense."""
    std = _Standardized(lp)
    A, b, c = std.A, std.b, std.c
    m, n = A.shape

    neg = b < 0
    A = A.copy()
    A[neg] *= -1.0
    b = np.abs(b)

    # phase 1: artificial basis
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    status, T, basis = _simplex(A1, b, c1, basis)
    if status != "optimal":
        return "limit", math.nan, np.full(lp.num_vars, math.nan)
    y = np.zeros(n + m)
    y[basis] = T[:, -1]
    if y[n:].sum() > _FEAS_TOL:
        return "infeasible", math.nan, np.full(lp.num_vars, math.nan)

    # drive remaining artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            row = T[i, :n]
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > _PIVOT_TOL:
                pivot = T[i, j]
                T[i] /= pivot
                for r in range(m):
                    if r != i and abs(T[r, j]) > 1e-14:
                        T[r] -= T[r, j] * T[i]
                basis[i] = j

    keep = [i for i in range(m) if basis[i] < n]
    A2 = T[keep, :n]
    b2 = T[keep, -1]
    basis2 = [basis[i] for i in keep]

    status, T2, basis2 = _simplex(A2, b2, c, basis2)
    if status == "unbounded":
        return "unbounded", math.nan, np.full(lp.num_vars, math.nan)
    if status != "optimal":
        return "limit", math.nan, np.full(lp.num_vars, math.nan)

    y = np.zeros(n)
    y[basis2] = T2[:, -1]
    x = std.recover(y, lp)
    objective = std.sense * float(c @ y) + std.const
    return "optimal", objective, x
