"""Solver-agnostic sparse LP container, solver adapter, and solution checking."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

INF = float("inf")

LE, EQ, GE = "<=", "=", ">="
RELATIONS = (LE, EQ, GE)


class LpError(ValueError):
    """Malformed linear program."""


class SolveError(RuntimeError):
    """Solver backend unavailable or failed outright."""


@dataclass
class Constraint:
    name: str
    coeffs: Dict[int, float]     # variable index -> coefficient
    relation: str                # one of "<=", "=", ">="
    rhs: float


class LinearProgram:
    """Sparse LP: bounded variables, linear constraints, one linear objective.

    Variable and constraint order is insertion order and is preserved by the
    MPS writer, which keeps emitted artifacts byte-stable.
    """

    def __init__(self, name: str = "lp"):
        self.name = name
        self.var_names: List[str] = []
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.sense: str = "min"
        self.objective: Dict[int, float] = {}
        self.objective_constant: float = 0.0
        self.constraints: List[Constraint] = []
        self._var_index: Dict[str, int] = {}
        self._con_names: set = set()

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def var_index(self, name: str) -> int:
        return self._var_index[name]

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF) -> int:
        if name in self._var_index:
            raise LpError(f"duplicate variable name {name!r}")
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise LpError(f"bad bounds [{lb}, {ub}] for variable {name!r}")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.lower.append(float(lb))
        self.upper.append(float(ub))
        self._var_index[name] = idx
        return idx

    def add_constraint(self, name: str, coeffs: Mapping[int, float],
                       relation: str, rhs: float):
        if name in self._con_names:
            raise LpError(f"duplicate constraint name {name!r}")
        if relation not in RELATIONS:
            raise LpError(f"unknown relation {relation!r} in constraint {name!r}")
        clean = {}
        for idx, val in coeffs.items():
            if not 0 <= idx < len(self.var_names):
                raise LpError(f"constraint {name!r} references unknown variable index {idx}")
            if math.isnan(val):
                raise LpError(f"NaN coefficient in constraint {name!r}")
            if val != 0.0:
                clean[int(idx)] = float(val)
        if math.isnan(rhs):
            raise LpError(f"NaN rhs in constraint {name!r}")
        self._con_names.add(name)
        self.constraints.append(Constraint(name, clean, relation, float(rhs)))

    def set_objective(self, sense: str, coeffs: Mapping[int, float],
                      constant: float = 0.0):
        if sense not in ("min", "max"):
            raise LpError(f"unknown objective sense {sense!r}")
        clean = {}
        for idx, val in coeffs.items():
            if not 0 <= idx < len(self.var_names):
                raise LpError(f"objective references unknown variable index {idx}")
            if math.isnan(val):
                raise LpError("NaN objective coefficient")
            if val != 0.0:
                clean[int(idx)] = float(val)
        self.sense = sense
        self.objective = clean
        self.objective_constant = float(constant)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for idx, val in self.objective.items():
            c[idx] = val
        return c

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(v * x[i] for i, v in self.objective.items())
                     + self.objective_constant)


def lp_equal(a: LinearProgram, b: LinearProgram, tol: float = 0.0) -> bool:
    """Structural equality, normalizing variable order by name."""
    if sorted(a.var_names) != sorted(b.var_names):
        return False
    if a.sense != b.sense:
        return False

    def close(x, y):
        if x == y:
            return True
        return abs(x - y) <= tol * max(1.0, abs(x), abs(y))

    for name in a.var_names:
        ia, ib = a.var_index(name), b.var_index(name)
        if not close(a.lower[ia], b.lower[ib]) or not close(a.upper[ia], b.upper[ib]):
            return False

    def named_obj(lp):
        return {lp.var_names[i]: v for i, v in lp.objective.items()}

    oa, ob = named_obj(a), named_obj(b)
    if set(oa) != set(ob) or any(not close(oa[k], ob[k]) for k in oa):
        return False
    if not close(a.objective_constant, b.objective_constant):
        return False

    def named_cons(lp):
        out = {}
        for con in lp.constraints:
            out[con.name] = (con.relation, con.rhs,
                             {lp.var_names[i]: v for i, v in con.coeffs.items()})
        return out

    ca, cb = named_cons(a), named_cons(b)
    if set(ca) != set(cb):
        return False
    for name in ca:
        rel_a, rhs_a, row_a = ca[name]
        rel_b, rhs_b, row_b = cb[name]
        if rel_a != rel_b or not close(rhs_a, rhs_b):
            return False
        if set(row_a) != set(row_b) or any(not close(row_a[k], row_b[k]) for k in row_a):
            return False
    return True


@dataclass
class SolverConfig:
    backend: str = "highs"
    feasibility_tol: float = 1e-8
    optimality_tol: float = 1e-8
    time_limit_s: Optional[float] = None
    threads: Optional[int] = None


@dataclass
class SolveOutcome:
    status: str                       # optimal | infeasible | unbounded | limit
    objective: float
    x: np.ndarray
    var_names: List[str]
    duals: Optional[Dict[str, float]] = None
    wall_time_s: float = 0.0
    message: str = ""

    def value(self, name: str) -> float:
        return float(self.x[self.var_names.index(name)])

    def values(self) -> Dict[str, float]:
        return {n: float(v) for n, v in zip(self.var_names, self.x)}


_HIGHS_STATUS = {0: "optimal", 1: "limit", 2: "infeasible", 3: "unbounded", 4: "limit"}


def solve(lp: LinearProgram, config: Optional[SolverConfig] = None) -> SolveOutcome:
    """Solve with the configured backend (scipy's HiGHS interface)."""
    config = config or SolverConfig()
    if config.backend != "highs":
        raise SolveError(f"unknown solver backend {config.backend!r}")

    n = lp.num_vars
    c = lp.objective_vector()
    if lp.sense == "max":
        c = -c

    rows_ub, rhs_ub, rows_eq, rhs_eq = [], [], [], []
    for con in lp.constraints:
        if con.relation == EQ:
            rows_eq.append(con)
            rhs_eq.append(con.rhs)
        elif con.relation == LE:
            rows_ub.append((con, 1.0))
            rhs_ub.append(con.rhs)
        else:
            rows_ub.append((con, -1.0))
            rhs_ub.append(-con.rhs)

    def matrix(rows, signed=False):
        data, ri, ci = [], [], []
        for r, item in enumerate(rows):
            con, sign = item if signed else (item, 1.0)
            for idx, val in con.coeffs.items():
                data.append(sign * val)
                ri.append(r)
                ci.append(idx)
        return sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))

    A_ub = matrix(rows_ub, signed=True) if rows_ub else None
    A_eq = matrix(rows_eq) if rows_eq else None
    bounds = list(zip(lp.lower, lp.upper))

    options = {"presolve": True}
    if config.time_limit_s is not None:
        options["time_limit"] = config.time_limit_s

    t0 = time.perf_counter()
    try:
        res = linprog(c, A_ub=A_ub, b_ub=np.array(rhs_ub) if rows_ub else None,
                      A_eq=A_eq, b_eq=np.array(rhs_eq) if rows_eq else None,
                      bounds=bounds, method="highs", options=options)
    except Exception as exc:  # numerical failure inside the backend
        return SolveOutcome("limit", math.nan, np.full(n, math.nan),
                            list(lp.var_names), wall_time_s=time.perf_counter() - t0,
                            message=str(exc))
    wall = time.perf_counter() - t0

    status = _HIGHS_STATUS.get(res.status, "limit")
    if status != "optimal":
        return SolveOutcome(status, math.nan, np.full(n, math.nan),
                            list(lp.var_names), wall_time_s=wall,
                            message=res.message or "")

    x = np.asarray(res.x, dtype=float)
    # clip round-off excursions outside bounds
    x = np.clip(x, np.array(lp.lower), np.array(lp.upper))
    objective = lp.objective_value(x)
    return SolveOutcome("optimal", objective, x, list(lp.var_names),
                        wall_time_s=wall, message=res.message or "")


@dataclass
class ResidualReport:
    max_bound_violation: float
    max_constraint_violation: float
    objective_delta: float
    worst_bound_var: str = ""
    worst_constraint: str = ""
    tol: float = 1e-6

    @property
    def passes(self) -> bool:
        return (self.max_bound_violation <= self.tol
                and self.max_constraint_violation <= self.tol
                and abs(self.objective_delta) <= self.tol)

    def constraint_residuals(self):  # populated by check_solution
        return self._residuals

    _residuals: Dict[str, float] = field(default_factory=dict)


def check_solution(lp: LinearProgram, outcome: SolveOutcome,
                   tol: float = 1e-6) -> ResidualReport:
    """Verify primal feasibility and objective consistency of an outcome."""
    x = np.asarray(outcome.x, dtype=float)
    if len(x) != lp.num_vars:
        raise LpError("outcome does not cover all variables")

    lo = np.array(lp.lower)
    hi = np.array(lp.upper)
    below = np.where(np.isfinite(lo), lo - x, 0.0)
    above = np.where(np.isfinite(hi), x - hi, 0.0)
    bound_viol = np.maximum(np.maximum(below, above), 0.0)
    worst_var = ""
    max_bound = 0.0
    if lp.num_vars:
        i = int(np.argmax(bound_viol))
        max_bound = float(bound_viol[i])
        worst_var = lp.var_names[i] if max_bound > 0 else ""

    residuals: Dict[str, float] = {}
    max_con = 0.0
    worst_con = ""
    for con in lp.constraints:
        lhs = sum(v * x[i] for i, v in con.coeffs.items())
        if con.relation == LE:
            viol = max(0.0, lhs - con.rhs)
        elif con.relation == GE:
            viol = max(0.0, con.rhs - lhs)
        else:
            viol = abs(lhs - con.rhs)
        residuals[con.name] = viol
        if viol > max_con:
            max_con = viol
            worst_con = con.name

    recomputed = lp.objective_value(x)
    delta = 0.0
    if math.isfinite(outcome.objective):
        delta = (recomputed - outcome.objective) / max(1.0, abs(recomputed))

    report = ResidualReport(max_bound, max_con, delta, worst_var, worst_con, tol)
    report._residuals = residuals
    return report
