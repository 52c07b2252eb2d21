"""Sequential solution flow: baseline cost bound, then boundary-cost runs
over a sweep of pinned long-duration storage power capacities."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .domain import (GeneratorSpec, PolicyOverrides, StorageSpec,
                     SystemInstance, classify_assets, hourly)
from .lpcore import SolveOutcome, SolverConfig, check_solution, solve
from .model import (ModelArtifacts, build_baseline_model,
                    build_opportunity_model, cost_terms)


class EngineError(RuntimeError):
    """A model that must solve to optimality did not."""


# --- canonical toy instances -------------------------------------------------

def toy_a() -> SystemInstance:
    """Three-hour single-gas-unit system with a hand-checkable optimum.

    Serving 10 MW for 3 h at 5 $/MWh plus 1.5 MW of reserve at 1 $/MW gives
    an optimal cost of 154.5.
    """
    gas = GeneratorSpec(
        id="gas", technology="gas-cc", kind="firm", status="fixed",
        capacity_mw=20.0, is_gas=True, provides_reserve=True,
        gen_cost_per_mwh=5.0, reserve_cost_per_mw=1.0, reserve_factor=0.5,
        ramp_up_factor=1.0, ramp_down_factor=1.0)
    return SystemInstance(
        horizon_hours=3,
        demand_mwh=(10.0, 10.0, 10.0),
        reserve_req_mw=(1.5, 1.5, 1.5),
        imbalance_cost=1000.0,
        reserve_short_cost=500.0,
        generators=(gas,),
    )


def toy_b() -> SystemInstance:
    """toy_a without a reserve requirement, plus a candidate solar unit and a
    candidate 2 h long-duration storage bridging solar's dark third hour."""
    base = toy_a()
    solar = GeneratorSpec(
        id="solar", technology="solar", kind="renewable", status="candidate",
        availability=(1.0, 1.0, 0.0), gen_cost_per_mwh=0.0,
        invest_cost_per_mw_yr=2.0, invest_limit_mw=100.0)
    ldes = StorageSpec(
        id="ldes", duration_class="long", status="candidate",
        duration_h=2.0, rte=1.0, soc_min_mwh=0.0, soc_max_initial_mwh=0.0,
        power_initial_mw=0.0, invest_limit_power_mw=100.0,
        invest_limit_energy_mwh=200.0)
    return SystemInstance(
        horizon_hours=3,
        demand_mwh=base.demand_mwh,
        reserve_req_mw=(0.0, 0.0, 0.0),
        imbalance_cost=base.imbalance_cost,
        reserve_short_cost=base.reserve_short_cost,
        generators=base.generators + (solar,),
        storages=(ldes,),
    )


# --- policy construction -----------------------------------------------------

def baseline_policy(instance: SystemInstance) -> PolicyOverrides:
    """Reference mode: no investments and no retirements anywhere."""
    sets = classify_assets(instance)
    return PolicyOverrides(
        gen_invest_cap_mw={g.id: 0.0 for g in sets.g_cand},
        storage_power_cap_mw={h.id: 0.0 for h in sets.h_cand},
        storage_energy_cap_mwh={h.id: 0.0 for h in sets.h_cand},
        retirement_window={g.id: (0.0, 0.0) for g in sets.g_firm_fixed},
    )


def decarbonization_policy(instance: SystemInstance,
                           ldes_power_mw: float,
                           overrun_penalty: Optional[float] = None) -> PolicyOverrides:
    """Boundary-cost mode: gas fully retired, renewables and short-duration
    storage open for investment, firm candidates closed, long-duration
    candidates pinned to the requested total power (split equally)."""
    sets = classify_assets(instance)
    if not sets.h_long_cand:
        raise EngineError("instance has no long-duration candidate storage")
    share = ldes_power_mw / len(sets.h_long_cand)
    gas_ids = {g.id for g in sets.g_gas_fixed}
    return PolicyOverrides(
        gen_invest_cap_mw={g.id: 0.0 for g in sets.g_firm_cand},
        retirement_window={
            g.id: ((1.0, 1.0) if g.id in gas_ids else (0.0, 0.0))
            for g in sets.g_firm_fixed},
        ldes_fixed_power_mw={h.id: share for h in sets.h_long_cand},
        overrun_penalty=overrun_penalty,
    )


# --- cost decomposition ------------------------------------------------------

@dataclass
class CostBreakdown:
    """Per-category totals of the full annual cost expression."""

    generation_by_tech: Dict[str, float] = field(default_factory=dict)
    reserve_cost: float = 0.0
    imbalance_cost: float = 0.0
    shortage_cost: float = 0.0
    fom_firm_fixed: float = 0.0
    fom_renew_fixed: float = 0.0
    fom_candidate_gen: float = 0.0
    fom_fixed_storage: float = 0.0
    fom_candidate_storage: float = 0.0
    invest_gen_by_tech: Dict[str, float] = field(default_factory=dict)
    invest_storage_energy: float = 0.0
    invest_storage_power: float = 0.0
    ldes_opportunity_value: float = 0.0

    def total(self) -> float:
        return (sum(self.generation_by_tech.values()) + self.reserve_cost
                + self.imbalance_cost + self.shortage_cost
                + self.fom_firm_fixed + self.fom_renew_fixed
                + self.fom_candidate_gen + self.fom_fixed_storage
                + self.fom_candidate_storage
                + sum(self.invest_gen_by_tech.values())
                + self.invest_storage_energy + self.invest_storage_power
                + self.ldes_opportunity_value)

    def as_dict(self) -> Dict[str, float]:
        out = {f"generation:{k}": float(v)
               for k, v in sorted(self.generation_by_tech.items())}
        out.update({f"investment:{k}": float(v)
                    for k, v in sorted(self.invest_gen_by_tech.items())})
        for key in ("reserve_cost", "imbalance_cost", "shortage_cost",
                    "fom_firm_fixed", "fom_renew_fixed", "fom_candidate_gen",
                    "fom_fixed_storage", "fom_candidate_storage",
                    "invest_storage_energy", "invest_storage_power",
                    "ldes_opportunity_value"):
            out[key] = float(getattr(self, key))
        out["total"] = float(self.total())
        return out


def decompose_costs(m: ModelArtifacts, outcome: SolveOutcome) -> CostBreakdown:
    """Evaluate every cost category on the primal solution."""
    cat, sets, inst = m.catalog, m.sets, m.instance
    T = inst.horizon_hours
    x = outcome.x
    bd = CostBreakdown()
    providers = {g.id for g in sets.g_res_providers}

    for g in inst.generators:
        cp = hourly(g.gen_cost_per_mwh, T)
        cu = hourly(g.reserve_cost_per_mw, T)
        gen_cost = sum(cp[t - 1] * x[cat.p[g.id, t]] for t in range(1, T + 1))
        bd.generation_by_tech[g.technology] = (
            bd.generation_by_tech.get(g.technology, 0.0) + gen_cost)
        if g.id in providers:
            bd.reserve_cost += sum(cu[t - 1] * x[cat.r_up[g.id, t]]
                                   for t in range(1, T + 1))

    bd.imbalance_cost = inst.imbalance_cost * sum(
        x[cat.delta_neg[t]] + x[cat.delta_pos[t]] for t in range(1, T + 1))
    bd.shortage_cost = inst.reserve_short_cost * sum(
        x[cat.delta_res_short[t]] for t in range(1, T + 1))

    for g in sets.g_firm_fixed:
        bd.fom_firm_fixed += g.fom_cost_per_mw_yr * x[cat.p_rem[g.id]]
    for g in sets.g_renew_fixed:
        bd.fom_renew_fixed += g.fom_cost_per_mw_yr * g.capacity_mw
    for g in sets.g_cand:
        bd.fom_candidate_gen += g.fom_cost_per_mw_yr * x[cat.x_inv_gen[g.id]]
        invest = g.invest_cost_per_mw_yr * x[cat.x_inv_gen[g.id]]
        bd.invest_gen_by_tech[g.technology] = (
            bd.invest_gen_by_tech.get(g.technology, 0.0) + invest)
    for h in sets.h_fixed:
        bd.fom_fixed_storage += h.fom_cost_per_mw_yr * h.power_mw
    for h in sets.h_cand:
        bd.fom_candidate_storage += h.fom_cost_per_mw_yr * (
            h.power_initial_mw + x[cat.x_st_power[h.id]])
    for h in sets.h_short_cand:
        bd.invest_storage_energy += (h.invest_cost_energy_per_mwh_yr
                                     * x[cat.x_st_energy[h.id]])
        bd.invest_storage_power += (h.invest_cost_power_per_mw_yr
                                    * x[cat.x_st_power[h.id]])

    if cat.c_bc is not None:
        pinned = sum(m.overrides.ldes_fixed_power_mw.get(h.id, 0.0)
                     for h in sets.h_long_cand)
        bd.ldes_opportunity_value = x[cat.c_bc] * pinned
    return bd


# --- results -----------------------------------------------------------------

@dataclass
class BaselineResult:
    q_star: float
    dispatch: Dict[str, float]
    breakdown: CostBreakdown
    outcome: SolveOutcome
    artifacts: ModelArtifacts


@dataclass
class InvestmentPlan:
    renewables_mw_by_tech: Dict[str, float] = field(default_factory=dict)
    sdes_power_mw: float = 0.0
    sdes_energy_mwh: float = 0.0
    retired_mw_by_tech: Dict[str, float] = field(default_factory=dict)


@dataclass
class BoundaryCurvePoint:
    ldes_power_mw: float
    q_star: float
    boundary_cost_per_mw: float = math.nan
    budget_overrun: float = math.nan
    viable: bool = False
    net_cost_reduction: float = math.nan
    plan: InvestmentPlan = field(default_factory=InvestmentPlan)
    breakdown: CostBreakdown = field(default_factory=CostBreakdown)
    status: str = "ok"
    message: str = ""
    outcome: Optional[SolveOutcome] = None
    artifacts: Optional[ModelArtifacts] = None

    @property
    def boundary_cost_per_kw(self) -> float:
        return self.boundary_cost_per_mw / 1000.0


def run_baseline(instance: SystemInstance,
                 solver: Optional[SolverConfig] = None) -> BaselineResult:
    """Solve the reference (no-investment, no-retirement) model."""
    solver = solver or SolverConfig()
    m = build_baseline_model(instance, baseline_policy(instance))
    outcome = solve(m.lp, solver)
    if outcome.status != "optimal":
        raise EngineError(
            f"baseline solve ended with status {outcome.status}: {outcome.message}")
    report = check_solution(m.lp, outcome, tol=1e-6)
    if not report.passes:
        raise EngineError(
            f"baseline solution failed verification: bound {report.max_bound_violation}, "
            f"constraint {report.max_constraint_violation} on {report.worst_constraint}")
    return BaselineResult(q_star=outcome.objective, dispatch=outcome.values(),
                          breakdown=decompose_costs(m, outcome),
                          outcome=outcome, artifacts=m)


def run_opportunity(instance: SystemInstance, q_star: float,
                    ldes_power_mw: float,
                    solver: Optional[SolverConfig] = None,
                    overrun_penalty: Optional[float] = None) -> BoundaryCurvePoint:
    """Solve the boundary-cost model for one pinned LDES power capacity."""
    solver = solver or SolverConfig()
    policy = decarbonization_policy(instance, ldes_power_mw, overrun_penalty)
    m = build_opportunity_model(instance, policy, q_star)
    outcome = solve(m.lp, solver)
    point = BoundaryCurvePoint(ldes_power_mw=ldes_power_mw, q_star=q_star)
    if outcome.status != "optimal":
        point.status = "failed"
        point.message = f"solver status {outcome.status}: {outcome.message}"
        return point

    cat = m.catalog
    x = outcome.x
    c_bc = float(x[cat.c_bc])
    q_over = float(x[cat.q_over])
    viable = q_over <= solver.feasibility_tol * max(1.0, abs(q_star)) and c_bc > 0.0

    plan = InvestmentPlan()
    for g in m.sets.g_renew_cand:
        plan.renewables_mw_by_tech[g.technology] = (
            plan.renewables_mw_by_tech.get(g.technology, 0.0)
            + float(x[cat.x_inv_gen[g.id]]))
    for h in m.sets.h_short_cand:
        plan.sdes_power_mw += float(x[cat.x_st_power[h.id]])
        plan.sdes_energy_mwh += float(x[cat.x_st_energy[h.id]])
    for g in m.sets.g_firm_fixed:
        retired = float(x[cat.x_ret_gen[g.id]])
        if retired > 0:
            plan.retired_mw_by_tech[g.technology] = (
                plan.retired_mw_by_tech.get(g.technology, 0.0) + retired)

    bd = decompose_costs(m, outcome)
    non_ldes_cost = bd.total() - bd.ldes_opportunity_value
    point.boundary_cost_per_mw = c_bc
    point.budget_overrun = q_over
    point.viable = viable
    point.net_cost_reduction = q_star - non_ldes_cost
    point.plan = plan
    point.breakdown = bd
    point.outcome = outcome
    point.artifacts = m
    return point


def _sweep_worker(args) -> BoundaryCurvePoint:
    instance, q_star, cap, solver, penalty = args
    try:
        point = run_opportunity(instance, q_star, cap, solver, penalty)
    except Exception as exc:
        point = BoundaryCurvePoint(ldes_power_mw=cap, q_star=q_star,
                                   status="failed", message=str(exc))
    # solver internals are not needed downstream and do not pickle cheaply
    point.outcome = None
    point.artifacts = None
    return point


def sweep_boundary_curve(instance: SystemInstance,
                         capacities: Sequence[float],
                         solver: Optional[SolverConfig] = None,
                         workers: int = 1,
                         overrun_penalty: Optional[float] = None,
                         baseline: Optional[BaselineResult] = None,
                         keep_solutions: bool = False,
                         ) -> List[BoundaryCurvePoint]:
    """One boundary-cost point per capacity, sharing a single baseline solve."""
    caps = [float(c) for c in capacities]
    if not caps:
        raise ValueError("capacity list is empty")
    if any(c <= 0 for c in caps):
        raise ValueError("capacities must be strictly positive")
    if caps != sorted(caps):
        raise ValueError("capacities must be sorted ascending")

    solver = solver or SolverConfig()
    if baseline is None:
        baseline = run_baseline(instance, solver)
    q_star = baseline.q_star

    if workers > 1 and not keep_solutions:
        jobs = [(instance, q_star, c, solver, overrun_penalty) for c in caps]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_worker, jobs))

    points = []
    for cap in caps:
        try:
            point = run_opportunity(instance, q_star, cap, solver, overrun_penalty)
        except Exception as exc:
            point = BoundaryCurvePoint(ldes_power_mw=cap, q_star=q_star,
                                       status="failed", message=str(exc))
        if not keep_solutions:
            point.outcome = None
            point.artifacts = None
        points.append(point)
    return points


def minimum_viable_capacity(points: Sequence[BoundaryCurvePoint]) -> Optional[float]:
    """Smallest swept capacity whose point is viable, if any."""
    for point in points:
        if point.status == "ok" and point.viable:
            return point.ldes_power_mw
    return None
