"""Builds the baseline and opportunity LPs from a system instance.

Every constraint row is registered with a tag naming the model block it
implements, so emitted models can be audited row by row. Pure bound
constraints (simple variable limits) are applied as variable bounds and do
not appear as rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .domain import (GeneratorSpec, IndexSets, PolicyOverrides, StorageSpec,
                     SystemInstance, classify_assets, hourly, validate_instance)
from .lpcore import EQ, GE, INF, LE, LinearProgram


class ModelBuildError(ValueError):
    """Instance or overrides cannot be expressed as a well-posed model."""


@dataclass
class VariableCatalog:
    """Handles (LP column indices) for every decision-variable family."""

    p: Dict[Tuple[str, int], int] = field(default_factory=dict)
    r_up: Dict[Tuple[str, int], int] = field(default_factory=dict)
    p_ch: Dict[Tuple[str, int], int] = field(default_factory=dict)
    p_dis: Dict[Tuple[str, int], int] = field(default_factory=dict)
    r_st_up: Dict[Tuple[str, int], int] = field(default_factory=dict)
    v: Dict[Tuple[str, int], int] = field(default_factory=dict)
    v_ini: Dict[str, int] = field(default_factory=dict)
    delta_neg: Dict[int, int] = field(default_factory=dict)
    delta_pos: Dict[int, int] = field(default_factory=dict)
    delta_res_short: Dict[int, int] = field(default_factory=dict)
    p_rem: Dict[str, int] = field(default_factory=dict)
    x_inv_gen: Dict[str, int] = field(default_factory=dict)
    x_ret_gen: Dict[str, int] = field(default_factory=dict)
    x_st_energy: Dict[str, int] = field(default_factory=dict)
    x_st_power: Dict[str, int] = field(default_factory=dict)
    c_bc: Optional[int] = None
    q_over: Optional[int] = None


@dataclass
class ModelArtifacts:
    lp: LinearProgram
    catalog: VariableCatalog
    registry: Dict[str, str]            # constraint name -> block tag
    sets: IndexSets
    instance: SystemInstance
    overrides: PolicyOverrides

    def tag(self, name: str, tag: str):
        self.registry[name] = tag


# --- effective limits with policy overrides ---------------------------------

def gen_invest_cap(g: GeneratorSpec, overrides: PolicyOverrides) -> float:
    return float(overrides.gen_invest_cap_mw.get(g.id, g.invest_limit_mw))


def storage_power_cap(h: StorageSpec, overrides: PolicyOverrides) -> float:
    return float(overrides.storage_power_cap_mw.get(h.id, h.invest_limit_power_mw))


def storage_energy_cap(h: StorageSpec, overrides: PolicyOverrides) -> float:
    return float(overrides.storage_energy_cap_mwh.get(h.id, h.invest_limit_energy_mwh))


def retirement_window(g: GeneratorSpec, overrides: PolicyOverrides) -> Tuple[float, float]:
    return tuple(overrides.retirement_window.get(
        g.id, (g.retire_min_frac, g.retire_max_frac)))


def default_overrun_penalty(instance: SystemInstance) -> float:
    """Budget-overrun penalty: far above any cost coefficient in the instance."""
    peak = max(instance.imbalance_cost, instance.reserve_short_cost, 1.0)
    for g in instance.generators:
        peak = max(peak, g.invest_cost_per_mw_yr, g.fom_cost_per_mw_yr,
                   float(np.max(hourly(g.gen_cost_per_mwh, instance.horizon_hours))),
                   float(np.max(hourly(g.reserve_cost_per_mw, instance.horizon_hours))))
    for h in instance.storages:
        peak = max(peak, h.fom_cost_per_mw_yr, h.invest_cost_energy_per_mwh_yr,
                   h.invest_cost_power_per_mw_yr)
    return 1e6 * peak


# --- variable creation -------------------------------------------------------

def _create_variables(m: ModelArtifacts, opportunity: bool):
    lp, cat, sets = m.lp, m.catalog, m.sets
    inst, ov = m.instance, m.overrides
    T = inst.horizon_hours
    providers = {g.id for g in sets.g_res_providers}

    for g in inst.generators:
        for t in range(1, T + 1):
            cat.p[g.id, t] = lp.add_var(f"p({g.id},t{t})")
        if g.id in providers:
            for t in range(1, T + 1):
                cat.r_up[g.id, t] = lp.add_var(f"r_up({g.id},t{t})")

    for h in inst.storages:
        for t in range(1, T + 1):
            cat.p_ch[h.id, t] = lp.add_var(f"p_ch({h.id},t{t})")
        for t in range(1, T + 1):
            cat.p_dis[h.id, t] = lp.add_var(f"p_dis({h.id},t{t})")
        for t in range(1, T + 1):
            cat.r_st_up[h.id, t] = lp.add_var(f"r_st({h.id},t{t})")
        for t in range(1, T + 1):
            cat.v[h.id, t] = lp.add_var(f"v({h.id},t{t})", lb=-INF, ub=INF)
        cat.v_ini[h.id] = lp.add_var(f"v_ini({h.id})", lb=-INF, ub=INF)

    for t in range(1, T + 1):
        cat.delta_neg[t] = lp.add_var(f"d_neg(t{t})")
    for t in range(1, T + 1):
        cat.delta_pos[t] = lp.add_var(f"d_pos(t{t})")
    for t in range(1, T + 1):
        cat.delta_res_short[t] = lp.add_var(f"d_res(t{t})")

    for g in sets.g_firm_fixed:
        cat.p_rem[g.id] = lp.add_var(f"p_rem({g.id})")
        lo, hi = retirement_window(g, ov)
        cat.x_ret_gen[g.id] = lp.add_var(f"x_ret({g.id})",
                                         lb=lo * g.capacity_mw,
                                         ub=hi * g.capacity_mw)

    for g in sets.g_cand:
        cat.x_inv_gen[g.id] = lp.add_var(f"x_inv({g.id})",
                                         ub=gen_invest_cap(g, ov))

    for h in sets.h_cand:
        fixed_power = ov.ldes_fixed_power_mw.get(h.id)
        if fixed_power is not None and h.duration_class == "long":
            if fixed_power < 0:
                raise ModelBuildError(f"negative pinned LDES power for {h.id}")
            cat.x_st_energy[h.id] = lp.add_var(
                f"x_st_e({h.id})", lb=fixed_power * h.duration_h,
                ub=fixed_power * h.duration_h)
            cat.x_st_power[h.id] = lp.add_var(
                f"x_st_p({h.id})", lb=fixed_power, ub=fixed_power)
        else:
            cat.x_st_energy[h.id] = lp.add_var(
                f"x_st_e({h.id})", ub=storage_energy_cap(h, ov))
            cat.x_st_power[h.id] = lp.add_var(
                f"x_st_p({h.id})", ub=storage_power_cap(h, ov))

    if opportunity:
        cat.c_bc = lp.add_var("c_bc", lb=-INF, ub=INF)
        cat.q_over = lp.add_var("q_over")


# --- constraint blocks -------------------------------------------------------

def add_balance_block(m: ModelArtifacts):
    """Hourly system power balance."""
    lp, cat, inst = m.lp, m.catalog, m.instance
    for t in range(1, inst.horizon_hours + 1):
        coeffs: Dict[int, float] = {}
        for g in inst.generators:
            coeffs[cat.p[g.id, t]] = 1.0
        for h in inst.storages:
            coeffs[cat.p_ch[h.id, t]] = -1.0
            coeffs[cat.p_dis[h.id, t]] = 1.0
        coeffs[cat.delta_neg[t]] = 1.0
        coeffs[cat.delta_pos[t]] = -1.0
        name = f"balance(t{t})"
        lp.add_constraint(name, coeffs, EQ, inst.demand_mwh[t - 1])
        m.tag(name, "balance")


def add_reserve_block(m: ModelArtifacts):
    """Minimum hourly up-reserve, short by at most the shortage variable."""
    lp, cat, sets, inst = m.lp, m.catalog, m.sets, m.instance
    for t in range(1, inst.horizon_hours + 1):
        coeffs: Dict[int, float] = {}
        for g in sets.g_res_providers:
            coeffs[cat.r_up[g.id, t]] = 1.0
        for h in inst.storages:
            coeffs[cat.r_st_up[h.id, t]] = 1.0
        coeffs[cat.delta_res_short[t]] = 1.0
        name = f"reserve(t{t})"
        lp.add_constraint(name, coeffs, GE, inst.reserve_req_mw[t - 1])
        m.tag(name, "reserve-requirement")


def add_storage_block(m: ModelArtifacts):
    """State-of-charge dynamics, capacity limits, and investment coupling."""
    lp, cat, sets, inst, ov = m.lp, m.catalog, m.sets, m.instance, m.overrides
    T = inst.horizon_hours
    candidates = {h.id for h in sets.h_cand}

    for h in inst.storages:
        hid = h.id
        # SOC recursion and cyclic closure
        for t in range(1, T + 1):
            prev = cat.v_ini[hid] if t == 1 else cat.v[hid, t - 1]
            name = f"soc({hid},t{t})"
            lp.add_constraint(name, {cat.v[hid, t]: 1.0, prev: -1.0,
                                     cat.p_ch[hid, t]: -h.rte,
                                     cat.p_dis[hid, t]: 1.0}, EQ, 0.0)
            m.tag(name, "soc-recursion")
        name = f"soc_cycle({hid})"
        lp.add_constraint(name, {cat.v_ini[hid]: 1.0, cat.v[hid, T]: -1.0}, EQ, 0.0)
        m.tag(name, "soc-cyclic")

        soc_vars = [cat.v_ini[hid]] + [cat.v[hid, t] for t in range(1, T + 1)]
        if hid in candidates:
            # upper SOC limit depends on the energy investment
            for k, var in enumerate(soc_vars):
                lp.lower[var] = h.soc_min_mwh
                label = "ini" if k == 0 else f"t{k}"
                name = f"soc_cap({hid},{label})"
                lp.add_constraint(name, {var: 1.0, cat.x_st_energy[hid]: -1.0},
                                  LE, h.soc_max_initial_mwh)
                m.tag(name, "soc-limit")
        else:
            for var in soc_vars:
                lp.lower[var] = h.soc_min_mwh
                lp.upper[var] = h.soc_max_mwh

        # charge/discharge power limits; discharge headroom also covers reserve
        if hid in candidates:
            base = h.power_initial_mw
            for t in range(1, T + 1):
                name = f"ch_cap({hid},t{t})"
                lp.add_constraint(name, {cat.p_ch[hid, t]: 1.0,
                                         cat.x_st_power[hid]: -1.0}, LE, base)
                m.tag(name, "charge-limit")
                name = f"dis_cap({hid},t{t})"
                lp.add_constraint(name, {cat.p_dis[hid, t]: 1.0,
                                         cat.r_st_up[hid, t]: 1.0,
                                         cat.x_st_power[hid]: -1.0}, LE, base)
                m.tag(name, "discharge-limit")
        else:
            for t in range(1, T + 1):
                lp.upper[cat.p_ch[hid, t]] = h.power_mw
                name = f"dis_cap({hid},t{t})"
                lp.add_constraint(name, {cat.p_dis[hid, t]: 1.0,
                                         cat.r_st_up[hid, t]: 1.0}, LE, h.power_mw)
                m.tag(name, "discharge-limit")

        # provisioned reserve must be backed by stored energy
        for t in range(1, T + 1):
            name = f"res_soc({hid},t{t})"
            lp.add_constraint(name, {cat.v[hid, t]: 1.0,
                                     cat.r_st_up[hid, t]: -1.0}, GE, h.soc_min_mwh)
            m.tag(name, "reserve-energy-backing")

        # duration ties energy investment to power investment
        if hid in candidates:
            name = f"st_dur({hid})"
            lp.add_constraint(name, {cat.x_st_energy[hid]: 1.0,
                                     cat.x_st_power[hid]: -h.duration_h}, EQ, 0.0)
            m.tag(name, "duration-coupling")


def add_generator_block(m: ModelArtifacts):
    """Generation, reserve, ramping, investment, and retirement constraints."""
    lp, cat, sets, inst, ov = m.lp, m.catalog, m.sets, m.instance, m.overrides
    T = inst.horizon_hours
    providers = {g.id for g in sets.g_res_providers}

    for g in sets.g_firm_fixed:
        gid = g.id
        for t in range(1, T + 1):
            name = f"gen_cap({gid},t{t})"
            row = {cat.p[gid, t]: 1.0, cat.p_rem[gid]: -1.0}
            if gid in providers:
                row[cat.r_up[gid, t]] = 1.0
            lp.add_constraint(name, row, LE, 0.0)
            m.tag(name, "generation-limit")
        if gid in providers:
            for t in range(1, T + 1):
                name = f"res_cap({gid},t{t})"
                lp.add_constraint(name, {cat.r_up[gid, t]: 1.0,
                                         cat.p_rem[gid]: -g.reserve_factor}, LE, 0.0)
                m.tag(name, "reserve-limit")
        for t in range(2, T + 1):
            name = f"ramp_up({gid},t{t})"
            lp.add_constraint(name, {cat.p[gid, t]: 1.0, cat.p[gid, t - 1]: -1.0,
                                     cat.p_rem[gid]: -g.ramp_up_factor}, LE, 0.0)
            m.tag(name, "ramp-up")
            name = f"ramp_dn({gid},t{t})"
            lp.add_constraint(name, {cat.p[gid, t - 1]: 1.0, cat.p[gid, t]: -1.0,
                                     cat.p_rem[gid]: -g.ramp_down_factor}, LE, 0.0)
            m.tag(name, "ramp-down")
        name = f"rem_cap({gid})"
        lp.add_constraint(name, {cat.p_rem[gid]: 1.0, cat.x_ret_gen[gid]: 1.0},
                          EQ, g.capacity_mw)
        m.tag(name, "remaining-capacity")

    for g in sets.g_renew_fixed:
        gid = g.id
        avail = hourly(g.availability, T)
        if gid in providers:
            for t in range(1, T + 1):
                cap = g.capacity_mw * avail[t - 1]
                name = f"gen_cap({gid},t{t})"
                lp.add_constraint(name, {cat.p[gid, t]: 1.0,
                                         cat.r_up[gid, t]: 1.0}, LE, cap)
                m.tag(name, "generation-limit")
                lp.upper[cat.r_up[gid, t]] = cap * g.reserve_factor
        else:
            for t in range(1, T + 1):
                lp.upper[cat.p[gid, t]] = g.capacity_mw * avail[t - 1]

    for g in sets.g_firm_cand:
        gid = g.id
        for t in range(1, T + 1):
            name = f"gen_cap({gid},t{t})"
            row = {cat.p[gid, t]: 1.0, cat.x_inv_gen[gid]: -1.0}
            if gid in providers:
                row[cat.r_up[gid, t]] = 1.0
            lp.add_constraint(name, row, LE, 0.0)
            m.tag(name, "generation-limit")
        if gid in providers:
            for t in range(1, T + 1):
                name = f"res_cap({gid},t{t})"
                lp.add_constraint(name, {cat.r_up[gid, t]: 1.0,
                                         cat.x_inv_gen[gid]: -g.reserve_factor},
                                  LE, 0.0)
                m.tag(name, "reserve-limit")
        for t in range(2, T + 1):
            name = f"ramp_up({gid},t{t})"
            lp.add_constraint(name, {cat.p[gid, t]: 1.0, cat.p[gid, t - 1]: -1.0,
                                     cat.x_inv_gen[gid]: -g.ramp_up_factor}, LE, 0.0)
            m.tag(name, "ramp-up")
            name = f"ramp_dn({gid},t{t})"
            lp.add_constraint(name, {cat.p[gid, t - 1]: 1.0, cat.p[gid, t]: -1.0,
                                     cat.x_inv_gen[gid]: -g.ramp_down_factor},
                              LE, 0.0)
            m.tag(name, "ramp-down")

    for g in sets.g_renew_cand:
        gid = g.id
        avail = hourly(g.availability, T)
        for t in range(1, T + 1):
            f_t = avail[t - 1]
            name = f"gen_cap({gid},t{t})"
            row = {cat.p[gid, t]: 1.0, cat.x_inv_gen[gid]: -f_t}
            if gid in providers:
                row[cat.r_up[gid, t]] = 1.0
            lp.add_constraint(name, row, LE, 0.0)
            m.tag(name, "generation-limit")
            if gid in providers:
                name = f"res_cap({gid},t{t})"
                lp.add_constraint(name, {cat.r_up[gid, t]: 1.0,
                                         cat.x_inv_gen[gid]: -f_t * g.reserve_factor},
                                  LE, 0.0)
                m.tag(name, "reserve-limit")


# --- objective / budget cost expression --------------------------------------

def cost_terms(m: ModelArtifacts) -> Tuple[Dict[int, float], float]:
    """Coefficients and constant of the total annual system cost expression.

    Used both as the baseline objective and as the cost side of the
    opportunity model's budget constraint.
    """
    cat, sets, inst = m.catalog, m.sets, m.instance
    T = inst.horizon_hours
    coeffs: Dict[int, float] = {}
    constant = 0.0

    def bump(idx: int, val: float):
        coeffs[idx] = coeffs.get(idx, 0.0) + val

    for g in sets.g_cand:
        bump(cat.x_inv_gen[g.id], g.invest_cost_per_mw_yr + g.fom_cost_per_mw_yr)
    for h in sets.h_short_cand:
        bump(cat.x_st_energy[h.id], h.invest_cost_energy_per_mwh_yr)
        bump(cat.x_st_power[h.id], h.invest_cost_power_per_mw_yr)

    providers = {g.id for g in sets.g_res_providers}
    for g in inst.generators:
        cp = hourly(g.gen_cost_per_mwh, T)
        cu = hourly(g.reserve_cost_per_mw, T)
        for t in range(1, T + 1):
            if cp[t - 1]:
                bump(cat.p[g.id, t], cp[t - 1])
            if g.id in providers and cu[t - 1]:
                bump(cat.r_up[g.id, t], cu[t - 1])

    for t in range(1, T + 1):
        bump(cat.delta_neg[t], inst.imbalance_cost)
        bump(cat.delta_pos[t], inst.imbalance_cost)
        bump(cat.delta_res_short[t], inst.reserve_short_cost)

    for g in sets.g_firm_fixed:
        bump(cat.p_rem[g.id], g.fom_cost_per_mw_yr)
    for g in sets.g_renew_fixed:
        constant += g.fom_cost_per_mw_yr * g.capacity_mw
    for h in sets.h_fixed:
        constant += h.fom_cost_per_mw_yr * h.power_mw
    for h in sets.h_cand:
        constant += h.fom_cost_per_mw_yr * h.power_initial_mw
        bump(cat.x_st_power[h.id], h.fom_cost_per_mw_yr)

    return coeffs, constant


def _new_artifacts(instance: SystemInstance, overrides: PolicyOverrides,
                   name: str) -> ModelArtifacts:
    report = validate_instance(instance)
    report.raise_if_invalid()
    return ModelArtifacts(lp=LinearProgram(name), catalog=VariableCatalog(),
                          registry={}, sets=classify_assets(instance),
                          instance=instance, overrides=overrides)


def build_baseline_model(instance: SystemInstance,
                         overrides: PolicyOverrides) -> ModelArtifacts:
    """Minimum-cost investment and dispatch model over the full horizon."""
    m = _new_artifacts(instance, overrides, "baseline")
    _create_variables(m, opportunity=False)
    add_balance_block(m)
    add_reserve_block(m)
    add_storage_block(m)
    add_generator_block(m)
    coeffs, constant = cost_terms(m)
    m.lp.set_objective("min", coeffs, constant)
    return m


def build_opportunity_model(instance: SystemInstance, overrides: PolicyOverrides,
                            q_star: float) -> ModelArtifacts:
    """Boundary-cost maximization under the baseline-cost budget."""
    if not math.isfinite(q_star):
        raise ModelBuildError("q_star must be finite")
    sets = classify_assets(instance)
    pinned = sum(overrides.ldes_fixed_power_mw.get(h.id, 0.0)
                 for h in sets.h_long_cand)
    if pinned <= 0.0:
        raise ModelBuildError(
            "unbounded boundary cost: zero LDES quantity pinned for the "
            "opportunity model")

    m = _new_artifacts(instance, overrides, "opportunity")
    _create_variables(m, opportunity=True)
    add_balance_block(m)
    add_reserve_block(m)
    add_storage_block(m)
    add_generator_block(m)

    coeffs, constant = cost_terms(m)
    budget = dict(coeffs)
    budget[m.catalog.c_bc] = pinned
    budget[m.catalog.q_over] = -1.0
    m.lp.add_constraint("budget", budget, LE, q_star - constant)
    m.tag("budget", "budget")

    penalty = overrides.overrun_penalty
    if penalty is None:
        penalty = default_overrun_penalty(instance)
    if penalty <= 0:
        raise ModelBuildError("overrun penalty must be positive")
    m.lp.set_objective("max", {m.catalog.c_bc: 1.0, m.catalog.q_over: -penalty})
    return m
