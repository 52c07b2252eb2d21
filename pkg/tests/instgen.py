"""Randomized small system instances for oracle-equivalence tests."""

from __future__ import annotations

import numpy as np

from ldesval.domain import GeneratorSpec, StorageSpec, SystemInstance, validate_instance


def random_instance(rng: np.random.Generator) -> SystemInstance:
    """A valid instance with <=5 generators, <=2 storages, <=24 hours,
    always including gas and one long-duration candidate."""
    T = int(rng.integers(3, 13))
    demand = rng.uniform(5.0, 30.0, size=T)

    gens = [GeneratorSpec(
        id="gas0", technology="gas-cc", kind="firm", status="fixed",
        capacity_mw=float(rng.uniform(25.0, 60.0)), is_gas=True,
        provides_reserve=True,
        gen_cost_per_mwh=float(rng.uniform(3.0, 12.0)),
        reserve_cost_per_mw=float(rng.uniform(0.0, 2.0)),
        fom_cost_per_mw_yr=float(rng.uniform(0.0, 1.0)),
        reserve_factor=float(rng.uniform(0.2, 1.0)),
        ramp_up_factor=float(rng.uniform(0.5, 1.0)),
        ramp_down_factor=float(rng.uniform(0.5, 1.0)))]

    if rng.random() < 0.7:
        gens.append(GeneratorSpec(
            id="wind0", technology="wind-onshore", kind="renewable",
            status="fixed", capacity_mw=float(rng.uniform(5.0, 20.0)),
            provides_reserve=bool(rng.random() < 0.5),
            availability=tuple(rng.uniform(0.0, 1.0, size=T)),
            gen_cost_per_mwh=0.0,
            fom_cost_per_mw_yr=float(rng.uniform(0.0, 1.0)),
            reserve_factor=float(rng.uniform(0.0, 1.0))))
    if rng.random() < 0.7:
        gens.append(GeneratorSpec(
            id="solar0", technology="solar", kind="renewable",
            status="candidate",
            availability=tuple(rng.uniform(0.0, 1.0, size=T)),
            gen_cost_per_mwh=0.0,
            invest_cost_per_mw_yr=float(rng.uniform(0.5, 5.0)),
            fom_cost_per_mw_yr=float(rng.uniform(0.0, 0.5)),
            invest_limit_mw=float(rng.uniform(20.0, 80.0))))
    if rng.random() < 0.3:
        gens.append(GeneratorSpec(
            id="geo0", technology="geothermal", kind="firm", status="fixed",
            capacity_mw=float(rng.uniform(2.0, 10.0)),
            provides_reserve=bool(rng.random() < 0.5),
            gen_cost_per_mwh=float(rng.uniform(1.0, 6.0)),
            reserve_cost_per_mw=float(rng.uniform(0.0, 1.0)),
            reserve_factor=float(rng.uniform(0.2, 1.0))))

    storages = [StorageSpec(
        id="ldes0", duration_class="long", status="candidate",
        duration_h=float(rng.uniform(2.0, 6.0)),
        rte=float(rng.uniform(0.4, 1.0)),
        soc_min_mwh=0.0, soc_max_initial_mwh=0.0, power_initial_mw=0.0,
        fom_cost_per_mw_yr=0.0,
        invest_limit_power_mw=200.0, invest_limit_energy_mwh=2000.0)]
    if rng.random() < 0.5:
        storages.append(StorageSpec(
            id="sdes0", duration_class="short",
            status="candidate" if rng.random() < 0.5 else "fixed",
            power_mw=float(rng.uniform(2.0, 10.0)),
            power_initial_mw=0.0,
            duration_h=4.0, rte=float(rng.uniform(0.7, 0.95)),
            soc_min_mwh=0.0,
            soc_max_mwh=float(rng.uniform(10.0, 40.0)),
            soc_max_initial_mwh=0.0,
            fom_cost_per_mw_yr=float(rng.uniform(0.0, 0.5)),
            invest_cost_energy_per_mwh_yr=float(rng.uniform(0.1, 1.0)),
            invest_cost_power_per_mw_yr=float(rng.uniform(0.1, 2.0)),
            invest_limit_power_mw=float(rng.uniform(5.0, 30.0)),
            invest_limit_energy_mwh=float(rng.uniform(20.0, 120.0))))

    instance = SystemInstance(
        horizon_hours=T,
        demand_mwh=tuple(demand),
        reserve_req_mw=tuple(demand * float(rng.uniform(0.0, 0.15))),
        imbalance_cost=float(rng.uniform(100.0, 1000.0)),
        reserve_short_cost=float(rng.uniform(50.0, 500.0)),
        generators=tuple(gens),
        storages=tuple(storages),
    )
    assert validate_instance(instance).ok
    return instance
