import itertools
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldesval.domain import GeneratorSpec, StorageSpec
from ldesval.engine import run_baseline, toy_a
from ldesval.pipeline import (DataError, PipelineOptions, assemble_instance,
                              cluster_generators, derive_reserve_requirement,
                              kmeans_1d, load_system, mirror_candidates)


# --- fixture CSVs -------------------------------------------------------------

GEN_HEADER = ("id,technology,region,kind,status,is_gas,provides_reserve,"
              "capacity_mw,invest_cost_per_mw_yr,fom_cost_per_mw_yr,"
              "gen_cost_per_mwh,reserve_cost_per_mw,reserve_factor,"
              "ramp_up_factor,ramp_down_factor,invest_limit_mw,"
              "retire_min_frac,retire_max_frac,availability_id")

ST_HEADER = ("id,duration_class,status,power_mw,power_initial_mw,duration_h,"
             "rte,soc_min_mwh,soc_max_mwh,soc_max_initial_mwh,"
             "fom_cost_per_mw_yr,invest_cost_energy_per_mwh_yr,"
             "invest_cost_power_per_mw_yr,invest_limit_power_mw,"
             "invest_limit_energy_mwh")


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text).lstrip())
    return str(path)


@pytest.fixture
def csv_inputs(tmp_path):
    gens = _write(tmp_path, "generators.csv", f"""
        {GEN_HEADER}
        gas1,gas-cc,north,firm,fixed,true,true,20,0,0,5,1,0.5,1,1,0,0,1,
        wind1,wind-onshore,north,renewable,fixed,false,false,8,0,0,0,0,0,1,1,0,0,0,wind-n
    """)
    sts = _write(tmp_path, "storages.csv", f"""
        {ST_HEADER}
        bat1,short,fixed,4,0,4,0.85,0,16,0,0,0,0,0,0
    """)
    dem = _write(tmp_path, "demand.csv", """
        hour,mw
        1,10
        2,12
        3,9
    """)
    avail = _write(tmp_path, "availability.csv", """
        asset_id,hour,factor
        wind-n,1,0.5
        wind-n,2,0.25
        wind-n,3,1.0
    """)
    return gens, sts, dem, avail


def test_load_system_happy_path(csv_inputs):
    raw = load_system(*csv_inputs)
    assert list(raw.generators["id"]) == ["gas1", "wind1"]
    assert raw.demand.tolist() == [10.0, 12.0, 9.0]
    assert raw.availability["wind-n"].tolist() == [0.5, 0.25, 1.0]
    assert bool(raw.generators["is_gas"][0]) is True


def test_missing_column_reported(tmp_path, csv_inputs):
    gens, sts, dem, avail = csv_inputs
    bad = _write(tmp_path, "bad_gens.csv", "id,technology\nx,gas-cc\n")
    with pytest.raises(DataError, match="missing columns"):
        load_system(bad, sts, dem, avail)


def test_non_numeric_cell_names_line(tmp_path, csv_inputs):
    gens, sts, dem, avail = csv_inputs
    bad = _write(tmp_path, "bad_dem.csv", "hour,mw\n1,10\n2,lots\n")
    with pytest.raises(DataError, match="line 3"):
        load_system(gens, sts, bad, avail)


def test_sparse_hours_rejected(tmp_path, csv_inputs):
    gens, sts, dem, avail = csv_inputs
    bad = _write(tmp_path, "bad_dem.csv", "hour,mw\n1,10\n3,9\n")
    with pytest.raises(DataError, match="dense"):
        load_system(gens, sts, bad, avail)


def test_availability_out_of_range(tmp_path, csv_inputs):
    gens, sts, dem, avail = csv_inputs
    bad = _write(tmp_path, "bad_av.csv", """
        asset_id,hour,factor
        wind-n,1,0.5
        wind-n,2,1.3
        wind-n,3,1.0
    """)
    with pytest.raises(DataError, match=r"outside \[0, 1\] at hour 2"):
        load_system(gens, sts, dem, bad)


def test_unknown_availability_reference(tmp_path, csv_inputs):
    gens, sts, dem, avail = csv_inputs
    bad = _write(tmp_path, "bad_gens.csv", f"""
        {GEN_HEADER}
        wind1,wind-onshore,north,renewable,fixed,false,false,8,0,0,0,0,0,1,1,0,0,0,ghost
    """)
    with pytest.raises(DataError, match="ghost"):
        load_system(bad, sts, dem, avail)


def test_availability_length_mismatch(tmp_path, csv_inputs):
    gens, sts, dem, avail = csv_inputs
    bad = _write(tmp_path, "bad_av.csv", """
        asset_id,hour,factor
        wind-n,1,0.5
        wind-n,2,1.0
    """)
    with pytest.raises(DataError, match="length 2 != horizon 3"):
        load_system(gens, sts, dem, bad)


# --- clustering ---------------------------------------------------------------

def _sse_of_labels(values, weights, labels):
    total = 0.0
    for lab in set(labels):
        sel = labels == lab
        w = weights[sel]
        v = values[sel]
        mean = np.dot(v, w) / w.sum()
        total += float(np.dot(w, (v - mean) ** 2))
    return total


def _brute_force_sse(values, weights, k):
    """Minimum weighted SSE over every assignment of n points to <= k groups."""
    n = len(values)
    best = np.inf
    for labels in itertools.product(range(k), repeat=n):
        labels = np.array(labels)
        used = [lab for lab in range(k) if (labels == lab).any()]
        if not used:
            continue
        best = min(best, _sse_of_labels(values, weights, labels))
    return best


def test_kmeans_simple_split():
    values = np.array([10.0, 10.0, 50.0])
    labels = kmeans_1d(values, np.ones(3), 2)
    assert labels[0] == labels[1] != labels[2]


def test_kmeans_k_not_less_than_n_gives_singletons():
    values = np.array([1.0, 2.0, 3.0])
    labels = kmeans_1d(values, np.ones(3), 5)
    assert len(set(labels)) == 3


def test_kmeans_identical_values_single_cluster():
    labels = kmeans_1d(np.full(4, 7.0), np.ones(4), 3)
    assert len(set(labels)) == 1


def test_kmeans_matches_brute_force_small_groups():
    rng = np.random.default_rng(7)
    for trial in range(30):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, 4))
        values = rng.uniform(0.0, 100.0, size=n)
        weights = rng.uniform(0.5, 10.0, size=n)
        labels = kmeans_1d(values, weights, k)
        sse = _sse_of_labels(values, weights, np.array(labels))
        best = _brute_force_sse(values, weights, k)
        assert sse == pytest.approx(best, rel=1e-9, abs=1e-9), (trial, values, k)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1000.0), min_size=1, max_size=12),
       st.integers(1, 4))
def test_kmeans_labels_contiguous_in_sorted_order(values, k):
    values = np.array(values)
    labels = kmeans_1d(values, np.ones(len(values)), k)
    order = np.argsort(values, kind="stable")
    sorted_labels = labels[order]
    # contiguity: each cluster occupies one run of the sorted sequence
    seen = []
    for lab in sorted_labels:
        if not seen or seen[-1] != lab:
            assert lab not in seen
            seen.append(lab)


def _gen(i, tech, region, cap, cost):
    return GeneratorSpec(id=f"g{i}", technology=tech, region=region,
                         kind="firm", status="fixed", capacity_mw=cap,
                         gen_cost_per_mwh=cost, provides_reserve=True,
                         reserve_cost_per_mw=cost / 10.0,
                         fom_cost_per_mw_yr=1.0 + cost)


def test_cluster_conserves_capacity_and_mean_cost():
    rng = np.random.default_rng(11)
    gens = []
    for i in range(30):
        tech = ("gas-cc", "coal", "hydro")[i % 3]
        region = ("north", "south")[i % 2]
        gens.append(_gen(i, tech, region, float(rng.uniform(5, 80)),
                         float(rng.uniform(1, 40))))
    clustered = cluster_generators(gens, k_per_group=3, horizon=4)

    def totals(items):
        caps, costs = {}, {}
        for g in items:
            key = (g.technology, g.region)
            cap = g.capacity_mw
            cost = float(np.mean(np.atleast_1d(np.asarray(g.gen_cost_per_mwh))))
            caps[key] = caps.get(key, 0.0) + cap
            costs[key] = costs.get(key, 0.0) + cap * cost
        return caps, costs

    caps_in, costs_in = totals(gens)
    caps_out, costs_out = totals(clustered)
    for key in caps_in:
        assert caps_out[key] == pytest.approx(caps_in[key], rel=1e-12)
        assert costs_out[key] == pytest.approx(costs_in[key], rel=1e-9)
    # at most k representatives per group
    per_group = {}
    for g in clustered:
        per_group[(g.technology, g.region)] = per_group.get(
            (g.technology, g.region), 0) + 1
    assert all(count <= 3 for count in per_group.values())


def test_singleton_cluster_passes_through_unchanged():
    g = _gen(0, "nuclear", "west", 42.0, 9.0)
    out = cluster_generators([g], k_per_group=3, horizon=2)
    assert out == [g]


def test_cluster_rejects_bad_k():
    with pytest.raises(ValueError):
        cluster_generators([], k_per_group=0, horizon=1)


# --- derived inputs -----------------------------------------------------------

def test_reserve_requirement_fraction():
    demand = np.array([100.0, 80.0])
    assert derive_reserve_requirement(demand, 0.15).tolist() == [15.0, 12.0]
    assert derive_reserve_requirement(demand, 0.0).tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        derive_reserve_requirement(demand, -0.1)


def test_mirror_candidates():
    wind = GeneratorSpec(id="wind1", technology="wind-onshore",
                         kind="renewable", status="fixed", capacity_mw=50.0,
                         availability=(0.3, 0.7))
    [cand] = mirror_candidates([wind])
    assert cand.id == "wind1-cand"
    assert cand.status == "candidate"
    assert cand.capacity_mw == 0.0
    assert cand.invest_limit_mw == 50.0
    assert cand.availability == wind.availability
    [capped] = mirror_candidates([wind], {"wind-onshore": 200.0})
    assert capped.invest_limit_mw == 200.0


# --- assembly -----------------------------------------------------------------

def test_assemble_instance_defaults(csv_inputs):
    raw = load_system(*csv_inputs)
    inst = assemble_instance(raw)
    assert inst.horizon_hours == 3
    assert inst.reserve_req_mw == pytest.approx((1.5, 1.8, 1.35))
    ids = [g.id for g in inst.generators]
    assert "gas1" in ids and "wind1" in ids and "wind1-cand" in ids
    assert [h.id for h in inst.storages] == ["bat1"]


def test_assemble_no_mirror_no_cluster(csv_inputs):
    raw = load_system(*csv_inputs)
    inst = assemble_instance(raw, PipelineOptions(cluster=False, mirror=False))
    assert [g.id for g in inst.generators] == ["gas1", "wind1"]


def test_assemble_extra_storages(csv_inputs):
    raw = load_system(*csv_inputs)
    ldes = StorageSpec(id="ldes-x", duration_class="long", status="candidate",
                       duration_h=100.0, rte=0.425, soc_max_initial_mwh=0.0,
                       power_initial_mw=0.0, invest_limit_power_mw=75000.0,
                       invest_limit_energy_mwh=7.5e6)
    inst = assemble_instance(raw, PipelineOptions(extra_storages=[ldes]))
    assert inst.storages[-1].id == "ldes-x"


def test_assembled_instance_solves(csv_inputs):
    raw = load_system(*csv_inputs)
    inst = assemble_instance(raw)
    result = run_baseline(inst)
    assert result.q_star >= 0.0


def test_assemble_matches_toy_reserve_rule():
    demand = np.array(toy_a().demand_mwh)
    req = derive_reserve_requirement(demand, 0.15)
    assert req.tolist() == [1.5, 1.5, 1.5]
