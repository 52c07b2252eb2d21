"""CSV ingestion, generator clustering, and system assembly.

Input schema (headers are mandatory, hours are dense 1..T):
  generators.csv   one row per unit; see GENERATOR_COLUMNS
  storages.csv     one row per storage system; see STORAGE_COLUMNS
  demand.csv       hour, mw
  availability.csv asset_id, hour, factor   (capacity factors in [0, 1])
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .domain import (GeneratorSpec, StorageSpec, SystemInstance, hourly,
                     validate_instance)


class DataError(ValueError):
    """Input file fails schema or range validation."""

    def __init__(self, source: str, message: str):
        self.source = source
        super().__init__(f"{source}: {message}")


GENERATOR_COLUMNS = [
    "id", "technology", "region", "kind", "status", "is_gas",
    "provides_reserve", "capacity_mw", "invest_cost_per_mw_yr",
    "fom_cost_per_mw_yr", "gen_cost_per_mwh", "reserve_cost_per_mw",
    "reserve_factor", "ramp_up_factor", "ramp_down_factor", "invest_limit_mw",
    "retire_min_frac", "retire_max_frac", "availability_id",
]

STORAGE_COLUMNS = [
    "id", "duration_class", "status", "power_mw", "power_initial_mw",
    "duration_h", "rte", "soc_min_mwh", "soc_max_mwh", "soc_max_initial_mwh",
    "fom_cost_per_mw_yr", "invest_cost_energy_per_mwh_yr",
    "invest_cost_power_per_mw_yr", "invest_limit_power_mw",
    "invest_limit_energy_mwh",
]

_GEN_NUMERIC = [
    "capacity_mw", "invest_cost_per_mw_yr", "fom_cost_per_mw_yr",
    "gen_cost_per_mwh", "reserve_cost_per_mw", "reserve_factor",
    "ramp_up_factor", "ramp_down_factor", "invest_limit_mw",
    "retire_min_frac", "retire_max_frac",
]

_TRUE = {"true", "1", "yes", "y"}
_FALSE = {"false", "0", "no", "n", ""}


@dataclass
class RawTables:
    generators: pd.DataFrame
    storages: pd.DataFrame
    demand: np.ndarray                       # hourly MW, index 0 is hour 1
    availability: Dict[str, np.ndarray]      # series id -> hourly factor


def _read_csv(path: str, required: Sequence[str]) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str).fillna("")
    except FileNotFoundError:
        raise DataError(path, "file not found")
    except Exception as exc:
        raise DataError(path, f"unreadable CSV: {exc}")
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise DataError(path, f"missing columns: {', '.join(missing)}")
    return df


def _numeric(df: pd.DataFrame, columns: Sequence[str], path: str) -> pd.DataFrame:
    out = df.copy()
    for col in columns:
        converted = pd.to_numeric(out[col].replace("", "0"), errors="coerce")
        if converted.isna().any():
            row = int(converted.index[converted.isna()][0]) + 2  # header is line 1

            raise DataError(path, f"non-numeric value in column {col!r}, line {row}")
        out[col] = converted.astype(float)
    return out


def _bool_column(df: pd.DataFrame, col: str, path: str) -> pd.Series:
    def parse(v):
        s = str(v).strip().lower()
        if s in _TRUE:
            return True
        if s in _FALSE:
            return False
        raise DataError(path, f"non-boolean value {v!r} in column {col!r}")
    return df[col].map(parse)


def _dense_hourly(df: pd.DataFrame, hour_col: str, value_col: str,
                  path: str, label: str = "") -> np.ndarray:
    hours = df[hour_col].to_numpy()
    prefix = f"{label}: " if label else ""
    if len(hours) == 0:
        raise DataError(path, f"{prefix}empty series")
    expected = np.arange(1, len(hours) + 1)
    if not np.array_equal(hours, expected):
        raise DataError(path, f"{prefix}hour index not dense 1..{len(hours)}")
    return df[value_col].to_numpy(dtype=float)


def load_system(generators_csv: str, storages_csv: str, demand_csv: str,
                availability_csv: Optional[str] = None) -> RawTables:
    """Read and validate the four input tables."""
    gens = _read_csv(generators_csv, GENERATOR_COLUMNS)
    gens = _numeric(gens, _GEN_NUMERIC, generators_csv)
    gens["is_gas"] = _bool_column(gens, "is_gas", generators_csv)
    gens["provides_reserve"] = _bool_column(gens, "provides_reserve", generators_csv)

    sts = _read_csv(storages_csv, STORAGE_COLUMNS)
    sts = _numeric(sts, STORAGE_COLUMNS[3:], storages_csv)

    dem = _read_csv(demand_csv, ["hour", "mw"])
    dem = _numeric(dem, ["hour", "mw"], demand_csv)
    demand = _dense_hourly(dem, "hour", "mw", demand_csv)
    T = len(demand)

    availability: Dict[str, np.ndarray] = {}
    if availability_csv is not None:
        av = _read_csv(availability_csv, ["asset_id", "hour", "factor"])
        av = _numeric(av, ["hour", "factor"], availability_csv)
        for asset_id, group in av.groupby("asset_id", sort=False):
            series = _dense_hourly(group.sort_values("hour"), "hour", "factor",
                                   availability_csv, label=str(asset_id))
            if len(series) != T:
                raise DataError(availability_csv,
                                f"{asset_id}: series length {len(series)} != horizon {T}")
            if series.min() < 0.0 or series.max() > 1.0:
                row = int(np.argmax((series < 0) | (series > 1))) + 1
                raise DataError(availability_csv,
                                f"{asset_id}: factor outside [0, 1] at hour {row}")
            availability[str(asset_id)] = series

    for _, row in gens.iterrows():
        ref = str(row["availability_id"]).strip()
        if ref and ref not in availability:
            raise DataError(generators_csv,
                            f"generator {row['id']!r} references unknown "
                            f"availability series {ref!r}")

    return RawTables(generators=gens, storages=sts, demand=demand,
                     availability=availability)


# --- one-dimensional clustering ----------------------------------------------

def kmeans_1d(values: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    """Exact weighted 1-D k-means by dynamic programming over sorted values.

    Returns a cluster label per input point. Optimal clusters of a 1-D
    k-means objective are contiguous in sorted order, so the DP is exact and
    fully deterministic. Duplicate centroids cannot arise (fewer effective
    clusters are returned instead).
    """
    n = len(values)
    k = min(k, n)
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=float)[order]
    w = np.asarray(weights, dtype=float)[order]
    if w.sum() <= 0:
        w = np.ones(n)

    # prefix sums for O(1) weighted SSE of any contiguous segment
    cw = np.concatenate([[0.0], np.cumsum(w)])
    cwv = np.concatenate([[0.0], np.cumsum(w * v)])
    cwv2 = np.concatenate([[0.0], np.cumsum(w * v * v)])

    def sse(i, j):  # segment [i, j), half-open
        wt = cw[j] - cw[i]
        if wt <= 0:
            return 0.0
        s = cwv[j] - cwv[i]
        return max(0.0, (cwv2[j] - cwv2[i]) - s * s / wt)

    # distinct values cap the useful number of clusters
    k = min(k, len(np.unique(v)))

    cost = np.full((k + 1, n + 1), np.inf)
    split = np.zeros((k + 1, n + 1), dtype=int)
    cost[0, 0] = 0.0
    for c in range(1, k + 1):
        for j in range(c, n + 1):
            for i in range(c - 1, j):
                cand = cost[c - 1, i] + sse(i, j)
                if cand < cost[c, j] - 1e-15:
                    cost[c, j] = cand
                    split[c, j] = i

    labels_sorted = np.zeros(n, dtype=int)
    j = n
    for c in range(k, 0, -1):
        i = split[c, j]
        labels_sorted[i:j] = c - 1
        j = i

    labels = np.zeros(n, dtype=int)
    labels[order] = labels_sorted
    return labels


def _weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    total = weights.sum()
    if total <= 0:
        return float(np.mean(values))
    return float(np.dot(values, weights) / total)


def cluster_generators(generators: Sequence[GeneratorSpec],
                       k_per_group: int,
                       horizon: int) -> List[GeneratorSpec]:
    """Aggregate generators into k cost-clustered representatives per
    (technology, region) group.

    Clustering is on the time-averaged generation cost; every other numeric
    parameter aggregates by capacity-weighted mean, capacities by sum.
    """
    if k_per_group < 1:
        raise ValueError("k_per_group must be >= 1")

    groups: Dict[Tuple[str, str], List[GeneratorSpec]] = {}
    for g in generators:
        groups.setdefault((g.technology, g.region), []).append(g)

    out: List[GeneratorSpec] = []
    for (tech, region), members in groups.items():
        costs = np.array([float(np.mean(hourly(g.gen_cost_per_mwh, horizon)))
                          for g in members])
        caps = np.array([g.capacity_mw for g in members])
        labels = kmeans_1d(costs, caps, k_per_group)
        for cluster_id in sorted(set(labels)):
            sel = [m for m, lab in zip(members, labels) if lab == cluster_id]
            if len(sel) == 1:
                rep = replace(sel[0], id=f"{sel[0].id}")
                out.append(rep)
                continue
            w = np.array([m.capacity_mw for m in sel])
            def wmean(attr):
                return _weighted_mean(np.array([getattr(m, attr) for m in sel]), w)
            cost_series = np.stack([hourly(m.gen_cost_per_mwh, horizon) for m in sel])
            res_series = np.stack([hourly(m.reserve_cost_per_mw, horizon) for m in sel])
            avail_series = np.stack([hourly(m.availability, horizon) for m in sel])
            wn = w / w.sum() if w.sum() > 0 else np.full(len(sel), 1.0 / len(sel))
            rep = GeneratorSpec(
                id=f"{tech}-{region}-c{cluster_id}" if region else f"{tech}-c{cluster_id}",
                technology=tech,
                region=region,
                kind=sel[0].kind,
                status=sel[0].status,
                is_gas=all(m.is_gas for m in sel),
                provides_reserve=any(m.provides_reserve for m in sel),
                capacity_mw=math.fsum(m.capacity_mw for m in sel),
                invest_cost_per_mw_yr=wmean("invest_cost_per_mw_yr"),
                fom_cost_per_mw_yr=wmean("fom_cost_per_mw_yr"),
                gen_cost_per_mwh=tuple(wn @ cost_series),
                reserve_cost_per_mw=tuple(wn @ res_series),
                availability=tuple(wn @ avail_series),
                reserve_factor=wmean("reserve_factor"),
                ramp_up_factor=wmean("ramp_up_factor"),
                ramp_down_factor=wmean("ramp_down_factor"),
                invest_limit_mw=math.fsum(m.invest_limit_mw for m in sel),
                retire_min_frac=wmean("retire_min_frac"),
                retire_max_frac=wmean("retire_max_frac"),
            )
            out.append(rep)
    return out


def derive_reserve_requirement(demand: np.ndarray, fraction: float) -> np.ndarray:
    """Hourly up-reserve requirement as a fixed fraction of demand."""
    if fraction < 0:
        raise ValueError("reserve fraction must be >= 0")
    return np.asarray(demand, dtype=float) * fraction


def mirror_candidates(renewables: Sequence[GeneratorSpec],
                      invest_limit_by_tech: Optional[Mapping[str, float]] = None,
                      ) -> List[GeneratorSpec]:
    """Candidate clone per existing renewable: zero capacity, investment
    limited by the source's installed capacity unless overridden per tech."""
    limits = invest_limit_by_tech or {}
    out = []
    for g in renewables:
        out.append(replace(
            g,
            id=f"{g.id}-cand",
            status="candidate",
            capacity_mw=0.0,
            is_gas=False,
            invest_limit_mw=float(limits.get(g.technology, g.capacity_mw)),
            retire_min_frac=0.0,
            retire_max_frac=0.0,
        ))
    return out


@dataclass
class PipelineOptions:
    reserve_fraction: float = 0.15
    cluster: bool = True
    k_per_group: int = 3
    mirror: bool = True
    invest_limit_by_tech: Dict[str, float] = field(default_factory=dict)
    imbalance_cost: float = 10000.0
    reserve_short_cost: float = 10000.0
    extra_storages: List[StorageSpec] = field(default_factory=list)


def _generator_from_row(row, availability: Dict[str, np.ndarray]) -> GeneratorSpec:
    ref = str(row["availability_id"]).strip()
    avail = tuple(availability[ref]) if ref else 1.0
    return GeneratorSpec(
        id=str(row["id"]),
        technology=str(row["technology"]),
        region=str(row["region"]),
        kind=str(row["kind"]),
        status=str(row["status"]),
        is_gas=bool(row["is_gas"]),
        provides_reserve=bool(row["provides_reserve"]),
        capacity_mw=float(row["capacity_mw"]),
        invest_cost_per_mw_yr=float(row["invest_cost_per_mw_yr"]),
        fom_cost_per_mw_yr=float(row["fom_cost_per_mw_yr"]),
        gen_cost_per_mwh=float(row["gen_cost_per_mwh"]),
        reserve_cost_per_mw=float(row["reserve_cost_per_mw"]),
        availability=avail,
        reserve_factor=float(row["reserve_factor"]),
        ramp_up_factor=float(row["ramp_up_factor"]),
        ramp_down_factor=float(row["ramp_down_factor"]),
        invest_limit_mw=float(row["invest_limit_mw"]),
        retire_min_frac=float(row["retire_min_frac"]),
        retire_max_frac=float(row["retire_max_frac"]),
    )


def _storage_from_row(row) -> StorageSpec:
    kwargs = {col: (str(row[col]) if col in ("id", "duration_class", "status")
                    else float(row[col]))
              for col in STORAGE_COLUMNS}
    return StorageSpec(**kwargs)


def assemble_instance(raw: RawTables,
                      options: Optional[PipelineOptions] = None) -> SystemInstance:
    """Cluster, mirror, and compose the tables into a validated instance."""
    options = options or PipelineOptions()
    T = len(raw.demand)

    gens = [_generator_from_row(row, raw.availability)
            for _, row in raw.generators.iterrows()]
    if options.cluster:
        fixed = [g for g in gens if g.status == "fixed"]
        rest = [g for g in gens if g.status != "fixed"]
        gens = cluster_generators(fixed, options.k_per_group, T) + rest
    if options.mirror:
        renewables = [g for g in gens
                      if g.kind == "renewable" and g.status == "fixed"]
        gens = gens + mirror_candidates(renewables, options.invest_limit_by_tech)

    storages = [_storage_from_row(row) for _, row in raw.storages.iterrows()]
    storages.extend(options.extra_storages)

    instance = SystemInstance(
        horizon_hours=T,
        demand_mwh=tuple(raw.demand),
        reserve_req_mw=tuple(derive_reserve_requirement(raw.demand,
                                                        options.reserve_fraction)),
        imbalance_cost=options.imbalance_cost,
        reserve_short_cost=options.reserve_short_cost,
        generators=tuple(gens),
        storages=tuple(storages),
    )
    validate_instance(instance).raise_if_invalid()
    return instance
