"""Domain data types: generators, storages, system instances, asset index sets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

# A per-hour parameter: a scalar broadcasts to the horizon, a sequence must
# match the horizon length exactly.
Series = Union[float, int, Sequence[float]]

GENERATOR_KINDS = ("firm", "renewable")
ASSET_STATUSES = ("fixed", "candidate")
DURATION_CLASSES = ("short", "long")


def hourly(value: Series, horizon: int) -> np.ndarray:
    """Broadcast a scalar to an hourly series, or pass a series through."""
    if np.isscalar(value):
        return np.full(horizon, float(value))
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1 or len(arr) != horizon:
        raise ValueError(f"series length {arr.shape} does not match horizon {horizon}")
    return arr


@dataclass(frozen=True)
class GeneratorSpec:
    """One generator (or one clustered representative of many units)."""

    id: str
    technology: str
    kind: str                       # "firm" | "renewable"
    status: str                     # "fixed" | "candidate"
    capacity_mw: float = 0.0
    region: str = ""                # informational only
    is_gas: bool = False
    provides_reserve: bool = False
    invest_cost_per_mw_yr: float = 0.0
    fom_cost_per_mw_yr: float = 0.0
    gen_cost_per_mwh: Series = 0.0
    reserve_cost_per_mw: Series = 0.0
    availability: Series = 1.0      # hourly capacity factor, 1.0 for firm units
    reserve_factor: float = 1.0     # share of capacity usable as up reserve
    ramp_up_factor: float = 1.0     # per-hour ramp as share of capacity
    ramp_down_factor: float = 1.0
    invest_limit_mw: float = 0.0    # candidates only
    retire_min_frac: float = 0.0    # fixed firm units only
    retire_max_frac: float = 0.0


@dataclass(frozen=True)
class StorageSpec:
    """One storage system; candidates carry initial capacities plus limits."""

    id: str
    duration_class: str             # "short" | "long"
    status: str                     # "fixed" | "candidate"
    power_mw: float = 0.0           # fixed units
    power_initial_mw: float = 0.0   # candidates
    duration_h: float = 1.0
    rte: float = 1.0
    soc_min_mwh: float = 0.0
    soc_max_mwh: float = 0.0        # fixed units
    soc_max_initial_mwh: float = 0.0  # candidates
    fom_cost_per_mw_yr: float = 0.0
    invest_cost_energy_per_mwh_yr: float = 0.0
    invest_cost_power_per_mw_yr: float = 0.0
    invest_limit_power_mw: float = 0.0
    invest_limit_energy_mwh: float = 0.0


@dataclass(frozen=True)
class SystemInstance:
    """Complete description of one system over one hourly horizon."""

    horizon_hours: int
    demand_mwh: Tuple[float, ...]
    reserve_req_mw: Tuple[float, ...]
    imbalance_cost: float
    reserve_short_cost: float
    generators: Tuple[GeneratorSpec, ...] = ()
    storages: Tuple[StorageSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "demand_mwh", tuple(float(d) for d in np.atleast_1d(self.demand_mwh)))
        object.__setattr__(self, "reserve_req_mw", tuple(float(r) for r in np.atleast_1d(self.reserve_req_mw)))
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "storages", tuple(self.storages))

    def generator(self, gen_id: str) -> GeneratorSpec:
        for g in self.generators:
            if g.id == gen_id:
                return g
        raise KeyError(gen_id)

    def storage(self, st_id: str) -> StorageSpec:
        for h in self.storages:
            if h.id == st_id:
                return h
        raise KeyError(st_id)


@dataclass(frozen=True)
class PolicyOverrides:
    """Per-run policy knobs layered on top of the instance data.

    Any asset id absent from a mapping keeps the limits declared on its asset record.
    ``ldes_fixed_power_mw`` pins the power capacity of long-duration candidates
    (energy capacity follows from the duration).
    """

    gen_invest_cap_mw: Mapping[str, float] = field(default_factory=dict)
    storage_power_cap_mw: Mapping[str, float] = field(default_factory=dict)
    storage_energy_cap_mwh: Mapping[str, float] = field(default_factory=dict)
    retirement_window: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    ldes_fixed_power_mw: Mapping[str, float] = field(default_factory=dict)
    overrun_penalty: Optional[float] = None   # default derived from instance costs


@dataclass
class Violation:
    asset_id: str
    field: str
    message: str

    def __str__(self):
        return f"{self.asset_id}: {self.field}: {self.message}"


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, asset_id: str, field_name: str, message: str):
        self.violations.append(Violation(asset_id, field_name, message))

    def raise_if_invalid(self):
        if not self.ok:
            lines = "; ".join(str(v) for v in self.violations)
            raise ValueError(f"invalid system instance: {lines}")


def _check_fraction(report, asset_id, name, value, lo=0.0, hi=1.0, lo_open=False):
    if not math.isfinite(value) or value < lo or value > hi or (lo_open and value == lo):
        interval = ("(" if lo_open else "[") + f"{lo}, {hi}]"
        report.add(asset_id, name, f"value {value} outside {interval}")


def _check_series(report, asset_id, name, value, horizon, lo=None, hi=None):
    try:
        arr = hourly(value, horizon)
    except ValueError:
        report.add(asset_id, name, f"series length != horizon {horizon}")
        return None
    if not np.all(np.isfinite(arr)):
        report.add(asset_id, name, "non-finite entries")
    if lo is not None and np.any(arr < lo):
        report.add(asset_id, name, f"entries below {lo}")
    if hi is not None and np.any(arr > hi):
        report.add(asset_id, name, f"entries above {hi}")
    return arr


def validate_instance(instance: SystemInstance) -> ValidationReport:
    """Check every type invariant; an empty report means the instance is valid."""
    report = ValidationReport()
    T = instance.horizon_hours

    if T < 1:
        report.add("system", "horizon_hours", "at least one time period required")
        return report
    if len(instance.demand_mwh) != T:
        report.add("system", "demand_mwh", f"series length != horizon {T}")
    if len(instance.reserve_req_mw) != T:
        report.add("system", "reserve_req_mw", f"series length != horizon {T}")
    if instance.imbalance_cost < 0:
        report.add("system", "imbalance_cost", "must be >= 0")
    if instance.reserve_short_cost < 0:
        report.add("system", "reserve_short_cost", "must be >= 0")

    seen = set()
    for g in instance.generators:
        if g.id in seen:
            report.add(g.id, "id", "duplicate asset id")
        seen.add(g.id)
        if g.kind not in GENERATOR_KINDS:
            report.add(g.id, "kind", f"unknown kind {g.kind!r}")
        if g.status not in ASSET_STATUSES:
            report.add(g.id, "status", f"unknown status {g.status!r}")
        if g.capacity_mw < 0:
            report.add(g.id, "capacity_mw", "must be >= 0")
        if g.is_gas and not (g.kind == "firm" and g.status == "fixed"):
            report.add(g.id, "is_gas", "gas units must be firm and fixed")
        _check_series(report, g.id, "availability", g.availability, T, lo=0.0, hi=1.0)
        _check_series(report, g.id, "gen_cost_per_mwh", g.gen_cost_per_mwh, T)
        _check_series(report, g.id, "reserve_cost_per_mw", g.reserve_cost_per_mw, T)
        _check_fraction(report, g.id, "reserve_factor", g.reserve_factor)
        _check_fraction(report, g.id, "ramp_up_factor", g.ramp_up_factor)
        _check_fraction(report, g.id, "ramp_down_factor", g.ramp_down_factor)
        _check_fraction(report, g.id, "retire_min_frac", g.retire_min_frac)
        _check_fraction(report, g.id, "retire_max_frac", g.retire_max_frac)
        if g.retire_min_frac > g.retire_max_frac:
            report.add(g.id, "retire_min_frac", "exceeds retire_max_frac")
        if g.status == "candidate" and g.invest_limit_mw < 0:
            report.add(g.id, "invest_limit_mw", "must be >= 0")

    for h in instance.storages:
        if h.id in seen:
            report.add(h.id, "id", "duplicate asset id")
        seen.add(h.id)
        if h.duration_class not in DURATION_CLASSES:
            report.add(h.id, "duration_class", f"unknown class {h.duration_class!r}")
        if h.status not in ASSET_STATUSES:
            report.add(h.id, "status", f"unknown status {h.status!r}")
        _check_fraction(report, h.id, "rte", h.rte, lo=0.0, hi=1.0, lo_open=True)
        if h.duration_h <= 0:
            report.add(h.id, "duration_h", "must be > 0")
        if h.soc_min_mwh < 0:
            report.add(h.id, "soc_min_mwh", "must be >= 0")
        soc_cap = h.soc_max_mwh if h.status == "fixed" else h.soc_max_initial_mwh
        if h.soc_min_mwh > soc_cap:
            field_name = "soc_max_mwh" if h.status == "fixed" else "soc_max_initial_mwh"
            report.add(h.id, field_name, "below soc_min_mwh")
        for name in ("power_mw", "power_initial_mw", "invest_limit_power_mw",
                     "invest_limit_energy_mwh"):
            if getattr(h, name) < 0:
                report.add(h.id, name, "must be >= 0")

    return report


@dataclass(frozen=True)
class IndexSets:
    """Partition of the instance's assets into the model's index sets."""

    g_cand: Tuple[GeneratorSpec, ...]
    g_fixed: Tuple[GeneratorSpec, ...]
    g_firm_fixed: Tuple[GeneratorSpec, ...]
    g_renew_fixed: Tuple[GeneratorSpec, ...]
    g_firm_cand: Tuple[GeneratorSpec, ...]
    g_renew_cand: Tuple[GeneratorSpec, ...]
    g_gas_fixed: Tuple[GeneratorSpec, ...]
    g_res_providers: Tuple[GeneratorSpec, ...]
    h_fixed: Tuple[StorageSpec, ...]
    h_cand: Tuple[StorageSpec, ...]
    h_short_fixed: Tuple[StorageSpec, ...]
    h_long_fixed: Tuple[StorageSpec, ...]
    h_short_cand: Tuple[StorageSpec, ...]
    h_long_cand: Tuple[StorageSpec, ...]


def classify_assets(instance: SystemInstance) -> IndexSets:
    """Partition generators and storages; pure function of the instance."""
    gens = instance.generators
    sts = instance.storages

    def gsel(kind=None, status=None):
        return tuple(g for g in gens
                     if (kind is None or g.kind == kind)
                     and (status is None or g.status == status))

    def hsel(cls=None, status=None):
        return tuple(h for h in sts
                     if (cls is None or h.duration_class == cls)
                     and (status is None or h.status == status))

    return IndexSets(
        g_cand=gsel(status="candidate"),
        g_fixed=gsel(status="fixed"),
        g_firm_fixed=gsel(kind="firm", status="fixed"),
        g_renew_fixed=gsel(kind="renewable", status="fixed"),
        g_firm_cand=gsel(kind="firm", status="candidate"),
        g_renew_cand=gsel(kind="renewable", status="candidate"),
        g_gas_fixed=tuple(g for g in gens if g.is_gas and g.status == "fixed"),
        g_res_providers=tuple(g for g in gens if g.provides_reserve),
        h_fixed=hsel(status="fixed"),
        h_cand=hsel(status="candidate"),
        h_short_fixed=hsel(cls="short", status="fixed"),
        h_long_fixed=hsel(cls="long", status="fixed"),
        h_short_cand=hsel(cls="short", status="candidate"),
        h_long_cand=hsel(cls="long", status="candidate"),
    )


# --- serialization -----------------------------------------------------------

def instance_to_dict(instance: SystemInstance) -> dict:
    d = asdict(instance)
    for rec in d["generators"]:
        for key in ("gen_cost_per_mwh", "reserve_cost_per_mw", "availability"):
            if not np.isscalar(rec[key]):
                rec[key] = [float(x) for x in rec[key]]
    d["demand_mwh"] = list(d["demand_mwh"])
    d["reserve_req_mw"] = list(d["reserve_req_mw"])
    return d


def instance_from_dict(d: dict) -> SystemInstance:
    gens = tuple(GeneratorSpec(**rec) for rec in d.get("generators", ()))
    sts = tuple(StorageSpec(**rec) for rec in d.get("storages", ()))
    return SystemInstance(
        horizon_hours=int(d["horizon_hours"]),
        demand_mwh=tuple(d["demand_mwh"]),
        reserve_req_mw=tuple(d["reserve_req_mw"]),
        imbalance_cost=float(d["imbalance_cost"]),
        reserve_short_cost=float(d["reserve_short_cost"]),
        generators=gens,
        storages=sts,
    )


def instance_to_json(instance: SystemInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2, sort_keys=True)


def instance_from_json(text: str) -> SystemInstance:
    return instance_from_dict(json.loads(text))
