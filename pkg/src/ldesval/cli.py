"""Command-line entry points: baseline, opportunity, sweep, emit-model, check.

Exit codes: 0 ok, 2 input error, 3 solver error, 4 partial sweep.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import asdict
from typing import Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .domain import StorageSpec, SystemInstance, validate_instance
from .engine import (BaselineResult, BoundaryCurvePoint, EngineError,
                     run_baseline, run_opportunity, sweep_boundary_curve,
                     toy_a, toy_b)
from .lpcore import SolverConfig, check_solution, solve, SolveOutcome
from .model import (build_baseline_model, build_opportunity_model,
                    ModelBuildError)
from .engine import baseline_policy, decarbonization_policy
from .mps import emit_standard_form, parse_standard_form
from .pipeline import DataError, PipelineOptions, assemble_instance, load_system

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_PARTIAL = 4

_TOYS = {"TOY-A": toy_a, "TOY-B": toy_b}


class InputError(ValueError):
    pass


# --- config ------------------------------------------------------------------

def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise InputError(f"config parse error: {exc}")
    if not isinstance(cfg, dict):
        raise InputError("config root must be a mapping")
    cfg["_config_path"] = os.path.abspath(path)
    return cfg


def _resolve(cfg: dict, rel: str) -> str:
    base = os.path.dirname(cfg.get("_config_path", os.getcwd()))
    return os.path.join(base, rel)


def instance_from_config(cfg: dict) -> SystemInstance:
    system = cfg.get("system") or {}
    toy = system.get("toy")
    if toy:
        if toy not in _TOYS:
            raise InputError(f"unknown toy system {toy!r}")
        return _TOYS[toy]()

    for key in ("generators", "storages", "demand"):
        if key not in system:
            raise InputError(f"system config missing {key!r} (or a 'toy' entry)")
    raw = load_system(
        _resolve(cfg, system["generators"]),
        _resolve(cfg, system["storages"]),
        _resolve(cfg, system["demand"]),
        _resolve(cfg, system["availability"]) if system.get("availability") else None,
    )
    pipe = cfg.get("pipeline") or {}
    extra = [StorageSpec(**rec) for rec in pipe.get("extra_storages", [])]
    options = PipelineOptions(
        reserve_fraction=float(pipe.get("reserve_fraction", 0.15)),
        cluster=bool(pipe.get("cluster", True)),
        k_per_group=int(pipe.get("k_per_group", 3)),
        mirror=bool(pipe.get("mirror", True)),
        invest_limit_by_tech=dict(pipe.get("invest_limit_by_tech", {})),
        imbalance_cost=float(pipe.get("imbalance_cost", 10000.0)),
        reserve_short_cost=float(pipe.get("reserve_short_cost", 10000.0)),
        extra_storages=extra,
    )
    return assemble_instance(raw, options)


def solver_from_args(cfg: dict, args) -> SolverConfig:
    section = cfg.get("solver") or {}
    backend = (args.solver or os.environ.get("LDESVAL_SOLVER")
               or section.get("backend", "highs"))
    tol = args.tol if args.tol is not None else section.get("feasibility_tol", 1e-8)
    return SolverConfig(
        backend=backend,
        feasibility_tol=float(tol),
        optimality_tol=float(section.get("optimality_tol", 1e-8)),
        time_limit_s=section.get("time_limit_s"),
        threads=args.workers,
    )


# --- output helpers ----------------------------------------------------------

def _atomic_write(path: str, data: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_json(path: str, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_table(path: str, header: Sequence[str], rows: Sequence[Sequence]):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                         else v for v in row])
    _atomic_write(path, buf.getvalue())


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(cfg: dict, solver: SolverConfig,
                   stage_seconds: Dict[str, float]) -> dict:
    inputs = {}
    system = cfg.get("system") or {}
    for key in ("generators", "storages", "demand", "availability"):
        rel = system.get(key)
        if rel:
            path = _resolve(cfg, rel)
            if os.path.exists(path):
                inputs[rel] = _sha256_file(path)
    config_path = cfg.get("_config_path")
    return {
        "engine_version": __version__,
        "config_sha256": _sha256_file(config_path) if config_path else "",
        "input_sha256": inputs,
        "solver": {"backend": solver.backend,
                   "feasibility_tol": solver.feasibility_tol,
                   "optimality_tol": solver.optimality_tol},
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "stage_seconds": {k: round(v, 6) for k, v in stage_seconds.items()},
    }


def _dispatch_rows(result: BaselineResult) -> List[List]:
    cat = result.artifacts.catalog
    x = result.outcome.x
    rows = []
    for family, handles in (("p", cat.p), ("r_up", cat.r_up), ("p_ch", cat.p_ch),
                            ("p_dis", cat.p_dis), ("v", cat.v)):
        for (asset, t), idx in handles.items():
            rows.append([asset, t, family, float(x[idx])])
    return rows


def _write_baseline_outputs(out_dir: str, result: BaselineResult):
    write_json(os.path.join(out_dir, "baseline_result.json"), {
        "objective": result.q_star,
        "cost_breakdown": result.breakdown.as_dict(),
    })
    bd = result.breakdown.as_dict()
    write_table(os.path.join(out_dir, "cost_breakdown.csv"),
                ["category", "cost_usd"], [[k, v] for k, v in bd.items()])
    write_table(os.path.join(out_dir, "dispatch.csv"),
                ["asset_id", "hour", "variable", "value"],
                _dispatch_rows(result))


def _curve_rows(points: Sequence[BoundaryCurvePoint]) -> List[List]:
    rows = []
    for p in points:
        if p.status != "ok":
            rows.append([p.ldes_power_mw / 1000.0, "", "", "", p.status])
            continue
        rows.append([p.ldes_power_mw / 1000.0, p.boundary_cost_per_kw,
                     int(p.viable), p.budget_overrun, p.status])
    return rows


def _write_sweep_outputs(out_dir: str, points: Sequence[BoundaryCurvePoint],
                         q_star: float):
    write_table(os.path.join(out_dir, "boundary_curve.csv"),
                ["capacity_gw", "boundary_cost_usd_per_kw", "viable",
                 "q_over_usd", "status"],
                _curve_rows(points))

    mix_rows, red_rows, dec_rows, soc_rows = [], [], [], []
    for p in points:
        if p.status != "ok":
            continue
        for tech, mw in sorted(p.plan.renewables_mw_by_tech.items()):
            mix_rows.append([p.ldes_power_mw, tech, mw])
        mix_rows.append([p.ldes_power_mw, "sdes_power_mw", p.plan.sdes_power_mw])
        mix_rows.append([p.ldes_power_mw, "sdes_energy_mwh", p.plan.sdes_energy_mwh])
        red_rows.append([p.ldes_power_mw, p.net_cost_reduction, q_star])
        for cat_name, val in p.breakdown.as_dict().items():
            dec_rows.append([p.ldes_power_mw, cat_name, val])
        if p.outcome is not None and p.artifacts is not None:
            cat = p.artifacts.catalog
            for (hid, t), idx in cat.v.items():
                soc_rows.append([p.ldes_power_mw, hid, t, float(p.outcome.x[idx])])

    write_table(os.path.join(out_dir, "investment_mix.csv"),
                ["ldes_power_mw", "item", "value"], mix_rows)
    write_table(os.path.join(out_dir, "cost_reduction.csv"),
                ["ldes_power_mw", "net_cost_reduction_usd", "q_star_usd"], red_rows)
    write_table(os.path.join(out_dir, "decomposition.csv"),
                ["ldes_power_mw", "category", "cost_usd"], dec_rows)
    write_table(os.path.join(out_dir, "soc_series.csv"),
                ["ldes_power_mw", "storage_id", "hour", "soc_mwh"], soc_rows)


# --- commands ----------------------------------------------------------------

def cmd_baseline(cfg: dict, args) -> int:
    solver = solver_from_args(cfg, args)
    out_dir = args.out_dir
    t0 = time.perf_counter()
    instance = instance_from_config(cfg)
    t1 = time.perf_counter()
    result = run_baseline(instance, solver)
    t2 = time.perf_counter()
    _write_baseline_outputs(out_dir, result)
    write_json(os.path.join(out_dir, "manifest.json"),
               build_manifest(cfg, solver, {"load": t1 - t0, "solve": t2 - t1}))
    print(f"baseline objective: {result.q_star}")
    return EXIT_OK


def cmd_opportunity(cfg: dict, args) -> int:
    solver = solver_from_args(cfg, args)
    out_dir = args.out_dir
    t0 = time.perf_counter()
    instance = instance_from_config(cfg)
    baseline = run_baseline(instance, solver)
    point = run_opportunity(instance, baseline.q_star, args.ldes_power_mw, solver)
    t1 = time.perf_counter()
    if point.status != "ok":
        print(f"error: {point.message}", file=sys.stderr)
        return EXIT_SOLVER
    write_json(os.path.join(out_dir, "opportunity_result.json"), {
        "ldes_power_mw": point.ldes_power_mw,
        "q_star": point.q_star,
        "boundary_cost_usd_per_mw": point.boundary_cost_per_mw,
        "boundary_cost_usd_per_kw": point.boundary_cost_per_kw,
        "budget_overrun_usd": point.budget_overrun,
        "viable": point.viable,
        "net_cost_reduction_usd": point.net_cost_reduction,
        "investment_plan": asdict(point.plan),
        "cost_breakdown": point.breakdown.as_dict(),
    })
    write_json(os.path.join(out_dir, "manifest.json"),
               build_manifest(cfg, solver, {"total": t1 - t0}))
    print(f"boundary cost: {point.boundary_cost_per_mw} $/MW "
          f"({point.boundary_cost_per_kw} $/kW), viable: {point.viable}")
    return EXIT_OK


def _parse_capacities(cfg: dict, args) -> List[float]:
    if args.capacities:
        if os.path.exists(args.capacities):
            with open(args.capacities) as fh:
                text = fh.read()
        else:
            text = args.capacities
        caps = [float(tok) for tok in text.replace(",", " ").split()]
    else:
        caps = [float(c) for c in (cfg.get("sweep") or {}).get("capacities_mw", [])]
    if not caps:
        raise InputError("no sweep capacities given (flag --capacities or "
                         "config sweep.capacities_mw)")
    return caps


def cmd_sweep(cfg: dict, args) -> int:
    solver = solver_from_args(cfg, args)
    out_dir = args.out_dir
    caps = _parse_capacities(cfg, args)
    t0 = time.perf_counter()
    instance = instance_from_config(cfg)
    baseline = run_baseline(instance, solver)
    workers = args.workers or 1
    points = sweep_boundary_curve(instance, caps, solver, workers=workers,
                                  baseline=baseline,
                                  keep_solutions=(workers <= 1))
    t1 = time.perf_counter()
    _write_sweep_outputs(out_dir, points, baseline.q_star)
    write_json(os.path.join(out_dir, "manifest.json"),
               build_manifest(cfg, solver, {"total": t1 - t0}))
    failed = sum(1 for p in points if p.status != "ok")
    for p in points:
        if p.status == "ok":
            print(f"{p.ldes_power_mw} MW: c_bc = {p.boundary_cost_per_kw} $/kW, "
                  f"viable = {p.viable}")
        else:
            print(f"{p.ldes_power_mw} MW: FAILED ({p.message})")
    if failed == len(points):
        return EXIT_SOLVER
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_emit_model(cfg: dict, args) -> int:
    solver = solver_from_args(cfg, args)
    out_dir = args.out_dir
    instance = instance_from_config(cfg)
    if args.mode == "baseline":
        m = build_baseline_model(instance, baseline_policy(instance))
    else:
        if args.ldes_power_mw is None:
            raise InputError("--ldes-power-mw is required for opportunity mode")
        q_star = args.q_star
        if q_star is None:
            q_star = run_baseline(instance, solver).q_star
        policy = decarbonization_policy(instance, args.ldes_power_mw)
        m = build_opportunity_model(instance, policy, q_star)
    _atomic_write(os.path.join(out_dir, f"{args.mode}.mps"),
                  emit_standard_form(m.lp))
    write_table(os.path.join(out_dir, f"{args.mode}_registry.csv"),
                ["row", "block"], sorted(m.registry.items()))
    print(f"wrote {args.mode}.mps ({m.lp.num_vars} vars, "
          f"{m.lp.num_constraints} rows)")
    return EXIT_OK


def cmd_check(cfg: dict, args) -> int:
    with open(args.mps) as fh:
        lp = parse_standard_form(fh.read())
    values: Dict[str, float] = {}
    with open(args.solution) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        for row in reader:
            if len(row) < 2:
                raise InputError(f"malformed solution row: {row}")
            values[row[0]] = float(row[1])
    missing = [n for n in lp.var_names if n not in values]
    if missing:
        raise InputError(f"solution missing variables: {missing[:5]}...")
    x = np.array([values[n] for n in lp.var_names])
    outcome = SolveOutcome("optimal", lp.objective_value(x), x,
                           list(lp.var_names))
    tol = args.tol if args.tol is not None else 1e-6
    report = check_solution(lp, outcome, tol=tol)
    print(f"max bound violation:      {report.max_bound_violation}")
    print(f"max constraint violation: {report.max_constraint_violation} "
          f"({report.worst_constraint})")
    print(f"objective:                {outcome.objective}")
    print("PASS" if report.passes else "FAIL")
    return EXIT_OK if report.passes else EXIT_SOLVER


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldesval",
        description="Boundary-cost valuation of long-duration energy storage.")
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--out-dir",
                        default=os.environ.get("LDESVAL_OUT_DIR", "out"))
    parser.add_argument("--solver", default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--tol", type=float, default=None)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("baseline", help="solve the reference model")
    p_opp = sub.add_parser("opportunity", help="solve one boundary-cost point")
    p_opp.add_argument("--ldes-power-mw", type=float, required=True)
    p_sweep = sub.add_parser("sweep", help="boundary-cost curve over capacities")
    p_sweep.add_argument("--capacities",
                         help="comma/space separated MW values, or a file")
    p_emit = sub.add_parser("emit-model", help="write the LP as an MPS file")
    p_emit.add_argument("--mode", choices=("baseline", "opportunity"),
                        required=True)
    p_emit.add_argument("--ldes-power-mw", type=float, default=None)
    p_emit.add_argument("--q-star", type=float, default=None)
    p_check = sub.add_parser("check", help="verify a solution against an MPS model")
    p_check.add_argument("--mps", required=True)
    p_check.add_argument("--solution", required=True)
    return parser


_COMMANDS = {
    "baseline": cmd_baseline,
    "opportunity": cmd_opportunity,
    "sweep": cmd_sweep,
    "emit-model": cmd_emit_model,
    "check": cmd_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.command != "check" and not cfg:
            raise InputError("--config is required for this command")
        return _COMMANDS[args.command](cfg, args)
    except (InputError, DataError, ModelBuildError, ValueError) as exc:
        print(json.dumps({"error": "input", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_INPUT
    except EngineError as exc:
        print(json.dumps({"error": "solver", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
