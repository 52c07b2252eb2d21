"""Boundary-cost valuation of long-duration energy storage via sequential
capacity-expansion LPs."""

from .domain import (GeneratorSpec, IndexSets, PolicyOverrides, StorageSpec,
                     SystemInstance, ValidationReport, classify_assets,
                     instance_from_json, instance_to_json, validate_instance)
from .engine import (BaselineResult, BoundaryCurvePoint, CostBreakdown,
                     InvestmentPlan, baseline_policy, decarbonization_policy,
                     decompose_costs, minimum_viable_capacity, run_baseline,
                     run_opportunity, sweep_boundary_curve, toy_a, toy_b)
from .lpcore import (LinearProgram, ResidualReport, SolveOutcome, SolverConfig,
                     check_solution, lp_equal, solve)
from .model import (ModelArtifacts, VariableCatalog, build_baseline_model,
                    build_opportunity_model)
from .mps import MpsFormatError, emit_standard_form, parse_standard_form

__version__ = "0.1.0"
