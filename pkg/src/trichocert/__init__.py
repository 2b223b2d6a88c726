"""Certification of irreducibly three-outcome qubit measurements.

Given a 3x3 table of prepare-and-measure correlations, the package bounds its
distance to the set of correlations reproducible with a simulable
(two-outcome-mixture) measurement from above (seesaw) and below (certified
bisection scan), and estimates the effective dimension of generic data.
"""

from .conic import ConicProgram, SecondOrderCone, SolverError, SolverResult, is_feasible, solve
from .correlations import (SimulableUsdParams, UsdParams, correlations_of, is_usd_form,
                           simulable_usd_matrix, trine_matrix, usd_matrix, usd_params_of,
                           usd_realization, witness_w)
from .dimension import (EffectiveDimension, build_data_matrix, estimate_dimension,
                        min_consistent_dimension, numerical_rank)
from .lower_bound import (LowerBoundCertifier, critical_eps, feasibility, scan,
                          tolerances, trace_constants)
from .qubit import (BlochEffect, BlochState, Povm, Scenario, ValidationError, born,
                    trine_scenario, usd_povm, validate_effect)
from .seesaw import (SeesawDistance, SimulableDecomposition, distance, is_simulable,
                     optimize_effects, optimize_states, seesaw)

__version__ = "0.1.0"

__all__ = [
    "BlochEffect", "BlochState", "ConicProgram", "EffectiveDimension", "LowerBoundCertifier",
    "Povm", "Scenario", "SecondOrderCone", "SeesawDistance", "SimulableDecomposition",
    "SimulableUsdParams", "SolverError", "SolverResult", "UsdParams", "ValidationError",
    "born", "build_data_matrix", "correlations_of", "critical_eps", "distance",
    "estimate_dimension", "feasibility", "is_feasible", "is_simulable", "is_usd_form",
    "min_consistent_dimension", "numerical_rank", "optimize_effects", "optimize_states",
    "scan", "seesaw", "simulable_usd_matrix", "solve", "tolerances", "trace_constants",
    "trine_matrix", "trine_scenario", "usd_matrix", "usd_params_of", "usd_povm",
    "usd_realization", "validate_effect", "witness_w",
]
