"""Numerical periodic homogenization for second-order parabolic problems.

Builds the constructive objects of quantitative homogenization on bounded
boxes (cell problem, effective matrix, cell-average smoothing, correctors,
operator exponentials and resolvents) and measures the convergence orders
in the period epsilon that the theory predicts.
"""

from .cell import (CellSolution, SpecialCase, classify_special_case,
                   lambda_bound_check, solve_cell_problem, voigt_reuss)
from .config import ExperimentConfig, canonical_1d, load_config, save_config
from .correctors import corrector_apply, first_order_approx, flux, flux_approx
from .domain import (DiscreteOperator, DomainSpec, EffectiveCoefficient, Field,
                     Mesh, OscillatingCoefficient, assemble_operator, build_mesh,
                     extend_field, field_from_callable, kernel_projection, norm,
                     resolvent_apply)
from .lattice import (DifferentialSymbol, LatticeSpec, PeriodicCoefficient,
                      derivative_symbol_1d, dual_lattice, gradient_symbol,
                      sample_scaled, symbol_bounds, unit_lattice)
from .rates import (ErrorRecord, RateFit, RateProfile, fit_rate,
                    rate_profile_eval, time_norm)
from .registry import cell_report, get_experiment, list_experiments, run_experiment
from .semigroup import (ContourSpec, SourceTerm, TimeGrid, Trajectory,
                        contour_exp_apply, duhamel_solve, exp_apply,
                        shifted_state, trajectory_to_csv)
from .smoothing import SmoothingSpec, steklov_apply, steklov_defect_norm
from .sweep import error_sweep, prepare_problem

__version__ = "0.1.0"

__all__ = [
    "CellSolution", "SpecialCase", "classify_special_case", "lambda_bound_check",
    "solve_cell_problem", "voigt_reuss",
    "ExperimentConfig", "canonical_1d", "load_config", "save_config",
    "corrector_apply", "first_order_approx", "flux", "flux_approx",
    "DiscreteOperator", "DomainSpec", "EffectiveCoefficient", "Field", "Mesh",
    "OscillatingCoefficient", "assemble_operator", "build_mesh", "extend_field",
    "field_from_callable", "kernel_projection", "norm", "resolvent_apply",
    "DifferentialSymbol", "LatticeSpec", "PeriodicCoefficient",
    "derivative_symbol_1d", "dual_lattice", "gradient_symbol", "sample_scaled",
    "symbol_bounds", "unit_lattice",
    "ErrorRecord", "RateFit", "RateProfile", "fit_rate", "rate_profile_eval",
    "time_norm",
    "cell_report", "get_experiment", "list_experiments", "run_experiment",
    "ContourSpec", "SourceTerm", "TimeGrid", "Trajectory", "contour_exp_apply",
    "duhamel_solve", "exp_apply", "shifted_state", "trajectory_to_csv",
    "SmoothingSpec", "steklov_apply", "steklov_defect_norm",
    "error_sweep", "prepare_problem",
]
