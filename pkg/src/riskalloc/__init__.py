"""Risk-sensitive log-growth allocation on the unit simplex.

Evaluate the variance-penalized expected log growth of an allocation over
compound returns (exactly, by quadrature, or by Monte Carlo), certify
first-order optimality, and maximize over the simplex.
"""

from ._kernels import BACKEND
from .errors import (
    CapExceeded,
    DimensionMismatch,
    DimensionTooLarge,
    DomainError,
    NoConvergence,
    NonPositiveReturn,
    ParseError,
    QuadratureNotConverged,
    RiskAllocError,
    ValidationError,
)
from .kkt import KktReport, certify, kkt_residuals, solve_two_asset_betting
from .objective import (
    AllocationVector,
    ContinuousEvaluator,
    DiscreteEvaluator,
    McConfig,
    Moments,
    ObjectiveValue,
    QuadratureConfig,
    RiskSpec,
    betting_logvar_second_derivative,
    build_evaluator,
    continuous_log_variance,
    continuous_logvar_second_derivative,
    evaluate_continuous,
    evaluate_exact,
    evaluate_mc,
    gradient_exact,
    log_variance,
)
from .optimize import (
    OptimizationResult,
    OptimizerOptions,
    SweepRow,
    grid_refine,
    maximize,
    project_to_simplex,
    sweep_rho,
)
from .payoffs import (
    CompoundReturnDistribution,
    ContinuousUniform,
    Deterministic,
    DiscreteJoint,
    ErlangCompoundDensity,
    PayoffModel,
    build_discrete_compound,
    erlang_compound_cdf,
    erlang_compound_pdf,
    sample_compound,
    two_point_betting,
    uniform_to_exponential,
)
from .scenario import Scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # errors
    "RiskAllocError",
    "ValidationError",
    "ParseError",
    "DomainError",
    "DimensionMismatch",
    "DimensionTooLarge",
    "NonPositiveReturn",
    "CapExceeded",
    "QuadratureNotConverged",
    "NoConvergence",
    # payoff models and compound distributions
    "PayoffModel",
    "DiscreteJoint",
    "ContinuousUniform",
    "Deterministic",
    "CompoundReturnDistribution",
    "ErlangCompoundDensity",
    "two_point_betting",
    "build_discrete_compound",
    "erlang_compound_pdf",
    "erlang_compound_cdf",
    "uniform_to_exponential",
    "sample_compound",
    # objective
    "AllocationVector",
    "RiskSpec",
    "ObjectiveValue",
    "McConfig",
    "QuadratureConfig",
    "Moments",
    "DiscreteEvaluator",
    "ContinuousEvaluator",
    "build_evaluator",
    "evaluate_exact",
    "evaluate_continuous",
    "evaluate_mc",
    "log_variance",
    "gradient_exact",
    "betting_logvar_second_derivative",
    "continuous_log_variance",
    "continuous_logvar_second_derivative",
    # optimality conditions
    "KktReport",
    "kkt_residuals",
    "certify",
    "solve_two_asset_betting",
    # optimization
    "OptimizerOptions",
    "OptimizationResult",
    "SweepRow",
    "project_to_simplex",
    "maximize",
    "grid_refine",
    "sweep_rho",
    # scenarios
    "Scenario",
    "parse_scenario",
]
