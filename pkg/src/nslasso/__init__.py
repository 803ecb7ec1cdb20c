"""Newton screening for the lasso, with a sequential regularization path.

The solver alternates a screening step — coordinates whose primal/dual
sum exceeds the regularization level form the working set — with an
exact least-squares update on that set, stopping when the set reproduces
itself.  A geometric sequence of levels, warm-started knot to knot and
capped by the fitted support size, turns the one-level solver into a
path method with an optional debiasing shift per knot.
"""

from .bench import (
    SUPPORT_TOL,
    ConditionReport,
    ReplicationReport,
    SelectionMode,
    TrialMetrics,
    TrialRow,
    check_conditions,
    coherence,
    format_report_table,
    gamma_n,
    report_to_dict,
    run_replications,
    trial_metrics,
)
from .core import (
    DesignMatrix,
    PrimalDualState,
    WorkingSet,
    normalize_columns,
    restricted_gram_apply,
    xty_over_n,
)
from .datagen import (
    DesignKind,
    GroundTruth,
    SimScenario,
    gen_coefficients,
    gen_design_ar1,
    gen_design_ma,
    gen_response,
    generate_instance,
    generator_metadata,
)
from .errors import (
    CgStalledWarning,
    DegenerateResponse,
    DimensionMismatch,
    EmptyPath,
    InvalidDimensions,
    InvalidRho,
    InvalidT,
    NonConvergedWarning,
    NonPositiveLambda,
    NsLassoError,
    SingularNewtonSystem,
    SingularSystem,
    ZeroColumn,
    ZeroTruth,
)
from .path import (
    PathConfig,
    PathPoint,
    PathStop,
    SolutionPath,
    default_support_cap,
    lambda_bar_schedule,
    lambda_zero,
    select_information_criterion,
    sns_solve_path,
)
from .prox import KktReport, dual_variable, kkt_residual, lasso_objective, soft_threshold
from .reference import (
    NewtonSystem,
    assemble_newton_system,
    evaluate_F,
    fista_solve,
    generalized_newton_step,
    gram_spectral_norm,
    newton_derivative_gamma,
)
from .solver import (
    LsMethod,
    NsConfig,
    NsResult,
    StopReason,
    ns_iterate,
    ns_solve,
    restricted_ls_solve,
    working_set,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # core
    "DesignMatrix", "PrimalDualState", "WorkingSet",
    "normalize_columns", "xty_over_n", "restricted_gram_apply",
    # prox / kkt
    "KktReport", "soft_threshold", "lasso_objective", "dual_variable", "kkt_residual",
    # solver
    "LsMethod", "StopReason", "NsConfig", "NsResult",
    "working_set", "restricted_ls_solve", "ns_iterate", "ns_solve",
    # path
    "PathStop", "PathConfig", "PathPoint", "SolutionPath",
    "lambda_zero", "lambda_bar_schedule", "default_support_cap", "sns_solve_path",
    "select_information_criterion",
    # reference
    "fista_solve", "gram_spectral_norm", "newton_derivative_gamma", "evaluate_F",
    "NewtonSystem", "assemble_newton_system", "generalized_newton_step",
    # datagen
    "DesignKind", "SimScenario", "GroundTruth",
    "gen_design_ar1", "gen_design_ma", "gen_coefficients", "gen_response",
    "generate_instance", "generator_metadata",
    # bench
    "SUPPORT_TOL", "SelectionMode", "TrialMetrics", "ConditionReport",
    "TrialRow", "ReplicationReport",
    "trial_metrics", "coherence", "gamma_n", "check_conditions",
    "run_replications", "report_to_dict", "format_report_table",
    # errors
    "NsLassoError", "DimensionMismatch", "ZeroColumn", "NonPositiveLambda",
    "SingularSystem", "SingularNewtonSystem", "DegenerateResponse", "EmptyPath",
    "InvalidRho", "InvalidDimensions", "InvalidT", "ZeroTruth",
    "CgStalledWarning", "NonConvergedWarning",
]
