"""Stochastic mirror-descent solvers with computable confidence bounds on optimal values."""

from .core import (
    BudgetTooSmallError,
    ConfigError,
    ConstantSheet,
    ContractViolation,
    ConvergenceError,
    DomainError,
    FeasibleSet,
    MethodMismatchError,
    NumericalError,
    OracleSample,
    ProblemSpec,
    RunRecord,
    StageRecord,
    UnsupportedSetupError,
    lmo,
    oracle_eval,
)
from .sets import BoxSimplex, FloorSimplex, project_simplex
from .prox import (
    EntropySetup,
    EuclideanSetup,
    PNormSetup,
    ProximalSetup,
    dykstra,
    make_setup,
    prox_ball_restricted,
    prox_entropy,
    prox_euclidean,
    prox_pnorm,
    setup_constants,
)
from .problems import (
    CvarPortfolioProblem,
    LinearLossProblem,
    OptimumResult,
    QuadraticSimplexProblem,
    SaaResult,
    exact_optimum,
    gen_instance1,
    gen_instance2,
    gen_linear_loss,
    lambda_min_rank1_diag,
    problem_from_config,
    saa_solve,
)
from .solvers import (
    MultistepSchedule,
    SolverConfig,
    budget_fit_schedule,
    budget_feasibility_margin,
    growth_rate_constant,
    msmd_ball_run,
    msmd_budget_run,
    msmd_run,
    msmd_schedule,
    rsa_run,
    rsa_step_size,
    smd_run,
    smd_step_size,
    theta_step_size,
)
from .bounds import (
    CalibratedTails,
    ConfidenceInterval,
    calibrate_theta_smd2,
    calibrate_thetas_smd1,
    ci_asymptotic,
    ci_smd1,
    ci_smd2,
    gap_coefficients,
    model_lower_value,
    normal_quantile,
)

__version__ = "0.1.0"
