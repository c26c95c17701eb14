"""Portfolio selection under a coherent risk objective and a second risk constraint.

Two backends are provided: a closed-form solver for Gaussian returns built on
the Markowitz hyperbola, and a finite-scenario solver that reads the optimal
portfolio off the multipliers of a dual linear program.
"""

from .errors import (
    DimensionMismatch,
    EmptyFeasibleGrid,
    InvalidProblem,
    InvalidScenarioSpace,
    MaxIterations,
    MeanParallelToOnes,
    NotPositiveDefinite,
    ParseError,
    PortfolioError,
    SigmaBelowCorner,
    SlaterViolated,
    ThetaOutOfRange,
    UnsupportedDimension,
    UnsupportedDual,
)
from .gaussian_solver import GaussianProblem, Outcome, SolveOutcome, solve
from .lp import LinearProgram, LPResult, LPStatus, simplex_solve
from .markowitz import (
    GaussianMarket,
    build_market,
    frontier_points,
    min_variance_portfolio,
    mu_of_sigma,
    sigma_of_mu,
)
from .risk_measures import (
    RiskKind,
    RiskSpec,
    ScenarioSpace,
    avar_gaussian_coeff,
    avar_scenario,
    evaluate,
    gaussian_coefficient,
    var_gaussian_coeff,
)
from .scenario_dual import (
    ScenarioProblem,
    build_dual,
    check_slater,
    solve_scenario,
    subgradient_attainment,
)

__version__ = "0.1.0"
