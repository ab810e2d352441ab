"""Two-level SLOPE: proximal operators, solver, state evolution and trade-off searches."""
from .prox import TwoLevelPenalty, slope_prox, two_level_prox, sorted_l1, shared_magnitudes, soft_threshold
from .solver import Problem, SolverOptions, SolveResult, slope_solve
from .asymptotics import (
    DiscretePrior,
    NormalizedTwoLevel,
    ScalarizedSolution,
    calibrate,
    normalize_at_tau,
    risk_E,
    shared_height,
    state_evolution_tau,
)
from .tradeoff import (
    SearchGrid,
    TradeoffPoint,
    constant_prior_max_zero_threshold,
    dt_limit,
    fdp_inf,
    fixed_prior_max_zero_threshold,
    max_zero_threshold_all_priors,
    q_lasso,
    q_two_level,
    tpp_inf,
)
from .sim import DesignSpec, PenaltySpec, PriorSpec, SimStudy, mse_tune_two_level, run_study

__version__ = "0.1.0"
