"""Optimal voting mechanisms for a principal aggregating signals from biased agents."""

from .model import (
    AssumptionError,
    AssumptionReport,
    ModelParams,
    Payoffs,
    conflict_of_interest,
    cutoff,
    likelihood,
    params_from_payoffs,
    validate_assumptions,
)
from .mechanisms import (
    ICReport,
    IntervalShape,
    LPInstance,
    VotingMechanism,
    agent_preferred,
    binom_pmf,
    build_lp,
    check_x_J,
    classify,
    hat_x_J,
    ic_report,
    is_monotone,
    is_responsive,
    principal_payoff,
    principal_preferred,
    symmetrize,
)
from .solver_lp import SolveResult, solve_full, solve_relaxed
from .solver_structured import solve, virtual_utility
from .theory import improving_deviation, nonmonotonicity_threshold, verify_lemmas

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "AssumptionReport",
    "ICReport",
    "IntervalShape",
    "LPInstance",
    "ModelParams",
    "Payoffs",
    "SolveResult",
    "VotingMechanism",
    "agent_preferred",
    "binom_pmf",
    "build_lp",
    "check_x_J",
    "classify",
    "conflict_of_interest",
    "cutoff",
    "hat_x_J",
    "ic_report",
    "improving_deviation",
    "is_monotone",
    "is_responsive",
    "likelihood",
    "nonmonotonicity_threshold",
    "params_from_payoffs",
    "principal_payoff",
    "principal_preferred",
    "solve",
    "solve_full",
    "solve_relaxed",
    "symmetrize",
    "validate_assumptions",
    "verify_lemmas",
    "virtual_utility",
]
