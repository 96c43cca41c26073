"""Cost-constrained ensemble selection under (constrained) majority voting."""

__version__ = "0.1.0"

from .core import Budget, EnergyModel, Member, Pool, Selection, validate_pool
from .energy import (
    best_subset_exhaustive,
    brute_force_accuracy,
    constrained_accuracy,
    majority_accuracy,
    success_count_pmf,
)
from .errors import EnskError, NoFeasibleSubset, PoolValidationError, TooLarge
from .search import SearchConfig, SearchResult, run_search
from .stats import StopRule, derive_stop_rule, fit_accuracy_distribution

__all__ = [
    "__version__",
    "Budget",
    "EnergyModel",
    "Member",
    "Pool",
    "Selection",
    "validate_pool",
    "best_subset_exhaustive",
    "brute_force_accuracy",
    "constrained_accuracy",
    "majority_accuracy",
    "success_count_pmf",
    "EnskError",
    "NoFeasibleSubset",
    "PoolValidationError",
    "TooLarge",
    "SearchConfig",
    "SearchResult",
    "run_search",
    "StopRule",
    "derive_stop_rule",
    "fit_accuracy_distribution",
]
