"""Subset-search strategies over a pool under a budget."""

from __future__ import annotations

from ..core import EnergyModel, Pool
from .base import (
    ACCURACY,
    EXHAUSTED,
    GREEDY_BACKWARD,
    GREEDY_FORWARD,
    MAX_STEP,
    MONTE_CARLO,
    SHERLOCK,
    SIMULATED_ANNEALING,
    STOP_THRESHOLD,
    STRATEGIES,
    USEFULNESS,
    AnnealingSchedule,
    SearchConfig,
    SearchResult,
)
from .greedy import greedy_backward, greedy_forward
from .sherlock import efficiencies, item_efficiency, selection_distribution, sherlock
from .stochastic import monte_carlo_search, random_feasible_subset, simulated_annealing


def run_search(pool: Pool, budget, model: EnergyModel | None, config: SearchConfig) -> SearchResult:
    """Dispatch on ``config.strategy``."""
    if config.strategy == GREEDY_FORWARD:
        return greedy_forward(pool, budget, model, config.key)
    if config.strategy == GREEDY_BACKWARD:
        return greedy_backward(pool, budget, model, config.key)
    if config.strategy == MONTE_CARLO:
        return monte_carlo_search(pool, budget, model, config)
    if config.strategy == SIMULATED_ANNEALING:
        return simulated_annealing(pool, budget, model, config)
    return sherlock(pool, budget, model, config)


__all__ = [
    "ACCURACY",
    "USEFULNESS",
    "EXHAUSTED",
    "MAX_STEP",
    "STOP_THRESHOLD",
    "GREEDY_FORWARD",
    "GREEDY_BACKWARD",
    "MONTE_CARLO",
    "SIMULATED_ANNEALING",
    "SHERLOCK",
    "STRATEGIES",
    "AnnealingSchedule",
    "SearchConfig",
    "SearchResult",
    "greedy_forward",
    "greedy_backward",
    "monte_carlo_search",
    "simulated_annealing",
    "sherlock",
    "item_efficiency",
    "efficiencies",
    "selection_distribution",
    "random_feasible_subset",
    "run_search",
]
