"""Configuration, results and shared bookkeeping for the searchers."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..core import FEASIBILITY_RTOL, EnergyModel, Pool, Selection, budget_total
from ..energy import tail_from_pmf
from ..errors import NoFeasibleSubset
from ..stats import StopRule

GREEDY_FORWARD = "greedy-forward"
GREEDY_BACKWARD = "greedy-backward"
MONTE_CARLO = "monte-carlo"
SIMULATED_ANNEALING = "simulated-annealing"
SHERLOCK = "sherlock"
STRATEGIES = (GREEDY_FORWARD, GREEDY_BACKWARD, MONTE_CARLO, SIMULATED_ANNEALING, SHERLOCK)

ACCURACY = "accuracy"
USEFULNESS = "usefulness"

STOP_THRESHOLD = "StopThreshold"
MAX_STEP = "MaxStep"
EXHAUSTED = "Exhausted"

DEFAULT_MAXSTEP = 1000


@dataclass(frozen=True)
class AnnealingSchedule:
    initial_temp: float = 1.0
    cooling: float = 0.95
    iters_per_temp: int = 20
    # once cooled below this the temperature is reset to initial_temp
    min_temp: float = 1e-3

    def __post_init__(self):
        if not self.initial_temp > 0:
            raise ValueError("initial temperature must be positive")
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling factor must lie in (0, 1)")
        if self.iters_per_temp < 1:
            raise ValueError("iters_per_temp must be at least 1")
        if self.min_temp < 0:
            raise ValueError("min_temp must be non-negative")


@dataclass(frozen=True)
class SearchConfig:
    strategy: str = SHERLOCK
    key: str = ACCURACY
    seed: int = 0
    stop_rule: StopRule = field(default_factory=lambda: StopRule.maxstep_only(DEFAULT_MAXSTEP))
    sa_schedule: AnnealingSchedule = field(default_factory=AnnealingSchedule)
    literal_eq5: bool = False
    record_trace: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.key not in (ACCURACY, USEFULNESS):
            raise ValueError(f"unknown greedy key {self.key!r}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(int(self.seed) & (2**64 - 1)))


@dataclass(frozen=True)
class SearchResult:
    best: Selection
    steps_executed: int
    terminated_by: str
    wall_time: float = 0.0
    trace: list | None = None

    def to_dict(self, pool: Pool, with_timing: bool = True) -> dict:
        out = {
            "ids": self.best.ids(pool),
            "indices": list(self.best.indices),
            "total_cost": self.best.total_cost,
            "energy": self.best.energy,
            "steps_executed": self.steps_executed,
            "terminated_by": self.terminated_by,
        }
        if with_timing:
            out["wall_time"] = self.wall_time
        if self.trace is not None:
            out["trace"] = [list(t) for t in self.trace]
        return out


class Problem:
    """Pool, budget and energy model with cached decision weights."""

    def __init__(self, pool: Pool, budget, model: EnergyModel | None = None):
        self.pool = pool
        self.model = model or EnergyModel.plain()
        self.limit = budget_total(budget)
        self.p = pool.accuracies
        self.t = pool.costs
        self.n = pool.n
        self._weights: dict[int, np.ndarray] = {}
        if not np.any(self.t <= self.slack_limit):
            raise NoFeasibleSubset("every member alone exceeds the budget")

    @property
    def slack_limit(self) -> float:
        return self.limit * (1.0 + FEASIBILITY_RTOL)

    def fits(self, cost: float) -> bool:
        return cost <= self.slack_limit

    def weights(self, ell: int) -> np.ndarray:
        w = self._weights.get(ell)
        if w is None:
            w = self._weights[ell] = self.model.weights(ell)
        return w

    def energy_of_pmf(self, pmf: np.ndarray) -> float:
        if self.model.is_plain:
            return tail_from_pmf(pmf, self.model)
        return min(1.0, math.fsum(self.weights(pmf.size - 1) * pmf))

    def pmf(self, indices) -> np.ndarray:
        pmf = np.ones(1)
        for i in indices:
            pmf = add_member(pmf, self.p[i])
        return pmf

    def energy(self, indices) -> float:
        return self.energy_of_pmf(self.pmf(sorted(indices)))

    def selection(self, indices) -> Selection:
        return Selection.build(self.pool, indices, self.model)


def add_member(pmf: np.ndarray, p: float) -> np.ndarray:
    out = np.empty(pmf.size + 1)
    out[:-1] = pmf * (1.0 - p)
    out[-1] = 0.0
    out[1:] += pmf * p
    return out


class Tracker:
    """Best-so-far bookkeeping and the shared STOP/MAXSTEP contract."""

    def __init__(self, problem: Problem, config: SearchConfig):
        self.problem = problem
        self.stop = config.stop_rule.stop
        self.maxstep = config.stop_rule.maxstep
        self.record = config.record_trace
        self.best_energy = -math.inf
        self.best_indices: tuple[int, ...] | None = None
        self.trace: list[tuple[int, float]] = []
        self.started = time.perf_counter()

    def offer(self, indices, energy: float, step: int) -> bool:
        """Record a candidate; True once the best reaches STOP."""
        if energy > self.best_energy:
            self.best_energy = energy
            self.best_indices = tuple(sorted(int(i) for i in indices))
            if self.record:
                self.trace.append((step, energy))
        return self.best_energy >= self.stop

    def result(self, steps: int, cause: str) -> SearchResult:
        best = self.problem.selection(self.best_indices)
        trace = self.trace if self.record else None
        return SearchResult(best, steps, cause, time.perf_counter() - self.started, trace)
