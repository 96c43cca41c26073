"""Monte Carlo random search and simulated annealing."""

from __future__ import annotations

import math

import numpy as np

from ..core import EnergyModel, Pool
from .base import MAX_STEP, STOP_THRESHOLD, Problem, SearchConfig, SearchResult, Tracker

_REJECTION_TRIES = 100


def _shuffle_fill(problem: Problem, rng: np.random.Generator) -> list[int]:
    chosen, cost = [], 0.0
    for i in rng.permutation(problem.n):
        if problem.fits(cost + problem.t[i]):
            chosen.append(int(i))
            cost += problem.t[i]
    return chosen


def random_feasible_subset(problem: Problem, rng: np.random.Generator) -> list[int]:
    """Uniform draw from the non-empty subsets within budget.

    Fair-coin masks are rejected until one is feasible; if that keeps
    failing (tight budgets) a shuffled greedy fill is used instead.
    """
    for _ in range(_REJECTION_TRIES):
        mask = rng.random(problem.n) < 0.5
        if mask.any() and problem.fits(math.fsum(problem.t[mask])):
            return np.flatnonzero(mask).tolist()
    return _shuffle_fill(problem, rng)


def monte_carlo_search(pool: Pool, budget, model: EnergyModel | None, config: SearchConfig) -> SearchResult:
    problem = Problem(pool, budget, model)
    rng = config.rng()
    tracker = Tracker(problem, config)
    for step in range(1, tracker.maxstep + 1):
        subset = random_feasible_subset(problem, rng)
        if tracker.offer(subset, problem.energy(subset), step):
            return tracker.result(step, STOP_THRESHOLD)
    return tracker.result(tracker.maxstep, MAX_STEP)


def _propose(problem: Problem, state: list[int], cost: float, rng: np.random.Generator) -> list[int] | None:
    inside = np.zeros(problem.n, dtype=bool)
    inside[state] = True
    outside = np.flatnonzero(~inside)
    addable = outside[problem.t[outside] + cost <= problem.slack_limit]
    moves = []
    if addable.size:
        moves.append("add")
    if len(state) > 1:
        moves.append("remove")
    if outside.size:
        moves.append("swap")
    if not moves:
        return None
    move = moves[int(rng.integers(len(moves)))]
    if move == "add":
        return state + [int(addable[rng.integers(addable.size)])]
    if move == "remove":
        k = int(rng.integers(len(state)))
        return state[:k] + state[k + 1 :]
    k = int(rng.integers(len(state)))
    room = cost - problem.t[state[k]]
    fits = outside[problem.t[outside] + room <= problem.slack_limit]
    if not fits.size:
        return None
    return state[:k] + state[k + 1 :] + [int(fits[rng.integers(fits.size)])]


def simulated_annealing(pool: Pool, budget, model: EnergyModel | None, config: SearchConfig) -> SearchResult:
    """Add/remove/swap neighbourhood with Metropolis acceptance and geometric cooling.

    Every proposal counts as one step, including the initial state.  A frozen
    walk is reheated (see ``AnnealingSchedule.min_temp``), which lets long
    runs cross the low-energy even-size states between odd cardinalities.
    """
    problem = Problem(pool, budget, model)
    rng = config.rng()
    sched = config.sa_schedule
    tracker = Tracker(problem, config)
    state = _shuffle_fill(problem, rng)
    cost = math.fsum(problem.t[state])
    energy = problem.energy(state)
    if tracker.offer(state, energy, 1):
        return tracker.result(1, STOP_THRESHOLD)
    temp = sched.initial_temp
    for step in range(2, tracker.maxstep + 1):
        if (step - 2) % sched.iters_per_temp == 0 and step > 2:
            temp *= sched.cooling
            if temp < sched.min_temp:
                temp = sched.initial_temp
        proposal = _propose(problem, state, cost, rng)
        if proposal is not None:
            new_energy = problem.energy(proposal)
            delta = new_energy - energy
            if delta >= 0 or rng.random() < math.exp(delta / temp):
                state, energy = proposal, new_energy
                cost = math.fsum(problem.t[state])
            if tracker.offer(state, energy, step):
                return tracker.result(step, STOP_THRESHOLD)
    return tracker.result(tracker.maxstep, MAX_STEP)
