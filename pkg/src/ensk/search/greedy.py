"""Deterministic forward and backward greedy selection."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from ..core import EnergyModel, Pool
from .base import ACCURACY, EXHAUSTED, USEFULNESS, Problem, SearchResult

# guards against accepting a move whose gain is pure rounding noise
IMPROVE_TOL = 1e-12


def _key_scores(problem: Problem, key: str) -> np.ndarray:
    if key == ACCURACY:
        return problem.p
    if key == USEFULNESS:
        return problem.p / problem.t
    raise ValueError(f"unknown greedy key {key!r}")


def _best_single(problem: Problem, scores: np.ndarray) -> int:
    feasible = [i for i in range(problem.n) if problem.fits(problem.t[i])]
    return min(feasible, key=lambda i: (-scores[i], i))


def batch_energies(problem: Problem, keep: np.ndarray) -> np.ndarray:
    """Energies of the member subsets given as rows of a boolean matrix."""
    keep = np.atleast_2d(keep)
    rows, n = keep.shape
    pmf = np.zeros((rows, n + 1))
    pmf[:, 0] = 1.0
    for j in range(n):
        x = keep[:, j : j + 1] * problem.p[j]
        moved = pmf[:, : j + 1] * x
        pmf[:, : j + 1] *= 1.0 - x
        pmf[:, 1 : j + 2] += moved
    sizes = keep.sum(axis=1)
    out = np.empty(rows)
    for size in np.unique(sizes):
        sel = sizes == size
        w = np.zeros(n + 1)
        if size > 0:
            w[: size + 1] = problem.weights(int(size))
        out[sel] = np.minimum(1.0, pmf[sel] @ w)
    return out


def greedy_forward(pool: Pool, budget, model: EnergyModel | None = None, key: str = ACCURACY) -> SearchResult:
    """Start from the best single member, then add the best pair while it helps."""
    started = time.perf_counter()
    problem = Problem(pool, budget, model)
    p, t = problem.p, problem.t
    members = [_best_single(problem, _key_scores(problem, key))]
    cost = t[members[0]]
    pmf = problem.pmf(members)
    energy = problem.energy_of_pmf(pmf)
    trace = [(1, energy)]
    steps = 1
    while True:
        rest = np.array([i for i in range(problem.n) if i not in members], dtype=int)
        if rest.size < 2:
            break
        ii, jj = np.triu_indices(rest.size, k=1)
        a, b = rest[ii], rest[jj]
        ok = t[a] + t[b] + cost <= problem.slack_limit
        if not ok.any():
            break
        a, b = a[ok], b[ok]
        # energy after adding {a, b} is bilinear in (p_a, p_b)
        w = problem.weights(len(members) + 2)
        shifted = [float(pmf @ w[s : s + pmf.size]) for s in range(3)]
        pa, pb = p[a], p[b]
        gains = (
            shifted[0] * (1 - pa) * (1 - pb)
            + shifted[1] * (pa * (1 - pb) + pb * (1 - pa))
            + shifted[2] * pa * pb
        )
        k = int(np.argmax(gains))
        steps += 1
        candidate = sorted(members + [int(a[k]), int(b[k])])
        new_pmf = problem.pmf(candidate)
        new_energy = problem.energy_of_pmf(new_pmf)
        if new_energy <= energy + IMPROVE_TOL:
            break
        members, pmf, energy = candidate, new_pmf, new_energy
        cost = math.fsum(t[members])
        trace.append((steps, energy))
    best = problem.selection(members)
    return SearchResult(best, steps, EXHAUSTED, time.perf_counter() - started, trace)


def greedy_backward(pool: Pool, budget, model: EnergyModel | None = None, key: str = ACCURACY) -> SearchResult:
    """Start from the full pool and drop members until feasible and no removal helps.

    While over budget one member is dropped per step (the removal giving the
    highest energy, or the least useful member).  Once feasible, removals
    come in pairs from odd sizes (singly from even ones) and are only
    accepted if they raise the energy.
    """
    started = time.perf_counter()
    problem = Problem(pool, budget, model)
    scores = _key_scores(problem, key)
    members = list(range(problem.n))
    trace: list[tuple[int, float]] = []
    steps = 0
    energy = None
    while True:
        steps += 1
        cost = math.fsum(problem.t[members])
        if not problem.fits(cost):
            if len(members) == 1:
                members = [_best_single(problem, scores)]
                continue
            members.remove(_pick_removal(problem, members, 1, key, scores)[0])
            continue
        if energy is None:
            energy = problem.energy(members)
            trace.append((steps, energy))
        r = 1 if len(members) % 2 == 0 else 2
        if len(members) <= r:
            break
        drop = _pick_removal(problem, members, r, key, scores)
        candidate = [i for i in members if i not in drop]
        new_energy = problem.energy(candidate)
        if new_energy <= energy + IMPROVE_TOL:
            break
        members, energy = candidate, new_energy
        trace.append((steps, energy))
    best = problem.selection(members)
    return SearchResult(best, steps, EXHAUSTED, time.perf_counter() - started, trace)


def _pick_removal(problem: Problem, members: list[int], r: int, key: str, scores: np.ndarray) -> tuple[int, ...]:
    if key == USEFULNESS:
        return tuple(sorted(members, key=lambda i: (scores[i], i))[:r])
    combos = list(itertools.combinations(members, r))
    keep = np.zeros((len(combos), problem.n), dtype=bool)
    keep[:, members] = True
    for row, combo in enumerate(combos):
        keep[row, list(combo)] = False
    energies = batch_energies(problem, keep)
    return combos[int(np.argmax(energies))]
