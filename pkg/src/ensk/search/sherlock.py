"""Efficiency-driven randomized ensemble construction with restarts."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc

from ..core import EnergyModel, Pool
from ..errors import AllZero
from .base import MAX_STEP, STOP_THRESHOLD, Problem, SearchConfig, SearchResult, Tracker, add_member


def item_efficiency(p: float, t: float, remaining: float) -> float:
    """Majority accuracy of as many copies of the item as fit in ``remaining``.

    Reference implementation (log-space binomial tail); the search uses the
    vectorised :func:`efficiencies`.
    """
    if not t > 0 or remaining < 0:
        raise ValueError("need t > 0 and remaining >= 0")
    m = int(math.floor(remaining / t))
    if m == 0:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    lp, lq = math.log(p), math.log1p(-p)
    terms = [
        math.exp(math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1) + k * lp + (m - k) * lq)
        for k in range(m // 2 + 1, m + 1)
    ]
    return min(1.0, math.fsum(terms))


def efficiencies(p: np.ndarray, t: np.ndarray, remaining: float) -> np.ndarray:
    """Vectorised :func:`item_efficiency` via P(Bin(m, p) >= m//2 + 1) = I_p(k, m - k + 1)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.floor(remaining / t)
    k = np.floor(m / 2) + 1
    out = np.zeros(p.shape)
    live = m >= 1
    out[live] = betainc(k[live], m[live] - k[live] + 1, p[live])
    return out


def selection_distribution(effs) -> np.ndarray:
    e = np.asarray(effs, dtype=float)
    total = math.fsum(e)
    if not total > 0:
        raise AllZero("no item has positive efficiency")
    return e / total


def sherlock(pool: Pool, budget, model: EnergyModel | None, config: SearchConfig) -> SearchResult:
    """Restarted randomized construction; one step is one restart.

    Each restart grows an ensemble by drawing members with probability
    proportional to their efficiency under the remaining budget, evaluating
    the energy at odd sizes only.
    """
    problem = Problem(pool, budget, model)
    rng = config.rng()
    tracker = Tracker(problem, config)
    p, t = problem.p, problem.t
    slack = problem.slack_limit - problem.limit
    for step in range(1, tracker.maxstep + 1):
        available = np.ones(problem.n, dtype=bool)
        remaining = problem.limit
        ens: list[int] = []
        pmf = np.ones(1)
        while True:
            fitting = available & (t <= remaining + slack)
            if not fitting.any():
                break
            if config.literal_eq5:
                # the printed efficiency is identically 1 for every remaining item
                candidates = np.flatnonzero(available)
                j = int(candidates[rng.integers(candidates.size)])
                if not fitting[j]:
                    continue
            else:
                idx = np.flatnonzero(fitting)
                effs = efficiencies(p[idx], t[idx], remaining)
                if effs.sum() > 0:
                    j = int(idx[rng.choice(idx.size, p=selection_distribution(effs))])
                else:
                    j = int(idx[rng.integers(idx.size)])
            ens.append(j)
            available[j] = False
            remaining -= t[j]
            pmf = add_member(pmf, p[j])
            if len(ens) % 2 == 1:
                if tracker.offer(ens, problem.energy_of_pmf(pmf), step):
                    return tracker.result(step, STOP_THRESHOLD)
    return tracker.result(tracker.maxstep, MAX_STEP)
