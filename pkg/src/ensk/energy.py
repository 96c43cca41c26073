"""Exact ensemble accuracy under (constrained) majority voting.

The number of correct votes among independent members follows a
Poisson-binomial law; its pmf is built by the usual O(l^2) convolution and the
ensemble accuracy is a weighted sum over that pmf.  Brute-force enumeration
of all vote outcomes and an exhaustive subset search serve as oracles.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import FEASIBILITY_RTOL, EnergyModel, Pool, Selection, budget_total, check_weights
from .errors import EmptyInput, NoFeasibleSubset, TooLarge

BRUTE_FORCE_MAX = 25
EXHAUSTIVE_MAX = 22
_BATCH_BITS = 15


def success_count_pmf(accuracies: Sequence[float]) -> np.ndarray:
    """Distribution of the number of correct members.

    Entry ``k`` is the probability that exactly ``k`` of the members vote
    correctly.
    """
    p = np.asarray(accuracies, dtype=float).ravel()
    if p.size == 0:
        raise EmptyInput("need at least one accuracy")
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for j, pj in enumerate(p):
        moved = pmf[: j + 1] * pj
        pmf[: j + 1] *= 1.0 - pj
        pmf[1 : j + 2] += moved
    return pmf


def majority_accuracy(accuracies: Sequence[float], model: EnergyModel | None = None) -> float:
    """Ensemble accuracy; exact ties (even size) count as failures."""
    if model is not None and not model.is_plain:
        return model_accuracy(accuracies, model)
    pmf = success_count_pmf(accuracies)
    ell = pmf.size - 1
    return math.fsum(pmf[ell // 2 + 1 :])


def constrained_accuracy(accuracies: Sequence[float], weights: Sequence[float]) -> float:
    """Accuracy when ``weights[k]`` is the chance of a correct decision given k correct votes."""
    pmf = success_count_pmf(accuracies)
    w = check_weights(weights, pmf.size - 1)
    return min(1.0, math.fsum(w * pmf))


def model_accuracy(accuracies: Sequence[float], model: EnergyModel) -> float:
    if model.is_plain:
        return majority_accuracy(accuracies)
    ell = np.asarray(accuracies).size
    if ell == 0:
        raise EmptyInput("need at least one accuracy")
    return constrained_accuracy(accuracies, model.weights(ell))


def tail_from_pmf(pmf: np.ndarray, model: EnergyModel) -> float:
    """Energy from an already computed success-count pmf."""
    ell = pmf.size - 1
    if model.is_plain:
        return math.fsum(pmf[ell // 2 + 1 :])
    return min(1.0, math.fsum(model.weights(ell) * pmf))


def brute_force_accuracy(accuracies: Sequence[float], model: EnergyModel | None = None) -> float:
    """Sum the probability of every one of the 2^l vote outcomes.

    Independent of :func:`success_count_pmf`; used as a test oracle.
    """
    p = np.asarray(accuracies, dtype=float).ravel()
    ell = p.size
    if ell == 0:
        raise EmptyInput("need at least one accuracy")
    if ell > BRUTE_FORCE_MAX:
        raise TooLarge(f"brute force limited to {BRUTE_FORCE_MAX} members, got {ell}")
    model = model or EnergyModel.plain()
    weights = model.weights(ell)
    outcomes = (np.arange(2**ell)[:, None] >> np.arange(ell)) & 1
    probs = np.prod(np.where(outcomes == 1, p, 1.0 - p), axis=1)
    correct = outcomes.sum(axis=1)
    return math.fsum(weights[correct] * probs)


def _batch_energies(masks: np.ndarray, p: np.ndarray, weight_rows: np.ndarray) -> np.ndarray:
    n = p.size
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    pmf = np.zeros((masks.size, n + 1))
    pmf[:, 0] = 1.0
    for j in range(n):
        x = bits[:, j : j + 1] * p[j]
        moved = pmf[:, : j + 1] * x
        pmf[:, : j + 1] *= 1.0 - x
        pmf[:, 1 : j + 2] += moved
    sizes = bits.sum(axis=1).astype(int)
    return np.einsum("ij,ij->i", weight_rows[sizes], pmf), sizes


def best_subset_exhaustive(pool: Pool, budget, model: EnergyModel | None = None) -> Selection:
    """Exact optimum over every subset that fits the budget.

    Ties are broken by smaller cardinality, then by the lexicographically
    smallest index tuple.
    """
    n = pool.n
    if n > EXHAUSTIVE_MAX:
        raise TooLarge(f"exhaustive search limited to {EXHAUSTIVE_MAX} members, got {n}")
    model = model or EnergyModel.plain()
    limit = budget_total(budget)
    p = pool.accuracies
    t = pool.costs
    if not np.any(t <= limit):
        raise NoFeasibleSubset("every member alone exceeds the budget")
    weight_rows = np.zeros((n + 1, n + 1))
    for ell in range(1, n + 1):
        weight_rows[ell, : ell + 1] = model.weights(ell)

    best = -1.0
    candidates: list[tuple[int, float]] = []
    total = 2**n
    step = 2**_BATCH_BITS
    for start in range(1, total, step):
        masks = np.arange(start, min(start + step, total), dtype=np.int64)
        bits = (masks[:, None] >> np.arange(n)) & 1
        costs = bits @ t
        masks = masks[costs <= limit * (1.0 + FEASIBILITY_RTOL)]
        if masks.size == 0:
            continue
        energies, _ = _batch_energies(masks, p, weight_rows)
        best = max(best, float(energies.max()))
        keep = energies >= best - 1e-12
        candidates = [c for c in candidates if c[1] >= best - 1e-12]
        candidates.extend(zip(masks[keep].tolist(), energies[keep].tolist()))

    def key(mask):
        idx = tuple(i for i in range(n) if mask >> i & 1)
        return (len(idx), idx)

    chosen = min((c[0] for c in candidates), key=key)
    return Selection.build(pool, key(chosen)[1], model)
