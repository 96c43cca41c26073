"""Domain types: members, pools, budgets, energy models and selections."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import PoolValidationError, WeightsLengthMismatch, WeightsNotMonotone

PLAIN = "plain"
CONSTRAINED = "constrained"


@dataclass(frozen=True)
class Member:
    id: str
    accuracy: float
    cost: float


@dataclass(frozen=True)
class Pool:
    """Ordered, non-empty collection of members with distinct ids.

    Construct through :func:`validate_pool`; the plain constructor does not
    check invariants.
    """

    members: tuple[Member, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i: int) -> Member:
        return self.members[i]

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([m.accuracy for m in self.members], dtype=float)

    @property
    def costs(self) -> np.ndarray:
        return np.array([m.cost for m in self.members], dtype=float)

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.members]

    @property
    def total_cost(self) -> float:
        return math.fsum(m.cost for m in self.members)

    def records(self) -> list[tuple[str, float, float]]:
        return [(m.id, m.accuracy, m.cost) for m in self.members]


@dataclass(frozen=True)
class Budget:
    total: float

    def __post_init__(self):
        if not (self.total > 0 and math.isfinite(self.total)):
            raise ValueError(f"budget must be a positive finite number, got {self.total!r}")


def budget_total(budget) -> float:
    """Accept a :class:`Budget` or a bare positive number."""
    if isinstance(budget, Budget):
        return budget.total
    return Budget(float(budget)).total


FEASIBILITY_RTOL = 1e-12


def fits(cost: float, limit: float) -> bool:
    """Budget check with a relative slack for floating-point accumulation."""
    return cost <= limit * (1.0 + FEASIBILITY_RTOL)


def validate_pool(raw_members: Iterable[Sequence]) -> Pool:
    """Build a :class:`Pool` from ``(id, accuracy, cost)`` triples.

    All violations are collected before raising, so a single
    :class:`PoolValidationError` reports every bad row.
    """
    rows = list(raw_members)
    if not rows:
        raise PoolValidationError([("EmptyPool", None)])
    violations = []
    seen = set()
    members = []
    for mid, acc, cost in rows:
        mid = str(mid)
        acc = float(acc)
        cost = float(cost)
        if mid in seen:
            violations.append(("DuplicateId", mid))
        seen.add(mid)
        if not (0.0 <= acc <= 1.0):
            violations.append(("AccuracyOutOfRange", mid))
        if not (cost > 0.0 and math.isfinite(cost)):
            violations.append(("NonPositiveCost", mid))
        members.append(Member(mid, acc, cost))
    if violations:
        raise PoolValidationError(violations)
    return Pool(tuple(members))


def decision_curve(x, a: float, b: float):
    """Fitted decision probability ``b / (b + (x/(1-x))**a)`` on [0, 1].

    Endpoints take their limits, so for ``a < 0`` the curve runs from 0 at
    ``x = 0`` to 1 at ``x = 1``.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        odds = x / (1.0 - x)
        r = np.power(odds, a)
        out = b / (b + r)
    out = np.where(np.isinf(r), 0.0, out)
    out = np.where(r == 0.0, 1.0, out)
    return out if out.ndim else float(out)


def check_weights(weights: Sequence[float], ell: int | None = None) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if ell is not None and len(w) != ell + 1:
        raise WeightsLengthMismatch(f"need {ell + 1} decision weights for {ell} members, got {len(w)}")
    if np.any(w < 0) or np.any(w > 1) or np.any(np.diff(w) < 0):
        raise WeightsNotMonotone("decision weights must satisfy 0 <= p_0 <= ... <= p_l <= 1")
    return w


@dataclass(frozen=True)
class EnergyModel:
    """Plain majority voting or constrained voting with decision weights.

    For the constrained kind, ``tables`` maps an ensemble size to its explicit
    weight vector; any other size falls back to ``curve = (a, b)`` evaluated
    at ``k / size``.
    """

    kind: str = PLAIN
    tables: Mapping[int, tuple] = field(default_factory=dict)
    curve: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in (PLAIN, CONSTRAINED):
            raise ValueError(f"unknown energy model kind {self.kind!r}")
        for ell, table in self.tables.items():
            check_weights(table, ell)

    @classmethod
    def plain(cls) -> "EnergyModel":
        return cls(PLAIN)

    @classmethod
    def constrained(cls, table: Sequence[float] | None = None, curve=None) -> "EnergyModel":
        tables = {}
        if table is not None:
            table = tuple(float(v) for v in table)
            tables[len(table) - 1] = table
        if curve is not None:
            curve = (float(curve[0]), float(curve[1]))
        return cls(CONSTRAINED, tables, curve)

    @property
    def is_plain(self) -> bool:
        return self.kind == PLAIN

    def weights(self, ell: int) -> np.ndarray:
        """Decision probabilities ``p_{ell,k}`` for ``k = 0..ell``."""
        if self.is_plain:
            w = np.zeros(ell + 1)
            w[ell // 2 + 1:] = 1.0
            return w
        if ell in self.tables:
            return np.asarray(self.tables[ell], dtype=float)
        if self.curve is None:
            raise WeightsLengthMismatch(f"no decision weights for ensembles of size {ell}")
        return decision_curve(np.arange(ell + 1) / ell, *self.curve)

    def energy(self, accuracies) -> float:
        from .energy import model_accuracy

        return model_accuracy(accuracies, self)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "tables": {str(k): list(v) for k, v in sorted(self.tables.items())},
            "curve": list(self.curve) if self.curve is not None else None,
        }


@dataclass(frozen=True)
class Selection:
    """Index subset with cached total cost and energy.

    Use :meth:`build`; it recomputes both cached values so the invariants
    hold by construction.
    """

    indices: tuple[int, ...]
    total_cost: float
    energy: float

    @classmethod
    def build(cls, pool: Pool, indices: Iterable[int], model: EnergyModel | None = None) -> "Selection":
        idx = tuple(sorted(int(i) for i in indices))
        if len(set(idx)) != len(idx):
            raise ValueError("selection indices must be distinct")
        if idx and (idx[0] < 0 or idx[-1] >= pool.n):
            raise IndexError("selection index out of range")
        if not idx:
            raise ValueError("a selection needs at least one member")
        model = model or EnergyModel.plain()
        cost = math.fsum(pool[i].cost for i in idx)
        energy = model.energy([pool[i].accuracy for i in idx])
        return cls(idx, cost, energy)

    @property
    def size(self) -> int:
        return len(self.indices)

    def ids(self, pool: Pool) -> list[str]:
        return [pool[i].id for i in self.indices]

    def verify(self, pool: Pool, model: EnergyModel | None = None) -> bool:
        again = Selection.build(pool, self.indices, model)
        cost_ok = abs(again.total_cost - self.total_cost) <= 1e-12 * max(1.0, abs(self.total_cost))
        return cost_ok and abs(again.energy - self.energy) <= 1e-12
