"""Synthetic pools and the scripted reproduction experiments.

Every replicate draws from its own stream seeded by ``(master_seed,
replicate_index)``, so reports do not depend on the number of workers.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import EnergyModel, Pool, validate_pool
from .energy import best_subset_exhaustive
from .search import (
    MONTE_CARLO,
    SHERLOCK,
    SIMULATED_ANNEALING,
    AnnealingSchedule,
    SearchConfig,
    run_search,
)
from .stats import (
    ELL_MEAN_COST,
    StopRule,
    constrained_mean_q,
    derive_stop_rule,
    estimate_ell_mean_cost,
    fit_accuracy_distribution,
    fit_constraint_curve,
)

CONDITIONAL_EXPONENTIAL = "conditional-exponential"
NO_TIME = "none"

TABLE2_ALPHA = 17.0
TABLE2_BETA = 5.0
TABLE2_FRACTIONS = {30: 0.30, 100: 0.20}
TABLE2_MAXSTEP_CAP = 1000

MC_VS_SA_N = 15
MC_VS_SA_BETA = 0.1
MC_VS_SA_EPSILON = 0.05
MC_VS_SA_STEPS = 3000
# hot schedule that keeps the walk mobile over the whole step budget
MC_VS_SA_SCHEDULE = AnnealingSchedule(1.0, 0.99, 30)

OD_POOL = (
    ("OD1", 0.220, 31.0),
    ("OD2", 0.304, 38.0),
    ("OD3", 0.319, 34.0),
    ("OD4", 0.643, 69.0),
    ("OD5", 0.754, 11.0),
    ("OD6", 0.765, 7.0),
    ("OD7", 0.958, 21.0),
    ("OD8", 0.976, 90.0),
)
OD_WEIGHTS = (0.0, 0.11, 0.70, 0.93, 0.99, 1.0, 1.0, 1.0, 1.0)
OD_BUDGET_FRACTION = 0.8
OD_MAXSTEP_CAP = 10_000

_ACCURACY_CEILING = 1.0 - 1e-9


@dataclass(frozen=True)
class PoolGeneratorSpec:
    n: int
    alpha_p: float = TABLE2_ALPHA
    beta_p: float = TABLE2_BETA
    time_model: str = CONDITIONAL_EXPONENTIAL
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not (self.alpha_p > 0 and self.beta_p > 0):
            raise ValueError("beta parameters must be positive")
        if self.time_model not in (CONDITIONAL_EXPONENTIAL, NO_TIME):
            raise ValueError(f"unknown time model {self.time_model!r}")


def replicate_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def replicate_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(index), 1]).generate_state(1, np.uint64)[0])


def generate_pool(spec: PoolGeneratorSpec, rng: np.random.Generator | None = None) -> Pool:
    """Beta accuracies; costs exponential with rate ``1 - p`` (mean ``1/(1-p)``)."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    p = rng.beta(spec.alpha_p, spec.beta_p, spec.n)
    while np.any(bad := p >= _ACCURACY_CEILING):
        p[bad] = rng.beta(spec.alpha_p, spec.beta_p, int(bad.sum()))
    if spec.time_model == NO_TIME:
        t = np.ones(spec.n)
    else:
        t = rng.exponential(1.0 / (1.0 - p))
    return validate_pool((f"D{i + 1}", float(p[i]), float(t[i])) for i in range(spec.n))


@dataclass
class StrategyStats:
    energies: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    causes: dict = field(default_factory=dict)
    hits: int = 0

    def add(self, result, hit: bool | None = None) -> None:
        self.energies.append(result.best.energy)
        self.steps.append(result.steps_executed)
        self.wall_times.append(result.wall_time)
        self.causes[result.terminated_by] = self.causes.get(result.terminated_by, 0) + 1
        if hit:
            self.hits += 1

    def summary(self, with_timing: bool = True, precision: bool = False) -> dict:
        k = len(self.energies)
        out = {
            "mean_energy": math.fsum(self.energies) / k,
            "std_energy": statistics.stdev(self.energies) if k > 1 else 0.0,
            "mean_steps": math.fsum(self.steps) / k,
            "termination": dict(sorted(self.causes.items())),
        }
        if precision:
            out["precision"] = self.hits / k
        if with_timing:
            out["mean_wall_time"] = math.fsum(self.wall_times) / k
        return out


@dataclass
class ExperimentReport:
    experiment: str
    replicates: int
    master_seed: int
    config: dict
    strategies: dict
    extra: dict = field(default_factory=dict)
    per_replicate: list = field(default_factory=list)

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("an experiment needs at least one replicate")

    def to_dict(self, with_timing: bool = True) -> dict:
        d = asdict(self)
        if not with_timing:
            d = _strip_timing(d)
        return d


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if "wall_time" not in k}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _map(fn, args, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, args))
    return [fn(a) for a in args]


def _check_replicates(replicates: int) -> None:
    if replicates < 1:
        raise ValueError("replicates must be at least 1")


def _table2_replicate(args):
    n, fraction, master_seed, index, maxstep_cap, record_trace = args
    rng = replicate_rng(master_seed, index)
    pool = generate_pool(PoolGeneratorSpec(n), rng)
    budget = fraction * pool.total_cost
    dist = fit_accuracy_distribution(pool.accuracies)
    rule = derive_stop_rule(dist, n, budget, pool.costs)
    capped = rule.with_maxstep(min(rule.maxstep, maxstep_cap))
    runs = {}
    for s, strategy in enumerate((SHERLOCK, SIMULATED_ANNEALING)):
        seed = replicate_seed(master_seed, 10 * index + s)
        for mode, stop_rule in (("STOP", capped), ("MAXSTEP", StopRule.maxstep_only(capped.maxstep))):
            cfg = SearchConfig(strategy, seed=seed, stop_rule=stop_rule, record_trace=record_trace)
            runs[(strategy, mode)] = run_search(pool, budget, None, cfg)
    return {"stop": rule.stop, "maxstep": rule.maxstep, "branch": rule.derivation["branch"],
            "ell_hat": rule.derivation["ell_hat"], "runs": runs}


def run_table2_experiment(
    n: int,
    budget_fraction: float | None = None,
    replicates: int = 100,
    seed: int = 0,
    *,
    maxstep_cap: int = TABLE2_MAXSTEP_CAP,
    workers: int | None = None,
    record_trace: bool = False,
) -> ExperimentReport:
    """SHErLoCk and SA on Beta(17,5) pools, each run STOP- and MAXSTEP-terminated.

    The derived MAXSTEP is capped at ``maxstep_cap`` so that the long-run
    mode finishes in reasonable time; the cap is echoed in the report.
    """
    _check_replicates(replicates)
    fraction = budget_fraction if budget_fraction is not None else TABLE2_FRACTIONS.get(n, 0.30)
    if not 0.0 < fraction <= 1.0:
        raise ValueError("budget_fraction must lie in (0, 1]")
    args = [(n, fraction, seed, i, maxstep_cap, record_trace) for i in range(replicates)]
    outcomes = _map(_table2_replicate, args, workers)
    cells = {}
    rows = []
    for i, out in enumerate(outcomes):
        row = {"replicate": i, "stop": out["stop"], "maxstep": out["maxstep"], "branch": out["branch"],
               "ell_hat": out["ell_hat"]}
        for (strategy, mode), res in out["runs"].items():
            cells.setdefault(f"{strategy}/{mode}", StrategyStats()).add(res)
            row[f"{strategy}/{mode}"] = {"energy": res.best.energy, "steps": res.steps_executed,
                                         "terminated_by": res.terminated_by, "wall_time": res.wall_time,
                                         "trace": res.trace}
        rows.append(row)
    strategies = {k: v.summary() for k, v in cells.items()}
    extra = {
        "mean_stop": math.fsum(r["stop"] for r in rows) / replicates,
        "step_ratio": {
            s: strategies[f"{s}/STOP"]["mean_steps"] / strategies[f"{s}/MAXSTEP"]["mean_steps"]
            for s in (SHERLOCK, SIMULATED_ANNEALING)
        },
        "energy_deficit": {
            s: strategies[f"{s}/MAXSTEP"]["mean_energy"] - strategies[f"{s}/STOP"]["mean_energy"]
            for s in (SHERLOCK, SIMULATED_ANNEALING)
        },
    }
    config = {"n": n, "budget_fraction": fraction, "alpha_p": TABLE2_ALPHA, "beta_p": TABLE2_BETA,
              "time_model": CONDITIONAL_EXPONENTIAL, "maxstep_cap": maxstep_cap}
    return ExperimentReport(f"table2-n{n}", replicates, seed, config, strategies, extra, rows)


def adversarial_pool(n: int, beta: float, epsilon: float, total: float = 1.0) -> Pool:
    """One accurate member costing the whole budget plus ``n - 1`` cheap weaker ones."""
    members = [("D1", 1.0 - beta, total)]
    members += [(f"D{i}", 0.5 + epsilon, total / n) for i in range(2, n + 1)]
    return validate_pool(members)


def _mc_vs_sa_replicate(args):
    pool, target, master_seed, index, steps, record_trace = args
    out = {}
    for s, strategy in enumerate((MONTE_CARLO, SIMULATED_ANNEALING)):
        cfg = SearchConfig(strategy, seed=replicate_seed(master_seed, 10 * index + s),
                           stop_rule=StopRule.maxstep_only(steps), sa_schedule=MC_VS_SA_SCHEDULE,
                           record_trace=record_trace)
        out[strategy] = run_search(pool, 1.0, None, cfg)
    return out


def run_mc_vs_sa_experiment(
    n: int = MC_VS_SA_N,
    beta: float = MC_VS_SA_BETA,
    epsilon: float = MC_VS_SA_EPSILON,
    replicates: int = 100,
    seed: int = 0,
    *,
    steps: int = MC_VS_SA_STEPS,
    workers: int | None = None,
    record_trace: bool = False,
) -> ExperimentReport:
    """Share of runs in which MC and SA reach the exhaustive optimum with equal step budgets."""
    _check_replicates(replicates)
    if not (0.0 < beta < 0.5 and 0.0 < epsilon < 0.5):
        raise ValueError("beta and epsilon must lie in (0, 1/2)")
    pool = adversarial_pool(n, beta, epsilon)
    oracle = best_subset_exhaustive(pool, 1.0)
    args = [(pool, oracle.energy, seed, i, steps, record_trace) for i in range(replicates)]
    outcomes = _map(_mc_vs_sa_replicate, args, workers)
    cells = {MONTE_CARLO: StrategyStats(), SIMULATED_ANNEALING: StrategyStats()}
    rows = []
    for i, out in enumerate(outcomes):
        row = {"replicate": i}
        for strategy, res in out.items():
            hit = res.best.energy >= oracle.energy - 1e-9
            cells[strategy].add(res, hit)
            row[strategy] = {"energy": res.best.energy, "hit": hit, "steps": res.steps_executed,
                             "wall_time": res.wall_time, "trace": res.trace}
        rows.append(row)
    strategies = {k: v.summary(precision=True) for k, v in cells.items()}
    config = {"n": n, "beta": beta, "epsilon": epsilon, "steps": steps,
              "sa_schedule": asdict(MC_VS_SA_SCHEDULE)}
    extra = {"oracle_ids": oracle.ids(pool), "oracle_energy": oracle.energy}
    return ExperimentReport("mc-vs-sa", replicates, seed, config, strategies, extra, rows)


def od_pool() -> Pool:
    return validate_pool(OD_POOL)


def od_model(curve=None) -> EnergyModel:
    curve = curve if curve is not None else fit_constraint_curve(OD_WEIGHTS)
    return EnergyModel.constrained(OD_WEIGHTS, curve)


def _od_replicate(args):
    pool, budget, model, rule, master_seed, index, record_trace = args
    out = {}
    for s, strategy in enumerate((SHERLOCK, SIMULATED_ANNEALING)):
        cfg = SearchConfig(strategy, seed=replicate_seed(master_seed, 10 * index + s), stop_rule=rule,
                           record_trace=record_trace)
        out[strategy] = run_search(pool, budget, model, cfg)
    return out


def run_od_experiment(
    budget_fraction: float = OD_BUDGET_FRACTION,
    replicates: int = 100,
    seed: int = 0,
    *,
    maxstep_cap: int = OD_MAXSTEP_CAP,
    workers: int | None = None,
    record_trace: bool = False,
) -> ExperimentReport:
    """Eight-detector pool under constrained voting, searched by SHErLoCk and SA.

    The ensemble size comes from the mean-cost rule and the energy mean
    from the fitted decision curve; the variance uses the plain formula.
    """
    _check_replicates(replicates)
    pool = od_pool()
    budget = budget_fraction * pool.total_cost
    curve = fit_constraint_curve(OD_WEIGHTS)
    model = od_model(curve)
    dist = fit_accuracy_distribution(pool.accuracies)
    ell_hat = estimate_ell_mean_cost(pool.costs, budget)
    rule = derive_stop_rule(dist, pool.n, budget, pool.costs, ell_estimator=ELL_MEAN_COST, curve=curve,
                            maxstep_cap=maxstep_cap)
    oracle = best_subset_exhaustive(pool, budget, model)
    args = [(pool, budget, model, rule, seed, i, record_trace) for i in range(replicates)]
    outcomes = _map(_od_replicate, args, workers)
    cells = {SHERLOCK: StrategyStats(), SIMULATED_ANNEALING: StrategyStats()}
    rows = []
    for i, out in enumerate(outcomes):
        row = {"replicate": i}
        for strategy, res in out.items():
            cells[strategy].add(res, res.best.energy >= oracle.energy - 1e-9)
            row[strategy] = {"energy": res.best.energy, "steps": res.steps_executed,
                             "terminated_by": res.terminated_by, "wall_time": res.wall_time,
                             "trace": res.trace}
        rows.append(row)
    strategies = {k: v.summary(precision=True) for k, v in cells.items()}
    extra = {
        "ell_hat": ell_hat,
        "curve": list(curve),
        "constrained_mean": constrained_mean_q(curve, dist.mean, ell_hat),
        "curve_at_mean": constrained_mean_q(curve, dist.mean),
        "accuracy_source": dist.source,
        "stop_rule": rule.to_dict(),
        "oracle_ids": oracle.ids(pool),
        "oracle_energy": oracle.energy,
    }
    config = {"budget_fraction": budget_fraction, "budget": budget, "weights": list(OD_WEIGHTS),
              "maxstep_cap": maxstep_cap}
    return ExperimentReport("od", replicates, seed, config, strategies, extra, rows)
