"""Command line interface: ``ensk solve|stats|reproduce|oracle``.

Exit codes: 0 ok, 2 input error, 3 no feasible subset, 4 pool too large.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import __version__
from .core import EnergyModel, Pool
from .energy import best_subset_exhaustive
from .errors import EnskError, NoFeasibleSubset, TooLarge, TooFewInteriorPoints
from .io import dumps, parse_weights, read_pool_csv
from .search import ACCURACY, SHERLOCK, STRATEGIES, USEFULNESS, SearchConfig, run_search
from .simulation import (
    run_mc_vs_sa_experiment,
    run_od_experiment,
    run_table2_experiment,
)
from .stats import (
    ELL_ESTIMATORS,
    EMPIRICAL,
    AccuracyDistribution,
    MAXSTEP_CAP,
    derive_stop_rule,
    energy_distribution,
    estimate_ell,
    estimate_ell_beta,
    estimate_ell_mean_cost,
    estimate_ell_poisson_quantile,
    expected_ell_poisson_rate,
    fit_accuracy_distribution,
    fit_constraint_curve,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_TOO_LARGE = 4

EXPERIMENTS = ("table2-n30", "table2-n100", "mc-vs-sa", "od")


class InputError(EnskError, ValueError):
    pass


def default_seed() -> int:
    raw = os.environ.get("ENSK_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"ENSK_SEED={raw!r} is not an integer") from None


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if "wall_time" not in k}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _emit(doc: dict, out: str | None, omit_timing: bool) -> None:
    if omit_timing:
        doc = _strip_timing(doc)
    text = dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_model(args) -> tuple[EnergyModel, tuple | None]:
    if args.model == "plain":
        if args.weights:
            raise InputError("--weights requires --model constrained")
        return EnergyModel.plain(), None
    if not args.weights:
        raise InputError("--model constrained requires --weights")
    weights = parse_weights(args.weights)
    try:
        curve = fit_constraint_curve(weights)
    except TooFewInteriorPoints as exc:
        raise InputError(f"--weights: {exc}") from None
    return EnergyModel.constrained(weights, curve), curve


def describe_accuracies(pool: Pool) -> AccuracyDistribution:
    """Fitted accuracy law; a single member is a point mass."""
    if pool.n == 1:
        return AccuracyDistribution(EMPIRICAL, pool[0].accuracy, 0.0, n=1)
    return fit_accuracy_distribution(pool.accuracies)


def _budget(args, pool: Pool) -> float | None:
    if args.budget is None:
        return None
    if not args.budget > 0:
        raise InputError(f"--budget must be positive, got {args.budget}")
    return float(args.budget)


def _input_echo(args, pool: Pool, budget, model: EnergyModel) -> dict:
    return {
        "pool_file": str(args.pool),
        "pool": [list(r) for r in pool.records()],
        "budget": budget,
        "model": model.to_dict(),
    }


def _header(command: str, seed: int | None = None) -> dict:
    doc = {"tool": "ensk", "version": __version__, "command": command}
    if seed is not None:
        doc["seed"] = seed
    return doc


def cmd_solve(args) -> int:
    pool = read_pool_csv(args.pool)
    model, curve = build_model(args)
    budget = _budget(args, pool)
    seed = args.seed if args.seed is not None else default_seed()
    dist = describe_accuracies(pool)
    rule = derive_stop_rule(
        dist,
        pool.n,
        budget,
        pool.costs,
        ell_estimator=args.ell_estimator,
        curve=curve,
        maxstep_cap=args.maxstep_cap,
    )
    config = SearchConfig(
        args.strategy,
        key=args.key,
        seed=seed,
        stop_rule=rule,
        literal_eq5=args.literal_eq5,
        record_trace=args.trace,
    )
    limit = budget if budget is not None else pool.total_cost
    result = run_search(pool, limit, model, config)
    doc = _header("solve", seed)
    doc["input"] = _input_echo(args, pool, budget, model)
    doc["input"].update(
        strategy=args.strategy,
        key=args.key,
        ell_estimator=args.ell_estimator,
        maxstep_cap=args.maxstep_cap,
        literal_eq5=args.literal_eq5,
    )
    doc["accuracy_distribution"] = dist.to_dict()
    doc["stop_rule"] = rule.to_dict()
    res = result.to_dict(pool)
    doc["selection"] = {k: res.pop(k) for k in ("ids", "indices", "total_cost", "energy")}
    doc["search"] = res
    _emit(doc, args.out, args.omit_timing)
    return EXIT_OK


def cmd_stats(args) -> int:
    pool = read_pool_csv(args.pool)
    model, curve = build_model(args)
    budget = _budget(args, pool)
    dist = describe_accuracies(pool)
    estimates: dict = {}
    if budget is None:
        estimates = {"beta": None, "mean-cost": None, "poisson-quantile": None, "pool-size": pool.n}
    else:
        try:
            estimates["beta"] = estimate_ell_beta(dist.alpha, dist.beta, budget, pool.n) if dist.is_beta else None
        except EnskError:
            estimates["beta"] = None
        estimates["mean-cost"] = estimate_ell_mean_cost(pool.costs, budget)
        estimates["poisson-quantile"] = estimate_ell_poisson_quantile(pool.costs, budget)
        if dist.is_beta:
            estimates["expected_poisson_rate"] = expected_ell_poisson_rate(dist.alpha, dist.beta, budget)
    ell_hat, used = estimate_ell(dist, pool.n, budget, pool.costs, args.ell_estimator)
    rule = derive_stop_rule(
        dist, pool.n, budget, pool.costs, ell_estimator=args.ell_estimator, curve=curve,
        maxstep_cap=args.maxstep_cap,
    )
    doc = _header("stats")
    doc["input"] = _input_echo(args, pool, budget, model)
    doc["input"]["ell_estimator"] = args.ell_estimator
    doc["accuracy_distribution"] = dist.to_dict()
    doc["ell_hat"] = {"estimates": estimates, "used": used, "value": ell_hat}
    doc["energy_distribution"] = energy_distribution(dist, ell_hat, curve).to_dict()
    doc["stop_rule"] = rule.to_dict()
    _emit(doc, args.out, False)
    return EXIT_OK


def cmd_oracle(args) -> int:
    pool = read_pool_csv(args.pool)
    model, _ = build_model(args)
    budget = _budget(args, pool)
    limit = budget if budget is not None else pool.total_cost
    best = best_subset_exhaustive(pool, limit, model)
    doc = _header("oracle")
    doc["input"] = _input_echo(args, pool, budget, model)
    doc["selection"] = {
        "ids": best.ids(pool),
        "indices": list(best.indices),
        "total_cost": best.total_cost,
        "energy": best.energy,
    }
    _emit(doc, args.out, False)
    return EXIT_OK


def _write_replicate_csvs(report, out_dir: Path, omit_timing: bool) -> None:
    rows, traces = [], []
    for rep in report.per_replicate:
        for cell, data in rep.items():
            if not isinstance(data, dict):
                continue
            row = {"replicate": rep["replicate"], "cell": cell, "energy": repr(data["energy"]),
                   "steps": data["steps"], "terminated_by": data.get("terminated_by", ""),
                   "hit": data.get("hit", "")}
            if not omit_timing:
                row["wall_time"] = repr(data["wall_time"])
            rows.append(row)
            for step, energy in data.get("trace") or []:
                traces.append({"replicate": rep["replicate"], "cell": cell, "step": step, "best_energy": repr(energy)})
    for name, data, fields in (
        ("replicates.csv", rows, list(rows[0]) if rows else []),
        ("traces.csv", traces, ["replicate", "cell", "step", "best_energy"]),
    ):
        with open(out_dir / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            w.writerows(data)


def cmd_reproduce(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    if args.replicates < 1:
        raise InputError("--replicates must be at least 1")
    common = dict(replicates=args.replicates, seed=seed, workers=args.workers, record_trace=True)
    if args.experiment == "table2-n30":
        report = run_table2_experiment(30, **common, maxstep_cap=args.maxstep_cap)
    elif args.experiment == "table2-n100":
        report = run_table2_experiment(100, **common, maxstep_cap=args.maxstep_cap)
    elif args.experiment == "mc-vs-sa":
        report = run_mc_vs_sa_experiment(**common)
    else:
        report = run_od_experiment(**common)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = _header("reproduce", seed)
    doc.update(report.to_dict(with_timing=not args.omit_timing))
    summary = {k: v for k, v in doc.items() if k != "per_replicate"}
    for row in doc["per_replicate"]:
        for data in row.values():
            if isinstance(data, dict):
                data.pop("trace", None)
    (out_dir / "report.json").write_text(dumps(doc), encoding="utf-8")
    _write_replicate_csvs(report, out_dir, args.omit_timing)
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def _add_pool_args(p: argparse.ArgumentParser, budget_required: bool = False) -> None:
    p.add_argument("pool", help="CSV with columns id,accuracy[,cost]")
    p.add_argument("--budget", type=float, required=budget_required, help="total cost limit T")
    p.add_argument("--model", choices=("plain", "constrained"), default="plain")
    p.add_argument("--weights", help="decision weights p_{l,k}, comma-separated or a file")
    p.add_argument("--out", help="write the JSON document here instead of stdout")


def _add_rule_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ell-estimator", choices=ELL_ESTIMATORS, default=None,
                   help="ensemble-size estimator (default: beta if the fit is accepted, else mean-cost)")
    p.add_argument("--maxstep-cap", type=int, default=MAXSTEP_CAP)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ensk", description="Cost-constrained majority-voting ensemble search.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="search for an accurate ensemble within the budget")
    _add_pool_args(solve)
    _add_rule_args(solve)
    solve.add_argument("--strategy", choices=STRATEGIES, default=SHERLOCK)
    solve.add_argument("--key", choices=(ACCURACY, USEFULNESS), default=ACCURACY, help="greedy ordering key")
    solve.add_argument("--seed", type=int, default=None, help="master seed (default: $ENSK_SEED or 0)")
    solve.add_argument("--trace", action="store_true", help="record best-so-far energies")
    solve.add_argument("--literal-eq5", action="store_true",
                       help="use the unnormalised efficiency sum (always 1) for member sampling")
    solve.add_argument("--omit-timing", action="store_true", help="leave wall-clock fields out")

    stats = sub.add_parser("stats", help="stopping-rule diagnostics without searching")
    _add_pool_args(stats)
    _add_rule_args(stats)

    rep = sub.add_parser("reproduce", help="run a scripted experiment")
    rep.add_argument("experiment", choices=EXPERIMENTS)
    rep.add_argument("--replicates", type=int, default=100)
    rep.add_argument("--seed", type=int, default=None)
    rep.add_argument("--out-dir", default="results")
    rep.add_argument("--workers", type=int, default=None)
    rep.add_argument("--maxstep-cap", type=int, default=1000, help="MAXSTEP cap for the table2 experiments")
    rep.add_argument("--omit-timing", action="store_true")

    oracle = sub.add_parser("oracle", help="exhaustive optimum (at most 22 members)")
    _add_pool_args(oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"solve": cmd_solve, "stats": cmd_stats, "reproduce": cmd_reproduce, "oracle": cmd_oracle}
    try:
        return handlers[args.command](args)
    except TooLarge as exc:
        print(f"ensk: error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except NoFeasibleSubset as exc:
        print(f"ensk: error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (EnskError, ValueError) as exc:
        print(f"ensk: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
