import json

import numpy as np
import pytest

from ensk.energy import best_subset_exhaustive
from ensk.io import dumps
from ensk.simulation import (
    NO_TIME,
    OD_WEIGHTS,
    PoolGeneratorSpec,
    adversarial_pool,
    generate_pool,
    od_model,
    od_pool,
    replicate_rng,
    replicate_seed,
    run_mc_vs_sa_experiment,
    run_od_experiment,
    run_table2_experiment,
)


def test_generated_mean_accuracy():
    pool = generate_pool(PoolGeneratorSpec(30, seed=5))
    assert pool.n == 30
    assert abs(pool.accuracies.mean() - 17 / 22) < 0.05


def test_generate_single_member():
    assert generate_pool(PoolGeneratorSpec(1, seed=0)).n == 1


def test_generate_without_time_model():
    pool = generate_pool(PoolGeneratorSpec(10, time_model=NO_TIME, seed=2))
    assert np.all(pool.costs == 1.0)


def test_generate_deterministic():
    spec = PoolGeneratorSpec(20, seed=11)
    assert generate_pool(spec) == generate_pool(spec)


def test_generate_resamples_perfect_accuracy():
    # Beta(50, 0.01) puts most mass at 1.0 in double precision
    pool = generate_pool(PoolGeneratorSpec(50, alpha_p=50.0, beta_p=0.01, seed=1))
    assert np.all(pool.accuracies < 1.0 - 1e-9)
    assert np.all(np.isfinite(pool.costs))


@pytest.mark.parametrize("kwargs", [{"n": 0}, {"n": 3, "alpha_p": 0.0}, {"n": 3, "beta_p": -1.0}, {"n": 3, "time_model": "gamma"}])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        PoolGeneratorSpec(**kwargs)


def test_replicate_streams_independent_of_order():
    a = replicate_rng(7, 3).random(4)
    replicate_rng(7, 2).random(10)
    assert np.array_equal(a, replicate_rng(7, 3).random(4))
    assert replicate_seed(7, 3) == replicate_seed(7, 3) != replicate_seed(7, 4)


def test_table2_small_run_reproducible():
    one = run_table2_experiment(30, replicates=1, seed=3, maxstep_cap=50)
    two = run_table2_experiment(30, replicates=1, seed=3, maxstep_cap=50)
    assert dumps(one.to_dict(with_timing=False)) == dumps(two.to_dict(with_timing=False))
    assert set(one.strategies) == {"sherlock/STOP", "sherlock/MAXSTEP", "simulated-annealing/STOP", "simulated-annealing/MAXSTEP"}
    assert one.config["budget_fraction"] == 0.30
    for cell in one.strategies.values():
        assert 0.0 <= cell["mean_energy"] <= 1.0


def test_table2_independent_of_workers():
    serial = run_table2_experiment(30, replicates=2, seed=4, maxstep_cap=30)
    parallel = run_table2_experiment(30, replicates=2, seed=4, maxstep_cap=30, workers=2)
    assert dumps(serial.to_dict(with_timing=False)) == dumps(parallel.to_dict(with_timing=False))


def test_timing_stripped():
    report = run_table2_experiment(30, replicates=1, seed=0, maxstep_cap=20)
    assert "wall_time" not in json.dumps(report.to_dict(with_timing=False))
    assert "wall_time" in json.dumps(report.to_dict())


def test_adversarial_pool():
    pool = adversarial_pool(15, 0.1, 0.05)
    assert pool.n == 15
    assert pool[0].accuracy == pytest.approx(0.9)
    assert pool[1].cost == pytest.approx(1 / 15)


def test_mc_vs_sa_small():
    report = run_mc_vs_sa_experiment(replicates=3, seed=1, steps=200)
    assert report.extra["oracle_ids"] == ["D1"]
    for cell in report.strategies.values():
        assert 0.0 <= cell["precision"] <= 1.0


def test_mc_vs_sa_optimum_flips():
    report = run_mc_vs_sa_experiment(beta=0.49, epsilon=0.49, replicates=2, steps=100)
    assert "D1" not in report.extra["oracle_ids"]
    pool = adversarial_pool(15, 0.49, 0.49)
    assert report.extra["oracle_energy"] == best_subset_exhaustive(pool, 1.0).energy


@pytest.mark.parametrize("kwargs", [{"replicates": 0}, {"beta": 0.5}, {"epsilon": 0.0}])
def test_mc_vs_sa_rejects(kwargs):
    with pytest.raises(ValueError):
        run_mc_vs_sa_experiment(**kwargs)


def test_od_fixed_quantities():
    report = run_od_experiment(replicates=1, maxstep_cap=20)
    assert report.extra["ell_hat"] == 7
    assert abs(report.extra["constrained_mean"] - 0.969) <= 0.005


def test_od_full_budget_matches_oracle():
    report = run_od_experiment(budget_fraction=1.0, replicates=2, maxstep_cap=300)
    pool, model = od_pool(), od_model()
    oracle = best_subset_exhaustive(pool, pool.total_cost, model)
    assert report.extra["oracle_ids"] == oracle.ids(pool)
    assert report.extra["oracle_energy"] == pytest.approx(oracle.energy, abs=1e-12)
    for cell in report.strategies.values():
        assert cell["mean_energy"] <= oracle.energy + 1e-12


def test_od_model_uses_table():
    assert tuple(od_model().weights(8)) == OD_WEIGHTS
