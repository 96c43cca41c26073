import json
import subprocess
import sys

import numpy as np
import pytest

from ensk.cli import main
from ensk.errors import PoolFormatError, PoolValidationError
from ensk.io import parse_pool_csv, parse_weights, read_pool_csv, verify_document, write_pool_csv
from ensk.simulation import OD_WEIGHTS, PoolGeneratorSpec, generate_pool, od_pool

from helpers import make_pool

OD_WEIGHTS_ARG = ",".join(str(w) for w in OD_WEIGHTS)


@pytest.fixture
def pool_file(tmp_path):
    def write(pool, name="pool.csv"):
        path = tmp_path / name
        write_pool_csv(pool, path)
        return str(path)

    return write


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# csv ingestion


def test_parse_without_cost_column():
    pool = parse_pool_csv("id,accuracy\na,0.7\nb,0.8\n")
    assert list(pool.costs) == [1.0, 1.0]


def test_parse_ignores_blank_lines_and_whitespace():
    pool = parse_pool_csv("id, accuracy, cost\na,0.7,2\n\nb,0.8,3\n")
    assert pool.ids == ["a", "b"]


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("name,accuracy\na,0.5\n", "missing column"),
        ("id,accuracy,cost\na,high,1\n", "row 2"),
        ("id,accuracy,cost\na,0.5,1\nb,0.5,nan\n", "row 3"),
        ("id,accuracy,cost\n,0.5,1\n", "empty id"),
        ("id,accuracy\na,0.5,7\n", "too many"),
    ],
)
def test_parse_errors_name_the_row(text, fragment):
    with pytest.raises(PoolFormatError, match=fragment):
        parse_pool_csv(text)


def test_parse_invariant_violations():
    with pytest.raises(PoolValidationError):
        parse_pool_csv("id,accuracy,cost\na,0.5,1\na,0.6,0\n")


def test_csv_roundtrip(tmp_path):
    pool = generate_pool(PoolGeneratorSpec(12, seed=3))
    write_pool_csv(pool, tmp_path / "p.csv")
    assert read_pool_csv(tmp_path / "p.csv") == pool


def test_parse_weights(tmp_path):
    assert parse_weights("0,0.5,1") == (0.0, 0.5, 1.0)
    (tmp_path / "w.txt").write_text("0\n0.2\n1\n")
    assert parse_weights(str(tmp_path / "w.txt")) == (0.0, 0.2, 1.0)
    with pytest.raises(PoolFormatError):
        parse_weights("0,x,1")


# solve


def test_solve_od_constrained(pool_file, capsys):
    path = pool_file(od_pool())
    code, out, _ = run(["solve", path, "--budget", "240.8", "--model", "constrained", "--weights", OD_WEIGHTS_ARG,
                        "--ell-estimator", "mean-cost"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["stop_rule"]["derivation"]["ell_hat"] == 7
    assert doc["selection"]["total_cost"] <= 240.8
    assert verify_document(doc)


@pytest.mark.parametrize("strategy", ["greedy-forward", "greedy-backward", "monte-carlo", "simulated-annealing", "sherlock"])
def test_solve_every_strategy_verifies(strategy, pool_file, capsys, tmp_path):
    pool = generate_pool(PoolGeneratorSpec(15, seed=1))
    path = pool_file(pool)
    out_path = tmp_path / "doc.json"
    code, _, _ = run(["solve", path, "--budget", str(0.3 * pool.total_cost), "--strategy", strategy,
                      "--maxstep-cap", "2000", "--trace", "--out", str(out_path)], capsys)
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert verify_document(doc)
    assert doc["search"]["terminated_by"] in ("StopThreshold", "MaxStep", "Exhausted")
    energies = [e for _, e in doc["search"]["trace"]]
    assert energies == sorted(energies)


def test_solve_single_member(pool_file, capsys):
    code, out, _ = run(["solve", pool_file(make_pool([0.8], [2.0])), "--budget", "2"], capsys)
    assert code == 0
    assert json.loads(out)["selection"]["ids"] == ["m0"]


def test_solve_infeasible_exit_3(pool_file, capsys):
    code, _, err = run(["solve", pool_file(make_pool([0.8, 0.9], [2.0, 3.0])), "--budget", "1"], capsys)
    assert code == 3
    assert "error" in err


def test_solve_seed_from_environment(pool_file, capsys, monkeypatch):
    monkeypatch.setenv("ENSK_SEED", "17")
    code, out, _ = run(["solve", pool_file(od_pool()), "--budget", "200", "--omit-timing"], capsys)
    assert code == 0
    assert json.loads(out)["seed"] == 17


@pytest.mark.parametrize(
    "extra",
    [
        ["--budget", "-3"],
        ["--model", "constrained"],
        ["--weights", "0,1"],
        ["--model", "constrained", "--weights", "0,0,1,1"],
        ["--model", "constrained", "--weights", "0,0.5,0.2,1"],
    ],
)
def test_solve_input_errors(extra, pool_file, capsys):
    code, _, err = run(["solve", pool_file(od_pool())] + extra, capsys)
    assert code == 2
    assert "error" in err


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, err = run(["solve", str(tmp_path / "absent.csv")], capsys)
    assert code == 2 and "absent.csv" in err


def test_malformed_row_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("id,accuracy,cost\na,0.5,1\nb,oops,1\n")
    code, _, err = run(["stats", str(path)], capsys)
    assert code == 2 and "row 3" in err


def test_bad_flag_exit_2(pool_file):
    with pytest.raises(SystemExit) as info:
        main(["solve", pool_file(od_pool()), "--strategy", "tabu"])
    assert info.value.code == 2


# stats


def test_stats_beta_branch(pool_file, capsys):
    pool = generate_pool(PoolGeneratorSpec(30, seed=2))
    code, out, _ = run(["stats", pool_file(pool), "--budget", str(0.3 * pool.total_cost)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["accuracy_distribution"]["source"] == "beta"
    assert set(doc["ell_hat"]["estimates"]) >= {"beta", "mean-cost", "poisson-quantile"}
    energy = doc["energy_distribution"]
    if doc["stop_rule"]["derivation"]["branch"] == "beta":
        assert all(energy[k] is not None for k in ("alpha", "beta", "mode", "skewness", "stop_prob"))


def test_stats_no_cost_no_budget(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("id,accuracy\n" + "".join(f"m{i},{0.6 + 0.03 * i}\n" for i in range(8)))
    code, out, _ = run(["stats", str(path)], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["ell_hat"]["used"] == "pool-size" and doc["ell_hat"]["value"] == 8


def test_stats_perfect_member_empirical(pool_file, capsys):
    code, out, _ = run(["stats", pool_file(make_pool([0.7, 0.8, 1.0, 0.9, 0.75, 0.85]))], capsys)
    assert code == 0
    assert json.loads(out)["accuracy_distribution"]["source"] == "empirical"


# oracle


def test_oracle_stuck_fixture(pool_file, capsys, stuck_pool):
    code, out, _ = run(["oracle", pool_file(stuck_pool), "--budget", "5"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert len(doc["selection"]["ids"]) == 5
    assert doc["selection"]["energy"] == pytest.approx(0.5112, abs=1e-4)
    assert verify_document(doc)


def test_oracle_too_large_exit_4(pool_file, capsys):
    code, _, _ = run(["oracle", pool_file(make_pool([0.6] * 23))], capsys)
    assert code == 4


def test_oracle_dominates_solve(pool_file, capsys):
    rng = np.random.default_rng(5)
    pool = make_pool(rng.uniform(0.5, 0.95, 10), rng.uniform(0.5, 2.0, 10))
    path = pool_file(pool)
    _, out, _ = run(["oracle", path, "--budget", "5"], capsys)
    best = json.loads(out)["selection"]["energy"]
    for strategy in ("greedy-forward", "monte-carlo", "sherlock"):
        _, out, _ = run(["solve", path, "--budget", "5", "--strategy", strategy], capsys)
        assert json.loads(out)["selection"]["energy"] <= best + 1e-12


# reproduce


def test_reproduce_writes_outputs(tmp_path, capsys):
    code, out, _ = run(["reproduce", "od", "--replicates", "2", "--seed", "7", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    assert json.loads(out)["experiment"] == "od"
    for name in ("report.json", "replicates.csv", "traces.csv"):
        assert (tmp_path / name).stat().st_size > 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert set(report["strategies"]) == {"sherlock", "simulated-annealing"}


def test_reproduce_bad_experiment():
    with pytest.raises(SystemExit) as info:
        main(["reproduce", "table3"])
    assert info.value.code == 2


def test_reproduce_zero_replicates(tmp_path, capsys):
    code, _, _ = run(["reproduce", "od", "--replicates", "0", "--out-dir", str(tmp_path)], capsys)
    assert code == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ensk.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "0.1.0" in out.stdout
