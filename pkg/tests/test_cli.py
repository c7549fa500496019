import csv
import json
import sys
from pathlib import Path

import pytest

sys.path.append(str(Path(__file__).resolve().parents[1] / "src"))

from randpoly import cli
from randpoly.records import read_records


def _run(capsys, *argv):
    code = cli.run(list(argv))
    captured = capsys.readouterr()
    lines = [line for line in captured.out.splitlines() if line.startswith("{")]
    record = json.loads(lines[-1]) if lines else None
    return code, record, captured.err


def test_resolve_threads():
    assert cli.resolve_threads(None, {}) == 1
    assert cli.resolve_threads(None, {"RANDPOLY_THREADS": "3"}) == 3
    assert cli.resolve_threads(2, {"RANDPOLY_THREADS": "3"}) == 2
    with pytest.raises(ValueError):
        cli.resolve_threads(None, {"RANDPOLY_THREADS": "many"})
    with pytest.raises(ValueError):
        cli.resolve_threads(0, {})


def test_threads_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("RANDPOLY_THREADS", "2")
    code, record, _ = _run(capsys, "power-sieve", "--poly", "[1,2,1]")
    assert code == 0
    assert record["config"]["threads"] == 2


def test_power_sieve_record(capsys):
    code, record, _ = _run(capsys, "power-sieve", "--poly", "[3,1,1]*[3,1,1]", "--detect")
    assert code == 0
    assert record["command"] == "power-sieve"
    assert record["results"]["verdict"] == "power-consistent"
    assert record["results"]["form"]["k"] == 2
    assert set(record) == {"command", "config", "results", "checks", "table_hash", "timing"}


def test_randomized_commands_need_a_seed(capsys):
    code, record, err = _run(capsys, "divisor-mc", "--d", "10", "--divisor", "[1,1]", "--n", "2000")
    assert code == 2
    assert record is None
    assert "--seed" in err
    code, _, _ = _run(capsys, "divisor-mc", "--d", "10", "--divisor", "[1,1]", "--seed", "-1")
    assert code == 2


def test_divisor_mc_is_reproducible(capsys):
    argv = ["divisor-mc", "--d", "10", "--divisor", "[1,1]", "--n", "2000", "--seed", "4"]
    _, first, _ = _run(capsys, *argv)
    _, second, _ = _run(capsys, *argv, "--threads", "2")
    assert first["results"]["hits"] == second["results"]["hits"]
    assert first["results"]["N"] == 2000
    assert first["checks"][0]["source"] == "paper-qualitative"


def test_bad_input_exits_with_two(capsys):
    code, _, err = _run(capsys, "power-sieve", "--poly", "[1,2")
    assert code == 2
    assert "power-sieve" in err
    assert cli.run(["no-such-command"]) == 2
    capsys.readouterr()


def test_version_flag(capsys):
    assert cli.run(["--version"]) == 0
    assert "randpoly" in capsys.readouterr().out


def test_annihilator_of_explicit_sequence(capsys):
    code, record, _ = _run(capsys, "annihilator", "--seq", "[1,2,4,8,16,32]", "--coeff-bound", "2")
    assert code == 0
    assert record["results"]["status"] == "found"
    assert record["results"]["poly"] == ["-2", "1"]
    assert record["checks"][0]["passed"]


def test_annihilator_of_lifted_sequence(capsys):
    code, record, _ = _run(capsys, "annihilator", "--primes", "11", "--alpha", "2", "--beta", "1", "--L", "10")
    assert code == 0
    results = record["results"]
    assert results["sequence"] == [1, 2, 4, -3, 5, -1, -2, -4, 3, -5, 1]
    assert results["konyagin_hypothesis"] is False
    assert results["poly"] == ["1", "0", "0", "0", "0", "1"]


def test_walk_exact_with_fourier_cross_check(capsys, tmp_path):
    out_csv = tmp_path / "walk.csv"
    code, record, _ = _run(capsys, "walk-exact", "--primes", "5", "7", "--alpha", "[[2],[3]]", "--d", "8",
                           "--fourier", "--csv", str(out_csv), "--assert")
    assert code == 0
    assert record["results"]["size"] == 35
    assert all(c["passed"] for c in record["checks"])
    with open(out_csv, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["x", "count", "probability"]
    assert len(rows) == 36


def test_walk_mix2(capsys):
    code, record, _ = _run(capsys, "walk-mix2", "--primes", "101", "--d", "300", "--assert")
    assert code == 0
    assert record["results"]["holds"] is True
    assert record["results"]["block_length"] == 6


def test_equidist_over_nonzero_parameters(capsys):
    code, record, _ = _run(capsys, "equidist", "--p", "101", "--d", "300", "--alphas", "nonzero",
                           "--method", "fourier")
    assert code == 0
    assert record["results"]["n_params"] == 100
    assert 0.9 <= record["results"]["total"] <= 1.1


def test_weights_check(capsys, tmp_path):
    out_csv = tmp_path / "weights.csv"
    code, record, _ = _run(capsys, "weights-check", "--X", "16", "--k", "4", "--n-points", "200",
                           "--csv", str(out_csv), "--assert")
    assert code == 0
    assert record["results"]["passed"] is True
    with open(out_csv, newline="") as f:
        assert len(list(csv.reader(f))) == 201


def test_failed_check_sets_exit_code_only_with_assert(capsys):
    argv = ["moments", "--poly", "[-2,0,0,1]", "--X", "11", "--m", "2", "--no-admissibility", "--expect", "100"]
    code, record, err = _run(capsys, *argv)
    assert code == 0
    assert record["checks"][0]["passed"] is False
    assert "moment-vs-expected" in err
    code, _, _ = _run(capsys, *argv, "--assert")
    assert code == 1


def test_factor_count_record(capsys, tmp_path):
    out = tmp_path / "records.jsonl"
    code, _, _ = _run(capsys, "factor-count", "--poly", "[-2,0,1]*[-2,0,0,1]", "--X", "12",
                      "--no-admissibility", "--out", str(out))
    assert code == 0
    record = read_records(out)[0]
    assert record["results"]["target"] == 2
    assert record["results"]["rounded"] == 2
    assert record["config"]["params"]["X"] == 12.0


def test_table_build_and_reuse(capsys, tmp_path):
    table = tmp_path / "table.json"
    code, record, _ = _run(capsys, "table-build", "--X", "11", "--enum-cap", "2", "--table-out", str(table))
    assert code == 0
    assert table.exists()
    built_hash = record["results"]["hash"]
    assert record["table_hash"] == built_hash

    code, record, _ = _run(capsys, "factor-count", "--poly", "[1,0,1]", "--X", "11", "--table", str(table))
    assert code == 0
    assert record["table_hash"] == built_hash


def test_pit_check(capsys):
    code, record, _ = _run(capsys, "pit-check", "--field", "[1,0,1]", "--X", "12", "--assert")
    assert code == 0
    assert record["results"]["field"]["irreducibility"] == "certified"


def test_z_stat_csv(capsys, tmp_path):
    out_csv = tmp_path / "z.csv"
    code, record, _ = _run(capsys, "z-stat", "--d", "8", "--X", "11", "--n", "2", "--seed", "5",
                           "--no-admissibility", "--csv", str(out_csv))
    assert code == 0
    assert record["results"]["n_samples"] == 2
    assert record["config"]["seed"] == 5
    with open(out_csv, newline="") as f:
        assert len(list(csv.reader(f))) == 3
