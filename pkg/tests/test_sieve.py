import itertools
import math
import sys
from pathlib import Path

import pytest

sys.path.append(str(Path(__file__).resolve().parents[1] / "src"))

from randpoly.intpoly import X_POLY, AdmissibilityParams, IntPoly, cyclotomic_indices, cyclotomic_poly
from randpoly.model import rademacher, sample_polynomial, substream, zero_one_monic
from randpoly.sieve import (
    BudgetError,
    ExceptionalTable,
    build_exceptional_table,
    count_cyclotomic_products,
    cyclotomic_obstruction_mc,
    detect_power_form,
    divisor_probability_mc,
    load_small_mahler,
    power_sieve,
    wilson_interval,
)

LEHMER = IntPoly((1, 1, 0, -1, -1, -1, -1, -1, 0, 1, 1))


def _exact_divisor_probability(Q, d):
    hits = 0
    for middle in itertools.product((0, 1), repeat=d - 1):
        P = IntPoly((1,) + middle + (1,))
        if P.exact_quotient(Q) is not None:
            hits += 1
    return hits / 2 ** (d - 1)


def test_bundled_small_mahler_list():
    entries = load_small_mahler()
    names = [e.name for e in entries]
    assert "lehmer" in names
    lehmer = entries[names.index("lehmer")]
    assert lehmer.poly == LEHMER
    assert lehmer.measure == pytest.approx(1.176280818, abs=1e-6)


def test_exceptional_table_contents():
    params = AdmissibilityParams(10.5, 0.005)
    table = build_exceptional_table(params, enumeration_degree_cap=4)
    assert X_POLY in table
    assert all(cyclotomic_poly(n) in table for n in cyclotomic_indices(105))
    assert LEHMER not in table
    assert all(e.provenance in ("monomial", "cyclotomic") for e in table.entries)


def test_exceptional_table_finds_small_measure_polynomials():
    params = AdmissibilityParams(11, 0.2, relaxed=True)
    table = build_exceptional_table(params, enumeration_degree_cap=10)
    assert LEHMER in table
    assert IntPoly((1, 0, -1, -1, -1, 0, 1)) not in table


def test_exceptional_table_json_and_hash():
    params = AdmissibilityParams(10.5, 0.005)
    table = build_exceptional_table(params, enumeration_degree_cap=2)
    again = build_exceptional_table(params, enumeration_degree_cap=2)
    assert table.hash == again.hash
    restored = ExceptionalTable.from_json(table.to_json())
    assert restored.hash == table.hash
    assert restored.polynomials == table.polynomials

    tampered = table.to_json()
    tampered["entries"] = tampered["entries"][:-1]
    with pytest.raises(ValueError):
        ExceptionalTable.from_json(tampered)
    with pytest.raises(ValueError):
        ExceptionalTable.from_json({"entries": []})
    assert ExceptionalTable.empty(params).hash != table.hash


def test_enumeration_budget():
    with pytest.raises(BudgetError):
        build_exceptional_table(AdmissibilityParams(10.5, 0.005), enumeration_degree_cap=15)


def test_power_sieve_on_squares():
    square = IntPoly((1, 1)) ** 2
    report = power_sieve(square)
    assert report.verdict == "power-consistent"
    assert report.Y == len(report.primes) == 50
    assert report.support_ok
    assert all(q % 2 == 1 for q in report.primes)

    cube = IntPoly((1, 1, 1)) ** 3
    report = power_sieve(cube, k=3)
    assert report.verdict == "power-consistent"
    assert all((q - 1) % 3 == 0 for q in report.primes)


def test_power_sieve_with_denominator():
    R = IntPoly((2, 1))
    report = power_sieve(IntPoly((1, 1)) ** 2 * R, R)
    assert report.verdict == "power-consistent"
    with pytest.raises(ValueError):
        power_sieve(IntPoly((1, 1)), IntPoly((-2, 1)))
    with pytest.raises(ValueError):
        power_sieve(IntPoly((1, 1)), k=1)


def test_power_sieve_refutes_non_powers():
    report = power_sieve(IntPoly((1, 0, 1)))
    assert report.verdict == "refuted"
    assert report.Y < len(report.primes)
    assert report.to_json()["threshold"] == pytest.approx(100 / 3)


def test_detect_power_form():
    base = IntPoly((3, 1, 1))
    P = cyclotomic_poly(3) * base ** 2
    form = detect_power_form(P)
    assert form.kind == "power"
    assert form.k == 2
    assert form.base in (base, -base)
    assert form.phi * form.base ** form.k == P

    form = detect_power_form(cyclotomic_poly(4) * cyclotomic_poly(6))
    assert form.kind == "cyclotomic"

    form = detect_power_form(IntPoly((-2, 0, 0, 1)))
    assert form.kind == "none"
    assert form.k == 1


def test_wilson_interval():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0.0
    assert 0 < hi < 0.01
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(1 - hi)
    assert lo < 0.5 < hi


def test_divisor_probability_matches_enumeration():
    d = 10
    model = zero_one_monic(d)
    for Q in (IntPoly((1, 1)), cyclotomic_poly(3)):
        exact = _exact_divisor_probability(Q, d)
        report = divisor_probability_mc(Q, model, N=20_000, seed=11)
        sigma = math.sqrt(exact * (1 - exact) / report.N)
        assert abs(report.estimate - exact) <= 4 * sigma + 1e-12
        assert report.estimate <= report.sup_norm_bound + 4 * sigma
    assert divisor_probability_mc(cyclotomic_poly(3), model, N=1000, seed=1).cyclotomic_index == 3
    assert divisor_probability_mc(cyclotomic_poly(3), model, N=1000, seed=1).sup_norm_bound == 0.5


def test_cyclotomic_constant_fit_uses_the_index():
    d = 10
    model = zero_one_monic(d)
    minus_one = divisor_probability_mc(cyclotomic_poly(2), model, N=20_000, seed=11)
    assert minus_one.cyclotomic_index == 2
    assert minus_one.cyclotomic_constant_fit == pytest.approx((d / 2) * minus_one.estimate ** 2)

    cube_roots = divisor_probability_mc(cyclotomic_poly(3), model, N=20_000, seed=11)
    assert cube_roots.cyclotomic_index == 3
    assert cube_roots.cyclotomic_constant_fit == pytest.approx((d / 3) * cube_roots.estimate)
    assert cube_roots.to_json()["cyclotomic_constant_fit"]["label"] == "empirical"

    assert divisor_probability_mc(IntPoly((-2, 1)), model, N=1000, seed=0).cyclotomic_constant_fit is None


def test_divisor_probability_edge_cases():
    model = zero_one_monic(10)
    report = divisor_probability_mc(IntPoly.monomial(12) + IntPoly((1,)), model, N=1000, seed=0)
    assert report.hits == 0
    with pytest.raises(ValueError):
        divisor_probability_mc(IntPoly((1, 1)), model, N=999, seed=0)
    with pytest.raises(ValueError):
        divisor_probability_mc(IntPoly(()), model, N=1000, seed=0)


def test_divisor_probability_is_reproducible():
    model = zero_one_monic(16)
    a = divisor_probability_mc(IntPoly((1, 1)), model, N=5000, seed=3, threads=1)
    b = divisor_probability_mc(IntPoly((1, 1)), model, N=5000, seed=3, threads=4)
    assert a.hits == b.hits


def test_cyclotomic_obstruction_parity():
    report = cyclotomic_obstruction_mc(rademacher(8), n_bound=7, N=2000, seed=5)
    # nine odd coefficients never sum to zero
    assert report.frequency(1) == 0
    assert report.frequency(2) == 0
    assert report.zero_constant == 0


def test_cyclotomic_obstruction_frequencies():
    report = cyclotomic_obstruction_mc(rademacher(9), n_bound=7, N=20_000, seed=5)
    exact = math.comb(10, 5) / 2 ** 10
    sigma = math.sqrt(exact * (1 - exact) / report.N)
    assert abs(report.frequency(1) - exact) <= 4 * sigma
    assert report.any_hits >= max(hits for _, hits in report.per_index)
    assert report.irreducible_estimate == pytest.approx(1 - report.any_hits / report.N)
    data = report.to_json()
    assert set(data["freq_cyclotomic"]) == {str(n) for n, _ in report.per_index}
    with pytest.raises(ValueError):
        cyclotomic_obstruction_mc(rademacher(9), n_bound=1, N=2000, seed=5)


def test_count_cyclotomic_products():
    assert [count_cyclotomic_products(n) for n in range(5)] == [1, 2, 6, 10, 24]
    with pytest.raises(ValueError):
        count_cyclotomic_products(-1)


@pytest.mark.slow
def test_vanishing_at_minus_one_matches_local_limit():
    report = cyclotomic_obstruction_mc(zero_one_monic(400), n_bound=3, N=1_000_000, seed=2, threads=4)
    assert abs(report.frequency(2) - math.sqrt(2 / (math.pi * 400))) <= 0.003


def test_power_sieve_statistics():
    for i in range(200):
        Q = sample_polynomial(rademacher(8), substream(0, i))
        assert power_sieve(Q ** 2).verdict == "power-consistent"
    refuted = sum(
        power_sieve(sample_polynomial(zero_one_monic(60), substream(1, i))).verdict == "refuted"
        for i in range(200)
    )
    assert refuted >= 190
