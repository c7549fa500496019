import itertools
import math
import sys
from pathlib import Path

import numpy as np
import pytest
import sympy

sys.path.append(str(Path(__file__).resolve().parents[1] / "src"))

from randpoly.ffpoly import count_distinct_roots, reduce_mod
from randpoly.intpoly import AdmissibilityParams, IntPoly, NotSquarefreeError, cyclotomic_poly, discriminant
from randpoly.model import sample_polynomial, substream, zero_one_monic
from randpoly.primestats import (
    AdmissibleRootCounter,
    FieldSpec,
    Skip,
    admissible_root_count,
    exceptional_zero_effect,
    factor_count_estimate,
    mean_root_count,
    moment_estimate,
    pit_check,
    prime_ideal_count,
    prime_ideal_counts,
    transitivity_verdict,
    z_statistic,
)
from randpoly.sieve import ExceptionalTable, build_exceptional_table
from randpoly.weights import PrimeRange, WeightSpec, w_mass

SQRT2 = IntPoly((-2, 0, 1))
CBRT2 = IntPoly((-2, 0, 0, 1))


@pytest.fixture(scope="module")
def params():
    return AdmissibilityParams(15, 0.005)


@pytest.fixture(scope="module")
def table(params):
    return build_exceptional_table(params, enumeration_degree_cap=4)


def test_prime_ideal_count_examples():
    K = FieldSpec.from_poly(IntPoly((1, 0, 1)))
    assert prime_ideal_count(K, 5) == 2
    assert prime_ideal_count(K, 7) == 0
    assert isinstance(prime_ideal_count(K, 2), Skip)

    primes = np.array([int(q) for q in sympy.primerange(2, 500)], dtype=np.int64)
    counts, skip = prime_ideal_counts(FieldSpec.from_poly(CBRT2), primes)
    assert skip.tolist() == [int(q) in (2, 3) for q in primes]
    for q, c, s in zip(primes, counts, skip):
        if not s:
            assert c == count_distinct_roots(reduce_mod(CBRT2, int(q)))


def test_field_spec_certification():
    with pytest.raises(ValueError):
        FieldSpec.from_poly(IntPoly((-1, 0, 1)))
    with pytest.raises(ValueError):
        FieldSpec.from_poly(IntPoly((1, 0, 0, 0, 1)))
    asserted = FieldSpec.from_poly(IntPoly((1, 0, 0, 0, 1)), assert_irreducible=True)
    assert not asserted.vouched
    assert asserted.to_json()["irreducibility"] == "asserted"
    with pytest.raises(NotSquarefreeError):
        FieldSpec(IntPoly((1, 2, 1)))


@pytest.mark.parametrize("defining", [IntPoly((1, 0, 1)), CBRT2])
def test_prime_ideal_theorem(defining):
    report = pit_check(FieldSpec.from_poly(defining), 15)
    assert abs(report.estimate - 1) <= 0.05
    assert report.target == 1
    assert report.prime_count > 0
    assert report.skipped == ()


def test_pit_check_notes_asserted_fields():
    K = FieldSpec.from_poly(IntPoly((1, 0, 0, 0, 1)), assert_irreducible=True)
    report = pit_check(K, 12)
    assert report.notes
    assert abs(report.estimate - 1) <= 0.1


def test_small_primes_have_no_admissible_roots(params, table):
    # every nonzero residue mod 7 is a root of some Phi_n with phi(n) <= 6
    assert count_distinct_roots(reduce_mod(SQRT2, 7)) == 2
    assert admissible_root_count(SQRT2, 7, params, table) == 0
    assert admissible_root_count(SQRT2, 10007, params, table) == 2


def test_vectorized_counts_match_scalar(table):
    P = SQRT2 * CBRT2 * cyclotomic_poly(12)
    counter = AdmissibleRootCounter(P, table)
    assert counter.rest == SQRT2 * CBRT2
    primes = np.array([int(q) for q in sympy.primerange(10_000, 10_400)], dtype=np.int64)
    assert counter.counts(primes).tolist() == [counter.count(int(q)) for q in primes]


def test_counter_skips_leading_coefficient_primes(table):
    counter = AdmissibleRootCounter(IntPoly((1, 0, 3)), table)
    primes = np.array([3, 10007, 10009], dtype=np.int64)
    assert counter.skipped(primes).tolist() == [True, False, False]
    assert counter.counts(primes)[0] == 0
    with pytest.raises(ValueError):
        counter.count(3)


def test_factor_count_examples(params, table):
    report = factor_count_estimate([SQRT2, CBRT2], 15, params, table)
    assert report.target == 2
    assert report.rounded == 2
    assert report.distance < 0.1

    report = factor_count_estimate([cyclotomic_poly(12), IntPoly((-3, 0, 1))], 15, params, table)
    assert report.target == 1
    assert report.rounded == 1
    assert report.table_hash == table.hash


def test_factor_count_is_additive_over_coprime_factors(params, table):
    whole = factor_count_estimate(SQRT2 * CBRT2, 13, params, table).estimate
    parts = sum(factor_count_estimate(f, 13, params, table).estimate for f in (SQRT2, CBRT2))
    assert whole == pytest.approx(parts, rel=1e-12)


def test_second_moment_of_a_doubly_transitive_field(params, table):
    report = moment_estimate(CBRT2, 15, 2, params, table)
    assert report.kind == "moment"
    assert report.rounded == 2
    assert report.to_json()["bell"] == 2


def test_second_moment_with_empty_table(params):
    empty = ExceptionalTable.empty(params)
    verdict = transitivity_verdict(cyclotomic_poly(5), 15, 2, params, empty)
    assert verdict.rounded == 4
    assert verdict.verdict == "not 2-transitive (statistical)"

    verdict = transitivity_verdict(CBRT2, 15, 2, params, empty)
    assert verdict.verdict == "2-transitive (statistical)"


def test_transitivity_needs_admissible_degree(params, table):
    with pytest.raises(ValueError):
        transitivity_verdict(cyclotomic_poly(5), 15, 2, params, table)
    with pytest.raises(ValueError):
        moment_estimate(SQRT2, 15, 0, params, table)


def test_z_statistic_matches_moment_estimate(params, table):
    model = zero_one_monic(8)
    report = z_statistic(model, 12, 1, 3, params, seed=9, table=table)
    threaded = z_statistic(model, 12, 1, 3, params, seed=9, table=table, threads=3)
    assert report.values == threaded.values
    assert report.w == pytest.approx(w_mass(WeightSpec.h(12)), rel=1e-12)

    P = sample_polynomial(model, substream(9, 0))
    direct = moment_estimate(P, 12, 1, params, table).estimate - report.w
    assert report.values[0] == pytest.approx(direct, abs=1e-9)
    assert report.to_json()["n_samples"] == 3
    with pytest.raises(ValueError):
        z_statistic(model, 12, 1, 0, params, seed=9, table=table)


def test_exceptional_zero_effect():
    assert exceptional_zero_effect(1.0, 16, 4) == pytest.approx(0.0, abs=1e-15)
    value = exceptional_zero_effect(0.5, 16, 4)
    assert isinstance(value, float)
    assert 0 < value <= 16 * 0.5
    assert isinstance(exceptional_zero_effect(0.9 + 2j, 16, 4), complex)


def test_mean_root_count_of_irreducible_polynomial():
    mean = mean_root_count(IntPoly((1, 0, 1)), 1000, 100_000)
    assert abs(mean.mean - 1) <= 5 * mean.stderr + 0.01
    with pytest.raises(ValueError):
        mean_root_count(IntPoly((1, 0, 1)), 24, 28)


@pytest.mark.slow
@pytest.mark.parametrize(
    "factors,expected",
    [([SQRT2, CBRT2], 2), ([cyclotomic_poly(12), IntPoly((-3, 0, 1))], 1)],
)
def test_factor_count_at_full_scale(factors, expected):
    params = AdmissibilityParams(18, 0.005)
    report = factor_count_estimate(factors, 18, params, build_exceptional_table(params))
    assert report.rounded == expected
    assert report.distance < 0.05


@pytest.mark.slow
def test_prime_ideal_theorem_at_full_scale():
    report = pit_check(FieldSpec.from_poly(CBRT2), 18, prime_range=PrimeRange.for_weight(WeightSpec.h(18)))
    assert abs(report.estimate - 1) <= 0.01
    assert math.isfinite(report.estimate)


def test_root_counts_split_over_factors():
    pool = [SQRT2, CBRT2, IntPoly((1, 0, 1)), IntPoly((-3, 0, 1)), cyclotomic_poly(3),
            IntPoly((-1, -1, 0, 1)), cyclotomic_poly(8)]
    products = [c for r in (2, 3) for c in itertools.combinations(pool, r)][:50]
    for factors in products:
        P = IntPoly((1,))
        for f in factors:
            P = P * f
        bad = discriminant(P) * P.leading
        primes = [q for q in sympy.primerange(3, 3000) if bad % q][:200]
        assert len(primes) == 200
        for q in primes:
            whole = count_distinct_roots(reduce_mod(P, q))
            assert whole == sum(count_distinct_roots(reduce_mod(f, q)) for f in factors)
