import itertools
import sys
from pathlib import Path

import numpy as np
import pytest
import sympy

sys.path.append(str(Path(__file__).resolve().parents[1] / "src"))

from randpoly.ffpoly import (
    FFPoly,
    PrimeModulus,
    ZeroPolynomialError,
    count_distinct_roots,
    count_roots_batch,
    degree_sequence,
    divides_mask,
    factorize,
    int_mod_batch,
    is_probable_prime,
    is_squarefree_mod,
    next_prime,
    reduce_mod,
    roots_mod_p,
)
from randpoly.intpoly import IntPoly


def _product(factors, p):
    out = FFPoly((1,), PrimeModulus(p))
    for g, m in factors:
        out = out * g ** m
    return out


def test_reduce_mod_examples():
    assert reduce_mod(IntPoly((-5, 0, 1)), 5).coeffs == (0, 0, 1)
    assert reduce_mod(IntPoly((7, 2)), 7).coeffs == (0, 2)
    reduced = reduce_mod(IntPoly((4, 1, 0, 3)), 3)
    assert reduced.coeffs == (1, 1)
    assert reduced.degree == 1


def test_prime_modulus_rejects_composites():
    with pytest.raises(ValueError):
        PrimeModulus(91)
    assert PrimeModulus(101).certified


def test_miller_rabin_matches_sympy():
    for n in list(range(0, 2000)) + [2 ** 61 - 1, 2 ** 61 + 1, 3215031751, 1000000007 * 998244353]:
        assert is_probable_prime(n) == sympy.isprime(n)
    assert next_prime(100) == 101
    assert next_prime(1) == 2


def test_count_distinct_roots_examples():
    assert count_distinct_roots(reduce_mod([1, 0, 1], 5)) == 2
    assert count_distinct_roots(reduce_mod([1, 0, 1], 7)) == 0
    assert count_distinct_roots(reduce_mod([1, -2, 1], 5)) == 1


def test_zero_polynomial_rejected():
    with pytest.raises(ZeroPolynomialError):
        count_distinct_roots(reduce_mod([5, 10], 5))
    with pytest.raises(ValueError):
        factorize(reduce_mod([0], 3))


def test_degree_sequence_examples():
    assert degree_sequence(reduce_mod([1, 0, 0, 0, 1], 3)) == (2, 2)
    assert degree_sequence(reduce_mod([1, 0, 0, 0, 1], 2)) == (1, 1, 1, 1)
    assert degree_sequence(reduce_mod([1, 1, 1], 2)) == (2,)


def test_factorize_examples():
    factors = factorize(reduce_mod([-1, 0, 1], 5))
    assert [(g.coeffs, m) for g, m in factors] == [((1, 1), 1), ((4, 1), 1)]

    quartic = reduce_mod([1, 0, 0, 0, 1], 3)
    factors = factorize(quartic)
    assert [g.degree for g, _ in factors] == [2, 2]
    assert _product(factors, 3) == quartic

    assert [(g.coeffs, m) for g, m in factorize(reduce_mod([0, 0, 0, 1], 7))] == [((0, 1), 3)]


@pytest.mark.parametrize("p", [2, 3, 5, 101, 1009])
def test_factorize_reconstructs(p):
    rng = np.random.default_rng(p)
    for _ in range(100):
        deg = int(rng.integers(1, 9))
        coeffs = [int(c) for c in rng.integers(0, p, size=deg + 1)]
        coeffs[-1] = int(rng.integers(1, p))
        f = reduce_mod(coeffs, p)
        factors = factorize(f, seed=int(rng.integers(1 << 30)))
        assert _product(factors, p) == f.monic()
        assert sum(g.degree * m for g, m in factors) == f.degree
        assert sum(degree_sequence(f)) == f.degree
        linear = sum(1 for g, _ in factors if g.degree == 1)
        assert count_distinct_roots(f) == linear


def test_root_counts_match_enumeration():
    rng = np.random.default_rng(5)
    for p in (2, 3, 5, 7, 11, 13, 31):
        for _ in range(60):
            deg = int(rng.integers(1, 7))
            coeffs = [int(c) for c in rng.integers(0, p, size=deg + 1)]
            coeffs[-1] = 1
            f = reduce_mod(coeffs, p)
            brute = [r for r in range(p) if f(r) == 0]
            assert count_distinct_roots(f) == len(brute)
            assert list(roots_mod_p(f)) == brute


def test_roots_mod_p_large_prime():
    f = reduce_mod(IntPoly((-1, 0, 1)) * IntPoly((-5, 1)), 1009)
    assert roots_mod_p(f) == (1, 5, 1008)


def test_count_roots_batch_agrees_with_scalar():
    primes = np.array([int(q) for q in sympy.primerange(3, 3000)], dtype=np.int64)
    for coeffs in ([1, 0, 1], [-2, 0, 0, 1], [1, 1, 1, 1, 1], [6, -5, 1], [3, 0, 0, 0, 0, 0, 7]):
        usable = primes[np.array([coeffs[-1] % int(q) != 0 for q in primes])]
        batch = count_roots_batch(coeffs, usable)
        scalar = [count_distinct_roots(reduce_mod(coeffs, int(q))) for q in usable]
        assert batch.tolist() == scalar


def test_count_roots_batch_rejects_bad_lanes():
    with pytest.raises(ValueError):
        count_roots_batch([1, 3], [3, 5])


def test_int_mod_batch_and_divides_mask():
    primes = np.array([3, 5, 7, 1000003, 4294967291], dtype=np.int64)
    for n in (0, 1, -1, 10 ** 30 + 7, -(3 ** 80), 5 * 7 * 2 ** 70):
        assert int_mod_batch(n, primes).tolist() == [n % int(q) for q in primes]
        assert divides_mask(n, primes).tolist() == [n % int(q) == 0 for q in primes]


def test_is_squarefree_mod():
    assert is_squarefree_mod(reduce_mod([1, 0, 1], 7))
    assert not is_squarefree_mod(reduce_mod([1, -2, 1], 7))
    # x^2 + 1 = (x + 1)^2 over F_2
    assert not is_squarefree_mod(reduce_mod([1, 0, 1], 2))


def test_degree_sequence_matches_sympy_small():
    x = sympy.symbols("x")
    for coeffs in itertools.product(range(3), repeat=4):
        coeffs = list(coeffs) + [1]
        f = reduce_mod(coeffs, 3)
        expected = []
        for g, m in sympy.factor_list(sympy.Poly(list(reversed(coeffs)), x, modulus=3))[1]:
            expected.extend([g.degree()] * m)
        assert degree_sequence(f) == tuple(sorted(expected))
