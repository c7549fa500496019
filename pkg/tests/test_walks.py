import cmath
import itertools
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parents[1] / "src"))

from randpoly.intpoly import IntPoly, cyclotomic_poly
from randpoly.model import CoefficientLaw, iid, rademacher, uniform_interval, zero_one_monic
from randpoly.walks import (
    CapExceededError,
    LiftedSequence,
    PreconditionError,
    PrimeNotFoundError,
    WalkParam,
    WalkSpace,
    a2_mixing,
    block_distribution,
    block_fourier_bound_check,
    centered_lift,
    character_phase,
    convolve,
    equidist_check,
    exact_distribution,
    exceptional_residue,
    find_konyagin_prime,
    fourier_coeff,
    fourier_inversion,
    konyagin_hypothesis,
    lambda_membership,
    lifted_sequence,
    minimal_annihilator,
    sample_walk,
    single_step_bound,
    vandermonde_propagation,
)

TERNARY = CoefficientLaw.uniform((-1, 0, 1))

SPACES = [
    (WalkSpace.single(5), 2),
    (WalkSpace.cyclic((5, 7)), ((2,), (3,))),
    (WalkSpace.single(5, 2), ((2, 3),)),
    (WalkSpace.single(5, 3), ((1, 2, 4),)),
]


def _points(space):
    for idx in np.ndindex(*space.shape):
        coords, start = [], 0
        for m in space.multiplicities:
            coords.append(tuple(idx[start:start + m]))
            start += m
        yield WalkParam(space, tuple(coords))


def _brute_force(space, alpha, model, d):
    alpha = WalkParam.scalar(space, alpha) if isinstance(alpha, int) else WalkParam(space, alpha)
    laws = [model.law_at(n, d) for n in range(d + 1)]
    counts = {}
    for choice in itertools.product(*[list(zip(mu.support, mu.probabilities)) for mu in laws]):
        prob = Fraction(1)
        coords = []
        for block, p in zip(alpha.coords, space.primes):
            coords.append(tuple(sum(x * pow(a, n, p) for n, (x, _) in enumerate(choice)) % p for a in block))
        for _, q in choice:
            prob *= q
        key = tuple(coords)
        counts[key] = counts.get(key, Fraction(0)) + prob
    return counts


@pytest.mark.parametrize("space,alpha", SPACES)
def test_exact_distribution_matches_enumeration(space, alpha):
    model = iid(5, TERNARY)
    dist = exact_distribution(space, alpha, model, 5)
    expected = _brute_force(space, alpha, model, 5)
    assert sum(dist.probability(x) for x in _points(space)) == 1
    for x in _points(space):
        assert dist.probability(x) == expected.get(x.coords, Fraction(0))


def test_exact_distribution_with_fixed_end_coefficients():
    space = WalkSpace.single(7)
    model = zero_one_monic(10)
    dist = exact_distribution(space, 3, model, 10)
    expected = _brute_force(space, 3, model, 10)
    for x in range(7):
        assert dist.probability(x) == expected.get(((x,),), Fraction(0))
    assert dist.mass == 2 ** 9


@pytest.mark.parametrize("space,alpha", SPACES)
def test_fourier_inversion_matches_exact(space, alpha):
    model = iid(7, CoefficientLaw.from_pmf({"-1": "1/4", "0": "1/4", "2": "1/2"}))
    exact = exact_distribution(space, alpha, model, 7).probabilities()
    inverted = fourier_inversion(space, alpha, model, 7)
    assert np.max(np.abs(exact - inverted)) <= 1e-9


@pytest.mark.parametrize("space,alpha", SPACES)
def test_fourier_coefficient_is_a_character_sum(space, alpha):
    model = iid(6, TERNARY)
    dist = exact_distribution(space, alpha, model, 6)
    points = list(_points(space))
    for beta in points[1:6]:
        direct = sum(
            float(dist.probability(x)) * cmath.exp(2j * math.pi * character_phase(space, beta, x)) for x in points
        )
        assert abs(fourier_coeff(space, alpha, beta, model, -1, 6) - direct) <= 1e-9


def test_monte_carlo_histogram_agrees_with_exact():
    space = WalkSpace.cyclic((5, 7))
    alpha = ((2,), (3,))
    model = zero_one_monic(8)
    n = 200_000
    hist = sample_walk(space, alpha, model, 8, n, np.random.default_rng(5))
    probs = exact_distribution(space, alpha, model, 8).probabilities()
    assert hist.sum() == n
    sigma = np.sqrt(probs * (1 - probs) / n)
    assert np.all(np.abs(hist / n - probs) <= 4 * sigma + 1e-12)


def test_block_convolution_identity():
    space = WalkSpace.single(7, 2)
    alpha = ((2, 5),)
    model = rademacher(9)
    whole = exact_distribution(space, alpha, model, 9)
    left = block_distribution(space, alpha, model, -1, 4, 9)
    right = block_distribution(space, alpha, model, 4, 9, 9)
    both = convolve(left, right)
    assert both.mass == whole.mass
    assert np.array_equal(both.counts, whole.counts)
    with pytest.raises(ValueError):
        block_distribution(space, alpha, model, 4, 4)


def test_rows_cover_the_space():
    space = WalkSpace.single(5)
    rows = exact_distribution(space, 2, zero_one_monic(4), 4).rows()
    assert len(rows) == 5
    assert sum(c for _, c, _ in rows) == 2 ** 3
    assert math.fsum(p for _, _, p in rows) == pytest.approx(1.0)


def test_space_validation_and_cap():
    with pytest.raises(ValueError):
        WalkSpace.single(3)
    with pytest.raises(ValueError):
        WalkSpace.single(9)
    with pytest.raises(ValueError):
        WalkSpace.cyclic((5, 5))
    big = WalkSpace.single(101, 4)
    with pytest.raises(CapExceededError):
        exact_distribution(big, 2, zero_one_monic(4), 4)
    with pytest.raises(CapExceededError):
        fourier_inversion(big, 2, zero_one_monic(4), 4)
    assert WalkSpace.cyclic((5, 7)).idempotents() == (21, 15)


def test_exceptional_residues():
    assert exceptional_residue(0, 101, 13.8, 0.01)
    assert exceptional_residue(1, 101, 13.8, 0.01)
    assert exceptional_residue(100, 101, 13.8, 0.01)
    assert not exceptional_residue(2, 101, 13.8, 0.01)
    space = WalkSpace.single(101)
    assert WalkParam.scalar(space, 2).admissible()
    assert not WalkParam.scalar(space, 10).admissible()
    assert not WalkParam(WalkSpace.single(7, 2), ((3, 3),)).generic


def test_equidist_methods_agree():
    space = WalkSpace.single(7)
    model = zero_one_monic(20)
    alphas = list(range(1, 7))
    exact = equidist_check(space, alphas, model, 20, method="exact", require_admissible=False)
    fourier = equidist_check(space, alphas, model, 20, method="fourier", require_admissible=False)
    assert exact.method == "exact"
    assert fourier.method == "fourier"
    assert exact.total == pytest.approx(fourier.total, abs=1e-9)
    assert exact.deviation == pytest.approx(abs(exact.total - 6 / 7), abs=1e-12)
    assert float(Fraction(exact.exact_deviation)) == pytest.approx(exact.deviation)
    assert equidist_check(space, alphas, model, 20, require_admissible=False).method == "exact"


def test_equidist_rejects_exceptional_parameters():
    space = WalkSpace.single(101)
    with pytest.raises(PreconditionError):
        equidist_check(space, [1], zero_one_monic(50), 50)
    with pytest.raises(ValueError):
        equidist_check(space, [2], zero_one_monic(50), 50, method="magic")
    report = equidist_check(space, [2, 3], zero_one_monic(50), 50)
    assert report.n_params == 2
    assert report.deviation < 0.05


def test_equidistribution_at_a_fixed_prime():
    report = equidist_check(WalkSpace.single(101), range(1, 101), zero_one_monic(2000), 2000,
                            method="fourier", require_admissible=False)
    assert report.n_params == 100
    assert 0.9 <= report.total <= 1.1
    assert report.expected == pytest.approx(100 / 101)


def test_single_step_bound_holds():
    laws = [
        CoefficientLaw.uniform((0, 1)),
        TERNARY,
        CoefficientLaw.from_pmf({"0": "3/4", "1": "1/4"}),
    ]
    for mu in laws:
        for beta in range(1, 101):
            value, bound = single_step_bound(mu, 1, beta, 101)
            assert value <= bound + 1e-12
    assert single_step_bound(CoefficientLaw.point_mass(3), 1, 5, 101) == (pytest.approx(1.0), 1.0)


def test_lifted_sequence_example():
    seq = lifted_sequence(WalkSpace.single(11), 2, 1, 10)
    assert seq.values == (1, 2, 4, -3, 5, -1, -2, -4, 3, -5, 1)
    assert not konyagin_hypothesis(seq, 10)
    assert centered_lift(6, 11) == -5
    assert centered_lift(5, 11) == 5
    assert centered_lift(5, 10) == 5
    with pytest.raises(PreconditionError):
        lifted_sequence(WalkSpace.cyclic((5, 7)), 2, ((1,), (0,)), 5)


def test_konyagin_hypothesis():
    assert konyagin_hypothesis(LiftedSequence((1, 0, 0, 0), 1000), 3)
    assert konyagin_hypothesis(LiftedSequence((0, 0, 0), 5), 2)
    with pytest.raises(ValueError):
        konyagin_hypothesis(LiftedSequence((1, 2), 5), 2)


def test_lambda_membership():
    seq = (1, 2, 4, 8, 16)
    assert lambda_membership(IntPoly((-2, 1)), seq, 1)
    assert lambda_membership(IntPoly((-2, 1)), seq, 3)
    assert not lambda_membership(IntPoly((-3, 1)), seq, 1)
    with pytest.raises(ValueError):
        lambda_membership(IntPoly((-2, 1)), seq, 0)
    with pytest.raises(ValueError):
        lambda_membership(IntPoly((-2, 1)), seq, 5)


def _recurrence_sequence(coeffs, start, length):
    x = list(start)
    k = len(coeffs) - 1
    while len(x) < length:
        n = len(x) - k
        x.append(-coeffs[-1] * sum(coeffs[i] * x[n + i] for i in range(k)))
    return x


def test_minimal_annihilator_recovers_recurrences():
    rng = np.random.default_rng(17)
    for _ in range(100):
        k = int(rng.integers(1, 11))
        coeffs = [int(c) for c in rng.integers(-1, 2, size=k + 1)]
        coeffs[-1] = int(rng.choice([-1, 1]))
        P = IntPoly(tuple(coeffs))
        start = [int(v) for v in rng.integers(-10 ** 6, 10 ** 6, size=k)]
        x = _recurrence_sequence(coeffs, start, 2 * k + 2)
        assert lambda_membership(P, x, k)
        result = minimal_annihilator(x, 1, len(x) // 2)
        assert result.status == "found"
        assert result.poly.height <= 1
        if coeffs[0] == 0:
            assert result.degree_searched <= k
            assert lambda_membership(result.poly, x, result.degree_searched)
        else:
            assert result.poly in (P, -P)


def test_minimal_annihilator_searches_multiples_of_a_tall_generator():
    P = IntPoly((-1, 1, 1, -1, -1, -1, 0, -1, 0, 1))
    seq = [0, 1, 4, 1, -3, 4, 4, 1, 0, -2, 1, 13, 6, 1, 4, 16, 27, 37, 22, 40]
    generator = IntPoly((-1, 2, -1, 0, -1, 0, 0, -1, 1))
    assert generator * IntPoly((1, 1)) == P
    assert lambda_membership(P, seq, 9)
    result = minimal_annihilator(seq, 1, 10)
    assert result.status == "found"
    assert result.poly == P
    assert result.degree_searched == 9
    assert minimal_annihilator(seq, 2, 10).poly == generator


def test_minimal_annihilator_limits():
    seq = (1, 2, 4, 8, 16, 32)
    assert minimal_annihilator(seq, 5, 3).poly == IntPoly((-2, 1))
    assert minimal_annihilator(seq, 1, 3).status == "not-found"
    with pytest.raises(ValueError):
        minimal_annihilator(seq, 5, 4)


def test_find_konyagin_prime_examples():
    assert find_konyagin_prime(IntPoly((-2, 0, 1)), 2) == 3
    assert find_konyagin_prime(cyclotomic_poly(5), 5) == 7
    assert find_konyagin_prime(cyclotomic_poly(5), 2) == 3
    assert find_konyagin_prime(IntPoly((-3, 1)), 1) == 2
    with pytest.raises(PrimeNotFoundError):
        find_konyagin_prime(cyclotomic_poly(3), 2)
    with pytest.raises(ValueError):
        find_konyagin_prime(IntPoly((-3, 1)), 0)


def test_vandermonde_propagation():
    P = IntPoly((-2, 1)) * IntPoly((-3, 1))
    assert vandermonde_propagation((2, 3), (1, 1), P, 7)
    assert vandermonde_propagation((2, 3), (1, 5), P, 7, horizon=40)
    with pytest.raises(PreconditionError):
        vandermonde_propagation((2, 3), (1, 1), IntPoly((-2, 1)), 7)
    with pytest.raises(PreconditionError):
        vandermonde_propagation((2, 9), (1, 1), P, 7)
    with pytest.raises(PreconditionError):
        vandermonde_propagation((2, 3), (1, 0), P, 7)


def test_block_fourier_bound():
    space = WalkSpace.single(101)
    model = zero_one_monic(1412)
    report = block_fourier_bound_check(space, 2, 1, model, 1412, 1412)
    assert report.L_min == 1412
    assert not report.vacuous
    assert len(report.blocks) == 1
    assert report.violations == ()

    short = block_fourier_bound_check(space, 2, 1, model, 10, 1412)
    assert short.vacuous
    assert short.blocks == ()
    assert block_fourier_bound_check(space, 1, 1, model, 1412, 1412).vacuous
    with pytest.raises(PreconditionError):
        block_fourier_bound_check(space, 2, 0, model, 1412, 1412)


def test_alpha_two_mixing():
    space = WalkSpace.single(101)
    report = a2_mixing(space, zero_one_monic(2000), 2000)
    assert report.holds
    assert report.failures == 0
    assert report.block_length == 6
    assert report.block_holds

    signs = a2_mixing(space, rademacher(2000), 2000)
    assert signs.holds
    assert signs.failures == 0
    assert signs.block_holds
    assert signs.block_max <= signs.block_bound
    assert signs.block_bound == pytest.approx(math.exp(-(1 - 0.5) / 16))

    early = a2_mixing(space, zero_one_monic(10), 10)
    assert not early.holds
    assert early.failures > 0


def test_alpha_two_mixing_preconditions():
    with pytest.raises(PreconditionError):
        a2_mixing(WalkSpace.single(101, 2), zero_one_monic(10), 10)
    with pytest.raises(PreconditionError):
        a2_mixing(WalkSpace.single(101), uniform_interval(10, 60), 10)
