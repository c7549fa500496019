"""Random walks ``sum_n X_n alpha^n`` on V = (+)_i F_{p_i}^{m_i}.

Exact path-count distributions, Fourier products, equidistribution
diagnostics, lifted sequences and their annihilators, and the alpha = 2 case.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from sympy import Matrix, n_order, primerange

from randpoly.ffpoly import inverse_mod, is_probable_prime
from randpoly.intpoly import IntPoly, euler_phi, is_squarefree, poly_gcd
from randpoly.model import CoefficientLaw, PolynomialModel, collision_norm, law_fourier, sample_law
from randpoly.sieve import load_small_mahler

logger = logging.getLogger(__name__)

# Largest |V| handled by the exact path-count DP
DEFAULT_EXACT_CAP = 10 ** 6
# |V| * (d + 1) below which equidist_check uses the exact DP when method="auto"
EXACT_WORK = 100_000
# Rows times columns of a Hankel system handed to the exact nullspace
ANNIHILATOR_BUDGET = 40_000
# Multipliers h tried at one degree when the kernel generator is too tall
MULTIPLIER_BUDGET = 200_000
# Numeric screen for root ratios on the unit circle
RATIO_TOL = 1e-8
# Slack on floating-point bound comparisons
BOUND_SLACK = 1e-12

Coords = Tuple[Tuple[int, ...], ...]


class CapExceededError(ValueError):
    """|V| is beyond the exact-DP cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(f"|V| = {size} exceeds the exact DP cap {cap}")
        self.size = size
        self.cap = cap


class PreconditionError(ValueError):
    """An operation's documented hypothesis does not hold for the input."""


class PrimeNotFoundError(ValueError):
    def __init__(self, s: int):
        super().__init__(f"No prime q in ({s}, {2 * s}] separates the root ratios")
        self.s = s


# ---------------------------------------------------------------------------
# Spaces and parameters


@dataclass(frozen=True)
class WalkSpace:
    primes: Tuple[int, ...]
    multiplicities: Tuple[int, ...]
    cap: int = DEFAULT_EXACT_CAP

    def __post_init__(self) -> None:
        primes = tuple(int(p) for p in self.primes)
        mults = tuple(int(m) for m in self.multiplicities)
        if not primes or len(primes) != len(mults):
            raise ValueError("Need one multiplicity per prime")
        if len(set(primes)) != len(primes):
            raise ValueError(f"Primes must be distinct: {primes}")
        for p in primes:
            if p < 5 or not is_probable_prime(p):
                raise ValueError(f"Walk moduli must be primes >= 5, got {p}")
        if any(m < 1 for m in mults):
            raise ValueError(f"Multiplicities must be positive: {mults}")
        object.__setattr__(self, "primes", primes)
        object.__setattr__(self, "multiplicities", mults)

    @classmethod
    def single(cls, p: int, m: int = 1, **kwargs) -> "WalkSpace":
        return cls((p,), (m,), **kwargs)

    @classmethod
    def cyclic(cls, primes: Sequence[int], **kwargs) -> "WalkSpace":
        """(+)_i F_{p_i}, i.e. Z/QZ."""

        return cls(tuple(primes), tuple(1 for _ in primes), **kwargs)

    @property
    def Q(self) -> int:
        return math.prod(self.primes)

    @property
    def D(self) -> int:
        return max(self.multiplicities)

    @property
    def size(self) -> int:
        return math.prod(p ** m for p, m in zip(self.primes, self.multiplicities))

    @property
    def log_QD(self) -> float:
        return self.D * math.log(self.Q)

    @property
    def axes(self) -> Tuple[int, ...]:
        """Modulus of every coordinate axis, block by block."""

        return tuple(p for p, m in zip(self.primes, self.multiplicities) for _ in range(m))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.axes

    def check_cap(self) -> None:
        if self.size > self.cap:
            raise CapExceededError(self.size, self.cap)

    def idempotents(self) -> Tuple[int, ...]:
        """CRT weights c_i with Psi(y) = sum c_i y_i mod Q."""

        Q = self.Q
        return tuple((Q // p) * inverse_mod(Q // p, p) % Q for p in self.primes)

    def to_json(self) -> Dict[str, object]:
        return {"primes": list(self.primes), "multiplicities": list(self.multiplicities)}


@dataclass(frozen=True)
class WalkParam:
    """alpha in V, one tuple of coordinates per block."""

    space: WalkSpace
    coords: Coords

    def __post_init__(self) -> None:
        coords = tuple(tuple(int(a) for a in block) for block in self.coords)
        if len(coords) != len(self.space.primes) or any(
            len(block) != m for block, m in zip(coords, self.space.multiplicities)
        ):
            raise ValueError(f"Coordinates {coords} do not match the blocks of {self.space.to_json()}")
        coords = tuple(tuple(a % p for a in block) for block, p in zip(coords, self.space.primes))
        object.__setattr__(self, "coords", coords)

    @classmethod
    def scalar(cls, space: WalkSpace, a: int) -> "WalkParam":
        return cls(space, tuple(tuple(a for _ in range(m)) for m in space.multiplicities))

    @property
    def flat(self) -> Tuple[int, ...]:
        return tuple(a for block in self.coords for a in block)

    @property
    def generic(self) -> bool:
        """Per block, coordinates nonzero and pairwise distinct."""

        return all(0 not in block and len(set(block)) == len(block) for block in self.coords)

    def is_zero(self) -> bool:
        return not any(self.flat)

    def admissible(self, kappa: float = 0.01) -> bool:
        log_QD = self.space.log_QD
        return not any(
            exceptional_residue(a, p, 3 * log_QD, kappa)
            for block, p in zip(self.coords, self.space.primes)
            for a in block
        )


def _param(space: WalkSpace, alpha) -> WalkParam:
    if isinstance(alpha, WalkParam):
        return alpha
    if isinstance(alpha, int):
        return WalkParam.scalar(space, alpha)
    return WalkParam(space, alpha)


def exceptional_residue(a: int, p: int, cyclotomic_degree: float, log_measure_bound: float) -> bool:
    """a is 0, a root of unity of order n with phi(n) <= cyclotomic_degree, or a root
    mod p of a bundled small-measure polynomial with log M <= log_measure_bound."""

    a %= p
    if a == 0:
        return True
    if euler_phi(int(n_order(a, p))) <= cyclotomic_degree:
        return True
    for entry in load_small_mahler():
        if math.log(entry.measure) <= log_measure_bound and entry.poly(a) % p == 0:
            return True
    return False


def _psi(space: WalkSpace, beta: WalkParam, powers: Sequence[Sequence[int]]) -> int:
    """Psi(tr(beta * alpha^n)) in Z/QZ for the given per-block powers of alpha."""

    total = 0
    for c, p, b_block, a_block in zip(space.idempotents(), space.primes, beta.coords, powers):
        total += c * (sum(b * a for b, a in zip(b_block, a_block)) % p)
    return total % space.Q


def _psi_phase(space: WalkSpace, beta: WalkParam, powers: Sequence[Sequence[int]]) -> float:
    return _psi(space, beta, powers) / space.Q


def character_phase(space: WalkSpace, beta, x) -> float:
    """Phase of the character paired with ``beta`` at ``x`` (both in V)."""

    return _psi_phase(space, _param(space, beta), _param(space, x).coords)


# ---------------------------------------------------------------------------
# Exact distributions


@dataclass(frozen=True, eq=False)
class ExactDist:
    """Path counts on V over a common denominator ``mass``."""

    space: WalkSpace
    counts: np.ndarray
    mass: int

    def count(self, x) -> int:
        return int(self.counts[tuple(_param(self.space, x).flat)])

    def probability(self, x) -> Fraction:
        return Fraction(self.count(x), self.mass)

    def probabilities(self) -> np.ndarray:
        return np.array([float(Fraction(int(c), self.mass)) for c in self.counts.flat]).reshape(self.counts.shape)

    def rows(self) -> List[Tuple[Tuple[int, ...], int, float]]:
        """``(x, count, probability)`` per atom, for CSV export."""

        return [
            (tuple(int(i) for i in idx), int(c), float(Fraction(int(c), self.mass)))
            for idx, c in np.ndenumerate(self.counts)
        ]


def _point_mass(space: WalkSpace) -> ExactDist:
    counts = np.zeros(space.shape, dtype=object)
    counts[(0,) * len(space.shape)] = 1
    return ExactDist(space, counts, 1)


def _powers(space: WalkSpace, alpha: WalkParam, n: int) -> Tuple[Tuple[int, ...], ...]:
    return tuple(tuple(pow(a, n, p) for a in block) for block, p in zip(alpha.coords, space.primes))


def _step(dist: ExactDist, law: CoefficientLaw, powers_flat: Sequence[int]) -> ExactDist:
    space = dist.space
    weights, den = law.integer_weights()
    axes = tuple(range(len(space.shape)))
    new = np.zeros(space.shape, dtype=object)
    for a, w in zip(law.support, weights):
        shift = tuple(a * x % p for x, p in zip(powers_flat, space.axes))
        new += w * np.roll(dist.counts, shift, axis=axes)
    return ExactDist(space, new, dist.mass * den)


def block_distribution(
    space: WalkSpace, alpha, model: PolynomialModel, l1: int, l2: int, d: Optional[int] = None
) -> ExactDist:
    """Law of ``sum_{l1 < n <= l2} X_n alpha^n`` as exact path counts."""

    space.check_cap()
    alpha = _param(space, alpha)
    if l1 >= l2:
        raise ValueError(f"Empty block ({l1}, {l2}]")
    length = model.degree if d is None else d
    dist = _point_mass(space)
    for n in range(l1 + 1, l2 + 1):
        flat = tuple(a for block in _powers(space, alpha, n) for a in block)
        dist = _step(dist, model.law_at(n, length), flat)
    return dist


def exact_distribution(space: WalkSpace, alpha, model: PolynomialModel, d: int) -> ExactDist:
    """``nu_alpha^(d)``: law of ``sum_{n=0}^{d} X_n alpha^n``."""

    dist = block_distribution(space, alpha, model, -1, d, d)
    logger.debug("Exact walk on |V|=%d after %d steps: mass of %d bits", space.size, d + 1, dist.mass.bit_length())
    return dist


def convolve(a: ExactDist, b: ExactDist) -> ExactDist:
    if a.space != b.space:
        raise ValueError("Distributions live on different spaces")
    axes = tuple(range(a.counts.ndim))
    out = np.zeros(a.counts.shape, dtype=object)
    for idx, c in np.ndenumerate(a.counts):
        if c:
            out += c * np.roll(b.counts, idx, axis=axes)
    return ExactDist(a.space, out, a.mass * b.mass)


# ---------------------------------------------------------------------------
# Fourier side


def fourier_coeff(
    space: WalkSpace, alpha, beta, model: PolynomialModel, l1: int, l2: int, d: Optional[int] = None
) -> complex:
    """``prod_{l1 < n <= l2} mu_n^(Psi(tr(beta alpha^n)) / Q)``."""

    if l1 >= l2:
        raise ValueError(f"Empty block ({l1}, {l2}]")
    alpha = _param(space, alpha)
    beta = _param(space, beta)
    length = model.degree if d is None else d
    value = 1 + 0j
    for n in range(l1 + 1, l2 + 1):
        value *= law_fourier(model.law_at(n, length), _psi_phase(space, beta, _powers(space, alpha, n)))
    return value


def _fourier_grid(space: WalkSpace, alpha: WalkParam, model: PolynomialModel, d: int) -> np.ndarray:
    """``E e(sum_a gamma_a S_a / p_a)`` on the full frequency grid."""

    grids = np.meshgrid(*[np.arange(p) for p in space.axes], indexing="ij")
    out = np.ones(space.shape, dtype=complex)
    current = [1] * len(space.axes)
    flat_alpha = alpha.flat
    for n in range(d + 1):
        phase = np.zeros(space.shape)
        for g, a, p in zip(grids, current, space.axes):
            phase += (g * a % p) / p
        out *= law_fourier(model.law_at(n, d), phase % 1.0)
        current = [c * a % p for c, a, p in zip(current, flat_alpha, space.axes)]
    return out


def fourier_inversion(space: WalkSpace, alpha, model: PolynomialModel, d: int) -> np.ndarray:
    """nu on all of V from its Fourier coefficients (float probabilities)."""

    space.check_cap()
    F = _fourier_grid(space, _param(space, alpha), model, d)
    return np.real(np.fft.fftn(F)) / space.size


@dataclass(frozen=True)
class EquidistReport:
    n_params: int
    values: Tuple[float, ...]
    total: float
    expected: float
    deviation: float
    exact_deviation: Optional[str]
    method: str
    exponent_shape: float

    def to_json(self) -> Dict[str, object]:
        return {
            "n_params": self.n_params,
            "total": self.total,
            "expected": self.expected,
            "deviation": self.deviation,
            "exact_deviation": self.exact_deviation,
            "method": self.method,
            "exponent_shape": self.exponent_shape,
        }


def equidist_check(
    space: WalkSpace,
    param_set: Sequence,
    model: PolynomialModel,
    d: int,
    method: str = "auto",
    require_admissible: bool = True,
    kappa: float = 0.01,
) -> EquidistReport:
    """``|sum_{alpha in A} nu_alpha(0) - |A|/|V||``."""

    params = [_param(space, a) for a in param_set]
    if require_admissible:
        for alpha in params:
            if not alpha.generic or not alpha.admissible(kappa):
                raise PreconditionError(f"Parameter {alpha.coords} is not generic and admissible")
    if method == "auto":
        method = "exact" if space.size * (d + 1) <= EXACT_WORK else "fourier"
    if method not in ("exact", "fourier"):
        raise ValueError(f"Unknown method {method!r}")
    log_QD = space.log_QD
    shape = d / (log_QD * math.log(log_QD) ** 2)
    expected = Fraction(len(params), space.size)
    zero = (0,) * len(space.shape)
    if method == "exact":
        exact_values = []
        for alpha in params:
            dist = exact_distribution(space, alpha, model, d)
            exact_values.append(Fraction(int(dist.counts[zero]), dist.mass))
        total = sum(exact_values, Fraction(0))
        dev = abs(total - expected)
        values = tuple(float(v) for v in exact_values)
        return EquidistReport(len(params), values, float(total), float(expected), float(dev), str(dev), method, shape)
    values = tuple(float(np.real(np.sum(_fourier_grid(space, alpha, model, d)))) / space.size for alpha in params)
    total = math.fsum(values)
    return EquidistReport(len(params), values, total, float(expected), abs(total - float(expected)), None, method, shape)


def sample_walk(
    space: WalkSpace, alpha, model: PolynomialModel, d: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Monte Carlo histogram of the walk over V from n samples."""

    alpha = _param(space, alpha)
    steps = np.empty((n, d + 1), dtype=np.int64)
    for j in range(d + 1):
        steps[:, j] = sample_law(model.law_at(j, d), rng, n)
    index = np.zeros(n, dtype=np.int64)
    for a, p in zip(alpha.flat, space.axes):
        powers = np.array([pow(a, j, p) for j in range(d + 1)], dtype=np.int64)
        coord = (steps % p) @ powers % p
        index = index * p + coord
    return np.bincount(index, minlength=space.size).reshape(space.shape)


def single_step_bound(mu: CoefficientLaw, x: int, beta: int, p: int) -> Tuple[float, float]:
    """``|mu^(x beta / p)|`` and ``exp(-4 (1 - ||mu||_2^2) min_h ||h x beta / p||^2)``,
    h over the nonzero differences of the support."""

    t = (x * beta % p) / p
    value = abs(law_fourier(mu, t))
    diffs = {a - b for a in mu.support for b in mu.support if a != b}
    if not diffs:
        return value, 1.0
    nearest = min(abs(h * t - round(h * t)) for h in diffs)
    bound = math.exp(-4 * float(1 - collision_norm(mu)) * nearest ** 2)
    return value, bound


# ---------------------------------------------------------------------------
# Lifted sequences and annihilators


@dataclass(frozen=True)
class LiftedSequence:
    values: Tuple[int, ...]
    Q: int

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def centered_lift(r: int, Q: int) -> int:
    """Representative of r mod Q in (-Q/2, Q/2]."""

    r %= Q
    return r - Q if 2 * r > Q else r


def lifted_sequence(space: WalkSpace, alpha, beta, L: int) -> LiftedSequence:
    """Centered lifts of ``S_n = Psi(tr(beta alpha^n))`` for n = 0..L."""

    alpha = _param(space, alpha)
    beta = _param(space, beta)
    if 0 in beta.flat:
        raise PreconditionError(f"beta coordinates must be nonzero, got {beta.coords}")
    Q = space.Q
    values = []
    for n in range(L + 1):
        values.append(centered_lift(_psi(space, beta, _powers(space, alpha, n)), Q))
    return LiftedSequence(tuple(values), Q)


def konyagin_hypothesis(seq: LiftedSequence, L: int) -> bool:
    """``sum_{n<=L} S_n^2 <= Q^2 / (8 log 4L)``."""

    if L < 1 or L > len(seq) - 1:
        raise ValueError(f"L must lie in [1, {len(seq) - 1}], got {L}")
    total = sum(v * v for v in seq.values[: L + 1])
    if total == 0:
        return True
    with mpmath.workdps(50):
        return bool(8 * mpmath.log(4 * L) * total <= seq.Q ** 2)


def _values(seq) -> Tuple[int, ...]:
    return tuple(int(v) for v in (seq.values if isinstance(seq, LiftedSequence) else seq))


def lambda_membership(P: IntPoly, seq, e: int) -> bool:
    """True iff P's coefficients annihilate the sequence over every window of length e + 1."""

    x = _values(seq)
    N = len(x) - 1
    if not P.degree <= e <= N:
        raise ValueError(f"Need deg P <= e <= N, got deg {P.degree}, e={e}, N={N}")
    a = list(P.coeffs) + [0] * (e + 1 - len(P.coeffs))
    return all(sum(a[i] * x[j + i] for i in range(e + 1)) == 0 for j in range(N - e + 1))


@dataclass(frozen=True)
class AnnihilatorResult:
    poly: Optional[IntPoly]
    status: str
    degree_searched: int

    def to_json(self) -> Dict[str, object]:
        return {
            "poly": self.poly.to_json() if self.poly is not None else None,
            "status": self.status,
            "degree_searched": self.degree_searched,
        }


def _integer_vector(vec) -> IntPoly:
    den = 1
    for v in vec:
        den = den * int(v.q) // math.gcd(den, int(v.q))
    return IntPoly(tuple(int(v * den) for v in vec)).primitive()


def _multiplier_ranges(g: IntPoly, t: int, e: int, coeff_bound: int) -> Optional[List[range]]:
    """Coefficient ranges for h of degree t with height(h g) <= B.

    Interior coefficients obey Landau-Mignotte, |h_i| <= C(t, i) ||h g||_2 with
    ||h g||_2 <= B sqrt(e + 1). The end coefficients of h g are products of the
    end coefficients of h and g, so they are capped by B directly.
    """

    norm = coeff_bound * math.sqrt(e + 1)
    top = min(coeff_bound // abs(g.leading), int(norm))
    if top < 1:
        return None
    ranges = []
    for i in range(t):
        b = int(math.comb(t, i) * norm)
        if i == 0 and g.coeffs[0] != 0:
            b = min(b, coeff_bound // abs(g.coeffs[0]))
        ranges.append(range(-b, b + 1))
    # sign fixed by a positive leading coefficient
    ranges.append(range(1, top + 1))
    return ranges


def minimal_annihilator(seq, coeff_bound: int, deg_bound: int) -> AnnihilatorResult:
    """Content-free minimal-degree member of Lambda with coefficients in [-B, B].

    Degrees are tried in increasing order. At each degree the annihilators form
    the rational kernel of a Hankel matrix, computed exactly; every kernel
    member is a multiple of the gcd g of a kernel basis. When g itself is too
    tall, multiples h g of exactly that degree are searched for one that fits.
    """

    x = _values(seq)
    N = len(x) - 1
    if 2 * deg_bound > len(x):
        raise ValueError(f"Degree bound {deg_bound} exceeds half the window length {len(x)}")
    for e in range(1, deg_bound + 1):
        rows = N - e + 1
        if rows * (e + 1) > ANNIHILATOR_BUDGET:
            logger.info("Annihilator search stopped at degree %d: Hankel system over budget", e)
            return AnnihilatorResult(None, "budget-exceeded", e - 1)
        H = Matrix(rows, e + 1, lambda j, i: x[j + i])
        kernel = H.nullspace()
        if not kernel:
            continue
        candidates = [_integer_vector(v) for v in kernel]
        g = candidates[0]
        for other in candidates[1:]:
            g = poly_gcd(g, other)
        g = g.primitive()
        if g.degree < 1:
            logger.debug("Degree %d kernel of dimension %d has no common factor", e, len(kernel))
            continue
        if g.height <= coeff_bound and lambda_membership(g, x, e):
            return AnnihilatorResult(g, "found", e)
        t = e - g.degree
        ranges = _multiplier_ranges(g, t, e, coeff_bound) if t >= 1 else None
        if ranges is None:
            logger.debug("Degree %d generator %s exceeds the coefficient bound %d", e, g, coeff_bound)
            continue
        size = math.prod(len(r) for r in ranges)
        if size > MULTIPLIER_BUDGET:
            logger.info("Annihilator search stopped at degree %d: %d multipliers over budget", e, size)
            return AnnihilatorResult(None, "budget-exceeded", e - 1)
        for h in itertools.product(*ranges):
            member = IntPoly(h) * g
            if member.height <= coeff_bound and lambda_membership(member, x, e):
                return AnnihilatorResult(member.primitive(), "found", e)
        logger.debug("Degree %d: none of %d multiples of %s fits the bound %d", e, size, g, coeff_bound)
    return AnnihilatorResult(None, "not-found", deg_bound)


# ---------------------------------------------------------------------------
# Root-ratio primes, Vandermonde propagation


def _power_sums(P: IntPoly, count: int) -> List[Fraction]:
    """Newton power sums s_1..s_count of the roots of P."""

    n = P.degree
    lc = P.leading
    c = [Fraction(P.coeffs[n - i], lc) for i in range(n + 1)]
    s: List[Fraction] = [Fraction(n)]
    for k in range(1, count + 1):
        acc = sum((c[i] * s[k - i] for i in range(1, min(k - 1, n) + 1)), Fraction(0))
        if k <= n:
            acc += k * c[k]
        s.append(-acc)
    return s


def _ratio_is_root_of_unity(P: IntPoly, q: int) -> bool:
    """True iff two distinct roots of P have q-th powers that coincide."""

    n = P.degree
    if n < 2:
        return False
    s = _power_sums(P, q * n)
    t = [s[q * k] for k in range(n + 1)]
    d: List[Fraction] = [Fraction(1)]
    for k in range(1, n + 1):
        d.append(-(t[k] + sum((d[i] * t[k - i] for i in range(1, k)), Fraction(0))) / k)
    den = 1
    for v in d:
        den = den * v.denominator // math.gcd(den, v.denominator)
    Pq = IntPoly(tuple(int(v * den) for v in reversed(d)))
    return not is_squarefree(Pq)


def _ratio_screen(roots: np.ndarray, q: int) -> bool:
    for i, j in itertools.permutations(range(len(roots)), 2):
        if abs(roots[j]) < RATIO_TOL:
            continue
        r = roots[i] / roots[j]
        if abs(abs(r) - 1) < RATIO_TOL and abs(r ** q - 1) < RATIO_TOL * q:
            return True
    return False


def find_konyagin_prime(P: IntPoly, s: int) -> int:
    """Smallest prime q in (s, 2s] for which no ratio of distinct roots of P is a q-th root of unity."""

    if s < 1:
        raise ValueError(f"s must be positive, got {s}")
    roots = np.roots([float(c) for c in reversed(P.coeffs)]) if P.degree >= 1 else np.zeros(0)
    for q in primerange(s + 1, 2 * s + 1):
        q = int(q)
        exact = _ratio_is_root_of_unity(P, q)
        numeric = _ratio_screen(roots, q)
        if exact != numeric:
            logger.warning("Root-ratio screens disagree at q=%d (exact %s, numeric %s); using exact", q, exact, numeric)
        if not exact:
            return q
    raise PrimeNotFoundError(s)


def vandermonde_propagation(
    alphas: Sequence[int], betas: Sequence[int], P: IntPoly, p: int, horizon: Optional[int] = None
) -> bool:
    """From the recurrence on n < m, conclude P(alpha_j) = 0 mod p and the recurrence for all n."""

    m = len(alphas)
    if m == 0 or len(betas) != m:
        raise PreconditionError("Need matching, nonempty alpha and beta lists")
    alphas = [a % p for a in alphas]
    if len(set(alphas)) != m:
        raise PreconditionError(f"alphas must be pairwise distinct mod {p}")
    if any(b % p == 0 for b in betas):
        raise PreconditionError("betas must be nonzero mod p")
    horizon = 5 * m if horizon is None else horizon

    def u(n: int) -> int:
        return sum(b * pow(a, n, p) for a, b in zip(alphas, betas)) % p

    def recurrence(n: int) -> int:
        return sum(c * u(n + i) for i, c in enumerate(P.coeffs)) % p

    if any(recurrence(n) for n in range(m)):
        raise PreconditionError("Recurrence fails for some n < m")
    roots_ok = all(sum(c * pow(a, i, p) for i, c in enumerate(P.coeffs)) % p == 0 for a in alphas)
    return roots_ok and all(recurrence(n) == 0 for n in range(horizon + 1))


# ---------------------------------------------------------------------------
# Fourier bounds over long blocks, and alpha = 2


@dataclass(frozen=True)
class FourierBoundReport:
    L: int
    L_min: int
    bound: float
    vacuous: bool
    reasons: Tuple[str, ...]
    blocks: Tuple[Tuple[int, int, float], ...] = ()

    @property
    def violations(self) -> Tuple[Tuple[int, int, float], ...]:
        return tuple(b for b in self.blocks if b[2] > self.bound + BOUND_SLACK)

    def to_json(self) -> Dict[str, object]:
        return {
            "L": self.L,
            "L_min": self.L_min,
            "bound": self.bound,
            "vacuous": self.vacuous,
            "reasons": list(self.reasons),
            "blocks": [list(b) for b in self.blocks],
            "violations": len(self.violations),
        }


def block_fourier_bound_check(
    space: WalkSpace, alpha, beta, model: PolynomialModel, L: int, d: int
) -> FourierBoundReport:
    """``|nu^(l1, l2)(beta)| <= exp(-(1 - ||mu||^2) / (8 log 4L))`` for blocks of length L + 1."""

    alpha = _param(space, alpha)
    beta = _param(space, beta)
    if beta.is_zero():
        raise PreconditionError("beta = 0 is excluded")
    log_QD = space.log_QD
    L_min = math.ceil(200 * log_QD * math.log(log_QD))
    bound = math.exp(-float(1 - collision_norm(model.law_middle)) / (8 * math.log(4 * L)))
    reasons = []
    if L < L_min:
        reasons.append(f"L = {L} below 200 log Q^D log log Q^D = {L_min}")
    log_measure = 30 * log_QD / L * math.log(log_QD)
    if any(
        exceptional_residue(a, p, 3 * log_QD, log_measure)
        for block, p in zip(alpha.coords, space.primes)
        for a in block
    ):
        reasons.append("alpha has a coordinate of small Mahler measure")
    if L > d:
        reasons.append(f"no block of length {L + 1} inside [0, {d}]")
    if reasons:
        return FourierBoundReport(L, L_min, bound, True, tuple(reasons))
    blocks = []
    for l1 in range(-1, d - L, L + 1):
        l2 = l1 + L + 1
        blocks.append((l1, l2, abs(fourier_coeff(space, alpha, beta, model, l1, l2, d))))
    report = FourierBoundReport(L, L_min, bound, False, (), tuple(blocks))
    if report.violations:
        logger.warning("%d blocks exceed the Fourier bound", len(report.violations))
    return report


@dataclass(frozen=True)
class A2Report:
    Q: int
    d: int
    holds: bool
    worst: float
    failures: int
    block_length: int
    block_bound: float
    block_max: float

    @property
    def block_holds(self) -> bool:
        return self.block_max <= self.block_bound + BOUND_SLACK

    def to_json(self) -> Dict[str, object]:
        return {
            "Q": self.Q,
            "d": self.d,
            "holds": self.holds,
            "worst_relative_deviation": self.worst,
            "failures": self.failures,
            "block_length": self.block_length,
            "block_bound": self.block_bound,
            "block_max": self.block_max,
            "block_holds": self.block_holds,
        }


def a2_mixing(space: WalkSpace, model: PolynomialModel, d: int) -> A2Report:
    """Exact check of ``|nu_2(x) - 1/Q| <= Q^-10`` on Z/QZ, plus the block Fourier bound."""

    if any(m != 1 for m in space.multiplicities):
        raise PreconditionError("alpha = 2 mixing needs every multiplicity equal to 1")
    for n in range(d + 1):
        for a in model.law_at(n, d).support:
            if any(not 2 * abs(a) < p for p in space.primes):
                raise PreconditionError(f"Support point {a} outside (-p/2, p/2)")
    Q = space.Q
    dist = exact_distribution(space, WalkParam.scalar(space, 2), model, d)
    mass = dist.mass
    worst = Fraction(0)
    failures = 0
    q9 = Q ** 9
    for c in dist.counts.flat:
        gap = abs(int(c) * Q - mass)
        if q9 * gap > mass:
            failures += 1
        worst = max(worst, Fraction(gap, mass))

    q = int(math.floor(math.log2(Q)))
    mu = model.law_middle
    block_bound = math.exp(-float(1 - collision_norm(mu)) / 16)
    residues = np.arange(1, Q)
    block_max = 0.0
    idem = space.idempotents()
    for l in range(max(0, d - q - 1)):
        value = np.ones(len(residues))
        for n in range(l + 1, l + q + 1):
            # Psi(tr(beta 2^n)) over all beta of Z/QZ, beta read through the CRT
            phase = np.zeros(len(residues))
            for c, p in zip(idem, space.primes):
                phase = phase + c * ((residues % p) * pow(2, n, p) % p)
            value = value * np.abs(law_fourier(model.law_at(n, d), (phase % Q) / Q))
        block_max = max(block_max, float(value.max()))
    return A2Report(Q, d, failures == 0, float(worst), failures, q, block_bound, block_max)
