"""Polynomial arithmetic and factorization over prime fields."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


# Miller-Rabin with the first twelve primes as witnesses is exact below
# 3.3e24, which covers every 64-bit modulus.
MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
MR_EXACT_BOUND = 3317044064679887385961981

# Lanes of the vectorized Frobenius keep residues below 2**32 so the product
# of two residues fits in an unsigned 64-bit word.
BATCH_PRIME_LIMIT = 1 << 32
# Lanes times degree held in memory at once by count_roots_batch
LANE_BUDGET = 1 << 21

Poly = List[int]
SeedLike = Union[None, int, np.random.Generator]


class ZeroPolynomialError(ValueError):
    """Raised when an operation needs a nonzero polynomial."""


def is_probable_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for every ``n`` below ``MR_EXACT_BOUND``."""

    if n < 2:
        return False
    for q in MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""

    q = max(n + 1, 2)
    while not is_probable_prime(q):
        q += 1
    return q


@dataclass(frozen=True)
class PrimeModulus:
    p: int
    certified: bool = field(init=False, default=False)

    def __post_init__(self) -> None:
        if self.p < 2 or not is_probable_prime(self.p):
            raise ValueError(f"Modulus {self.p} is not prime")
        object.__setattr__(self, "certified", self.p < MR_EXACT_BOUND)


def _modulus(p: Union[int, PrimeModulus]) -> PrimeModulus:
    return p if isinstance(p, PrimeModulus) else PrimeModulus(int(p))


# ---------------------------------------------------------------------------
# Dense list arithmetic, least-degree-first, entries reduced mod p


def _trim(a: Poly) -> Poly:
    while a and a[-1] == 0:
        a.pop()
    return a


def _add(a: Poly, b: Poly, p: int) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % p
    return _trim(out)


def _sub(a: Poly, b: Poly, p: int) -> Poly:
    out = list(a) + [0] * max(0, len(b) - len(a))
    for i, c in enumerate(b):
        out[i] = (out[i] - c) % p
    return _trim(out)


def _scale(a: Poly, c: int, p: int) -> Poly:
    return _trim([x * c % p for x in a])


def _mul(a: Poly, b: Poly, p: int) -> Poly:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _trim([c % p for c in out])


def _divmod(a: Poly, b: Poly, p: int) -> Tuple[Poly, Poly]:
    if not b:
        raise ZeroPolynomialError("Division by the zero polynomial")
    r = list(a)
    db = len(b) - 1
    inv = pow(b[-1], p - 2, p)
    if len(r) - 1 < db:
        return [], r
    q = [0] * (len(r) - db)
    for k in range(len(r) - 1, db - 1, -1):
        c = r[k] * inv % p
        if c == 0:
            continue
        q[k - db] = c
        for i in range(db + 1):
            r[k - db + i] = (r[k - db + i] - c * b[i]) % p
    return _trim(q), _trim(r[:db])


def _mod(a: Poly, b: Poly, p: int) -> Poly:
    return _divmod(a, b, p)[1]


def _monic(a: Poly, p: int) -> Poly:
    if not a:
        return []
    return _scale(a, pow(a[-1], p - 2, p), p)


def _gcd(a: Poly, b: Poly, p: int) -> Poly:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _mod(a, b, p)
    return _monic(a, p)


def _deriv(a: Poly, p: int) -> Poly:
    return _trim([i * a[i] % p for i in range(1, len(a))])


def _mulmod(a: Poly, b: Poly, f: Poly, p: int) -> Poly:
    return _mod(_mul(a, b, p), f, p)


def _powmod(base: Poly, e: int, f: Poly, p: int) -> Poly:
    result: Poly = [1]
    base = _mod(base, f, p)
    for bit in bin(e)[2:]:
        result = _mulmod(result, result, f, p)
        if bit == "1":
            result = _mulmod(result, base, f, p)
    return _mod(result, f, p)


def _xpow_mod(e: int, f: Poly, p: int) -> Poly:
    """``x**e mod f``; multiplication by x is a shift followed by one reduction step."""

    d = len(f) - 1
    if d == 0:
        return []
    inv = pow(f[-1], p - 2, p)
    low = [c * inv % p for c in f[:-1]]
    result: Poly = [1]
    for bit in bin(e)[2:]:
        result = _mulmod(result, result, f, p)
        if bit == "1":
            shifted = [0] + result
            if len(shifted) > d:
                top = shifted.pop()
                shifted = [(c - top * low[i]) % p for i, c in enumerate(shifted)]
            result = _trim(shifted)
    return result


# ---------------------------------------------------------------------------
# Public polynomial type


@dataclass(frozen=True)
class FFPoly:
    """Polynomial over F_p with residues least-degree-first."""

    coeffs: Tuple[int, ...]
    modulus: PrimeModulus

    def __post_init__(self) -> None:
        p = self.modulus.p
        object.__setattr__(self, "coeffs", tuple(_trim([int(c) % p for c in self.coeffs])))

    @classmethod
    def from_list(cls, coeffs: Sequence[int], p: Union[int, PrimeModulus]) -> "FFPoly":
        return cls(tuple(coeffs), _modulus(p))

    @property
    def p(self) -> int:
        return self.modulus.p

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def monic(self) -> "FFPoly":
        return FFPoly(tuple(_monic(list(self.coeffs), self.p)), self.modulus)

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.p
        return acc

    def __mul__(self, other: "FFPoly") -> "FFPoly":
        return FFPoly(tuple(_mul(list(self.coeffs), list(other.coeffs), self.p)), self.modulus)

    def __pow__(self, k: int) -> "FFPoly":
        out = FFPoly((1,), self.modulus)
        for _ in range(k):
            out = out * self
        return out


def reduce_mod(P, p: Union[int, PrimeModulus]) -> FFPoly:
    """Reduce an integer polynomial (``IntPoly`` or coefficient sequence) mod p."""

    coeffs = getattr(P, "coeffs", P)
    return FFPoly(tuple(coeffs), _modulus(p))


def _require_nonzero(f: FFPoly) -> None:
    if f.is_zero():
        raise ZeroPolynomialError(f"Zero polynomial over F_{f.p}")


def count_distinct_roots(f: FFPoly) -> int:
    """Number of distinct roots of ``f`` in F_p, as ``deg gcd(x^p - x, f)``."""

    _require_nonzero(f)
    if f.degree < 1:
        return 0
    p = f.p
    a = list(f.coeffs)
    g = _sub(_xpow_mod(p, a, p), [0, 1], p)
    return len(_gcd(a, g, p)) - 1


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _random_poly(n: int, p: int, rng: np.random.Generator) -> Poly:
    high = min(p, 1 << 62)
    return _trim([int(c) for c in rng.integers(0, high, size=n)])


def _squarefree(f: Poly, p: int) -> List[Tuple[Poly, int]]:
    """Squarefree decomposition of a monic polynomial over F_p."""

    out: List[Tuple[Poly, int]] = []
    if len(f) <= 1:
        return out
    df = _deriv(f, p)
    if not df:
        root = [f[i] for i in range(0, len(f), p)]
        return [(g, m * p) for g, m in _squarefree(root, p)]
    c = _gcd(f, df, p)
    w = _divmod(f, c, p)[0]
    i = 1
    while len(w) > 1:
        y = _gcd(w, c, p)
        z = _divmod(w, y, p)[0]
        if len(z) > 1:
            out.append((_monic(z, p), i))
        i += 1
        w = y
        c = _divmod(c, y, p)[0]
    if len(c) > 1:
        root = [c[i] for i in range(0, len(c), p)]
        out.extend((g, m * p) for g, m in _squarefree(_monic(root, p), p))
    return out


def _distinct_degree(f: Poly, p: int) -> List[Tuple[Poly, int]]:
    out: List[Tuple[Poly, int]] = []
    rest = list(f)
    h: Poly = [0, 1]
    i = 1
    while len(rest) - 1 >= 2 * i:
        h = _powmod(h, p, rest, p)
        g = _gcd(rest, _sub(h, [0, 1], p), p)
        if len(g) > 1:
            out.append((g, i))
            rest = _divmod(rest, g, p)[0]
            h = _mod(h, rest, p)
        i += 1
    if len(rest) > 1:
        out.append((_monic(rest, p), len(rest) - 1))
    return out


def _equal_degree(f: Poly, d: int, p: int, rng: np.random.Generator) -> List[Poly]:
    """Cantor-Zassenhaus splitting of a product of degree-``d`` irreducibles."""

    n = len(f) - 1
    if n <= d:
        return [f]
    while True:
        a = _random_poly(n, p, rng)
        if len(a) < 2:
            continue
        g = _gcd(f, a, p)
        if 1 < len(g) < len(f):
            break
        if p == 2:
            t = list(a)
            acc = list(a)
            for _ in range(d - 1):
                t = _mulmod(t, t, f, 2)
                acc = _add(acc, t, 2)
            g = _gcd(f, acc, 2)
        else:
            b = _powmod(a, (p ** d - 1) // 2, f, p)
            g = _gcd(f, _sub(b, [1], p), p)
        if 1 < len(g) < len(f):
            break
    h = _divmod(f, g, p)[0]
    return _equal_degree(g, d, p, rng) + _equal_degree(_monic(h, p), d, p, rng)


def _factor_list(f: Poly, p: int, rng: np.random.Generator) -> List[Tuple[Poly, int]]:
    factors: List[Tuple[Poly, int]] = []
    for part, mult in _squarefree(_monic(f, p), p):
        for block, d in _distinct_degree(part, p):
            for g in _equal_degree(block, d, p, rng):
                factors.append((g, mult))
    factors.sort(key=lambda item: (len(item[0]), item[0], item[1]))
    return factors


def factorize(f: FFPoly, seed: SeedLike = 0) -> List[Tuple[FFPoly, int]]:
    """Monic irreducible factors of ``f`` with multiplicities.

    The product of the factors, raised to their multiplicities, equals ``f``
    divided by its leading coefficient.
    """

    _require_nonzero(f)
    rng = _rng(seed)
    return [
        (FFPoly(tuple(g), f.modulus), m)
        for g, m in _factor_list(list(f.coeffs), f.p, rng)
    ]


def degree_sequence(f: FFPoly, seed: SeedLike = 0) -> Tuple[int, ...]:
    """Sorted multiset of irreducible-factor degrees, repeated by multiplicity."""

    _require_nonzero(f)
    out: List[int] = []
    for g, m in _factor_list(list(f.coeffs), f.p, _rng(seed)):
        out.extend([len(g) - 1] * m)
    return tuple(sorted(out))


def roots_mod_p(f: FFPoly, seed: SeedLike = 0) -> Tuple[int, ...]:
    """Distinct roots of ``f`` in F_p, ascending."""

    _require_nonzero(f)
    if f.degree < 1:
        return ()
    p = f.p
    if p <= 64:
        return tuple(r for r in range(p) if f(r) == 0)
    a = list(f.coeffs)
    g = _gcd(a, _sub(_xpow_mod(p, a, p), [0, 1], p), p)
    if len(g) < 2:
        return ()
    roots = [(-h[0]) % p for h in _equal_degree(g, 1, p, _rng(seed))]
    return tuple(sorted(roots))


# ---------------------------------------------------------------------------
# Vectorized root counts of one integer polynomial over many primes


def _residues(c: int, primes: np.ndarray) -> np.ndarray:
    if abs(c) < (1 << 62):
        return (np.int64(c) % primes.astype(np.int64)).astype(np.uint64)
    return int_mod_batch(c, primes)


def int_mod_batch(n: int, primes) -> np.ndarray:
    """``n mod p`` for every prime below 2**32, Horner over 30-bit limbs."""

    primes = np.asarray(primes, dtype=np.uint64)
    sign = -1 if n < 0 else 1
    n = abs(n)
    limbs = []
    while n:
        limbs.append(n & ((1 << 30) - 1))
        n >>= 30
    acc = np.zeros(len(primes), dtype=np.uint64)
    shift = np.uint64(1 << 30) % primes
    for limb in reversed(limbs):
        acc = (acc * shift % primes + np.uint64(limb) % primes) % primes
    if sign < 0:
        acc = (primes - acc) % primes
    return acc


def divides_mask(n: int, primes) -> np.ndarray:
    """Boolean mask of the primes dividing ``n`` (all of them when n == 0)."""

    primes = np.asarray(primes)
    if n == 0:
        return np.ones(len(primes), dtype=bool)
    if abs(n) < (1 << 62):
        return np.int64(n) % primes.astype(np.int64) == 0
    return int_mod_batch(n, primes) == 0


def _powmod_lanes(base: np.ndarray, exps: np.ndarray, mods: np.ndarray) -> np.ndarray:
    result = np.ones_like(base)
    b = base % mods
    e = exps.copy()
    while np.any(e):
        odd = (e & np.uint64(1)).astype(bool)
        result = np.where(odd, result * b % mods, result)
        b = b * b % mods
        e >>= np.uint64(1)
    return result


def _mulmod_lanes(a: np.ndarray, b: np.ndarray, low: np.ndarray, P: np.ndarray) -> np.ndarray:
    n, d = a.shape
    acc = np.zeros((n, 2 * d - 1), dtype=np.uint64)
    for i in range(d):
        acc[:, i:i + d] = (acc[:, i:i + d] + a[:, i:i + 1] * b % P) % P
    for k in range(2 * d - 2, d - 1, -1):
        top = acc[:, k:k + 1]
        acc[:, k - d:k] = (acc[:, k - d:k] + (P - top * low % P)) % P
    return acc[:, :d]


def _mulx_lanes(a: np.ndarray, low: np.ndarray, P: np.ndarray) -> np.ndarray:
    d = a.shape[1]
    top = a[:, d - 1:d]
    shifted = np.zeros_like(a)
    shifted[:, 1:] = a[:, :d - 1]
    return (shifted + (P - top * low % P)) % P


def count_roots_batch(coeffs: Sequence[int], primes) -> np.ndarray:
    """Distinct-root counts of one integer polynomial modulo each prime.

    Every prime must lie below ``BATCH_PRIME_LIMIT`` and must not divide the
    leading coefficient.
    """

    primes = np.asarray(primes, dtype=np.uint64)
    coeffs = [int(c) for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    n = len(primes)
    d = len(coeffs) - 1
    if d < 0:
        raise ZeroPolynomialError("Zero polynomial has no root count")
    if n == 0 or d == 0:
        return np.zeros(n, dtype=np.int64)
    if int(primes.max()) >= BATCH_PRIME_LIMIT:
        raise ValueError("Batch root counting needs primes below 2**32")

    if n * d > LANE_BUDGET:
        step = max(1, LANE_BUDGET // d)
        return np.concatenate([count_roots_batch(coeffs, primes[i:i + step]) for i in range(0, n, step)])

    P = primes[:, None]
    lead = _residues(coeffs[-1], primes)
    if np.any(lead == 0):
        raise ValueError("A prime in the batch divides the leading coefficient")
    inv = _powmod_lanes(lead, primes - np.uint64(2), primes)[:, None]
    low = np.stack([_residues(c, primes) for c in coeffs[:-1]], axis=1) * inv % P

    result = np.zeros((n, d), dtype=np.uint64)
    result[:, 0] = 1
    for bit in range(int(primes.max()).bit_length() - 1, -1, -1):
        result = _mulmod_lanes(result, result, low, P)
        mask = ((primes >> np.uint64(bit)) & np.uint64(1)).astype(bool)
        if np.any(mask):
            result = np.where(mask[:, None], _mulx_lanes(result, low, P), result)

    x_mod_f = np.zeros((n, d), dtype=np.uint64)
    if d >= 2:
        x_mod_f[:, 1] = 1
    else:
        x_mod_f[:, 0] = (P[:, 0] - low[:, 0]) % primes
    g = (result + P - x_mod_f) % P

    counts = np.full(n, d, dtype=np.int64)
    nonzero = np.flatnonzero(np.any(g != 0, axis=1))
    for i in nonzero:
        p = int(primes[i])
        f = [int(c) for c in low[i]] + [1]
        counts[i] = len(_gcd(f, _trim([int(c) for c in g[i]]), p)) - 1
    return counts


def inverse_mod(a: int, p: int) -> Optional[int]:
    a %= p
    if a == 0:
        return None
    return pow(a, p - 2, p)


def is_squarefree_mod(f: FFPoly) -> bool:
    """``gcd(f, f') == 1`` over F_p."""

    _require_nonzero(f)
    a = list(f.coeffs)
    return len(_gcd(a, _deriv(a, f.p), f.p)) == 1
