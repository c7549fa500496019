"""Integer polynomials: Mahler measure, resultants, cyclotomic structure.

Coefficients are arbitrary-precision Python integers stored least-degree-first.
Everything that decides divisibility of primes (resultants, discriminants,
cyclotomic trial division, root extraction) is exact; only the Mahler measure
is computed in floating point.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from sympy import divisors, integer_nthroot, primefactors, totient

from randpoly.ffpoly import (
    degree_sequence,
    is_probable_prime,
    is_squarefree_mod,
    next_prime,
    reduce_mod,
)

logger = logging.getLogger(__name__)


# Aberth iteration defaults; tolerances are backward errors of the roots.
MAHLER_TOL = 1e-10
ABERTH_MAX_ITER = 1000

# Heuristic constant of the Dobrowolski-type lower bound; a configuration knob.
DOBROWOLSKI_C = 0.25

# Rational-root search gives up on constant/leading terms above this size.
RATIONAL_ROOT_LIMIT = 10 ** 12


class ConvergenceError(ValueError):
    """Aberth iteration did not reach the requested residual."""

    def __init__(self, message: str, iterations: int, step: float, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.step = step
        self.residual = residual


class NotSquarefreeError(ValueError):
    """Input polynomial has a repeated factor (available as ``factor``)."""

    def __init__(self, factor: "IntPoly"):
        super().__init__(f"Polynomial is not squarefree; repeated factor {factor}")
        self.factor = factor


@dataclass(frozen=True)
class IntPoly:
    coeffs: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        c = [int(x) for x in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def monomial(cls, n: int, c: int = 1) -> "IntPoly":
        return cls((0,) * n + (c,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    @property
    def content(self) -> int:
        g = 0
        for c in self.coeffs:
            g = math.gcd(g, c)
        return g

    @property
    def height(self) -> int:
        return max((abs(c) for c in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def primitive(self) -> "IntPoly":
        """Divide out the content, normalising the leading coefficient to be positive."""

        if self.is_zero():
            return self
        g = self.content
        if self.leading < 0:
            g = -g
        return IntPoly(tuple(c // g for c in self.coeffs))

    def l2_norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.coeffs))

    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __neg__(self) -> "IntPoly":
        return IntPoly(tuple(-c for c in self.coeffs))

    def __add__(self, other: "IntPoly") -> "IntPoly":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return IntPoly(tuple(
            (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
        ))

    def __sub__(self, other: "IntPoly") -> "IntPoly":
        return self + (-other)

    def __mul__(self, other: Union["IntPoly", int]) -> "IntPoly":
        if isinstance(other, int):
            return IntPoly(tuple(c * other for c in self.coeffs))
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return IntPoly(())
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return IntPoly(tuple(out))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "IntPoly":
        result = IntPoly((1,))
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derivative(self) -> "IntPoly":
        return IntPoly(tuple(i * self.coeffs[i] for i in range(1, len(self.coeffs))))

    def compose_power(self, q: int) -> "IntPoly":
        """``P(x**q)``."""

        out = [0] * (q * self.degree + 1) if self.coeffs else []
        for i, c in enumerate(self.coeffs):
            out[i * q] = c
        return IntPoly(tuple(out))

    def exact_quotient(self, other: "IntPoly") -> Optional["IntPoly"]:
        """``self / other`` when the division is exact over Z, else ``None``."""

        if other.is_zero():
            raise ValueError("Division by the zero polynomial")
        r = list(self.coeffs)
        db = other.degree
        lb = other.leading
        if len(r) - 1 < db:
            return IntPoly(()) if not r else None
        q = [0] * (len(r) - db)
        for k in range(len(r) - 1, db - 1, -1):
            if r[k] == 0:
                continue
            c, rem = divmod(r[k], lb)
            if rem:
                return None
            q[k - db] = c
            for i in range(db + 1):
                r[k - db + i] -= c * other.coeffs[i]
        if any(r[:db]):
            return None
        return IntPoly(tuple(q))

    def divides(self, other: "IntPoly") -> bool:
        return other.exact_quotient(self) is not None

    def to_json(self) -> List[str]:
        return [str(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data: Sequence[Union[str, int]]) -> "IntPoly":
        try:
            return cls(tuple(int(str(c).replace("−", "-")) for c in data))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"Malformed polynomial coefficients: {data!r}") from exc

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if mono and abs(c) == 1:
                body = mono
            else:
                body = f"{abs(c)}{'*' if mono else ''}{mono}"
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        first_sign, first = terms[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in terms[1:]:
            text += f" {sign} {body}"
        return text


X_POLY = IntPoly((0, 1))
ONE = IntPoly((1,))


def parse_factors(text: str) -> List[IntPoly]:
    """Parse ``[a0,a1,...]`` or a product ``[..]*[..]`` into its factors."""

    cleaned = text.replace("−", "-").strip()
    if not cleaned:
        raise ValueError("Empty polynomial literal")
    factors = []
    for part in cleaned.split("*"):
        try:
            data = json.loads(part.strip())
        except json.JSONDecodeError as exc:
            raise ValueError(f"Malformed polynomial literal: {part.strip()!r}") from exc
        if not isinstance(data, list):
            raise ValueError(f"Polynomial literal must be a JSON array: {part.strip()!r}")
        poly = IntPoly.from_json(data)
        if poly.is_zero():
            raise ValueError("Zero polynomial literal")
        factors.append(poly)
    return factors


def parse_poly(text: str) -> IntPoly:
    out = ONE
    for f in parse_factors(text):
        out = out * f
    return out


# ---------------------------------------------------------------------------
# gcd, resultant, discriminant


def pseudo_remainder(a: IntPoly, b: IntPoly) -> IntPoly:
    """``lc(b)**(deg a - deg b + 1) * a mod b`` computed in Z[x]."""

    if b.is_zero():
        raise ValueError("Pseudo-division by the zero polynomial")
    r = list(a.coeffs)
    db = b.degree
    lb = b.leading
    e = len(r) - 1 - db + 1
    while len(r) - 1 >= db and r:
        c = r[-1]
        shift = len(r) - 1 - db
        r = [x * lb for x in r]
        for i in range(db + 1):
            r[shift + i] -= c * b.coeffs[i]
        while r and r[-1] == 0:
            r.pop()
        e -= 1
    if e > 0:
        r = [x * lb ** e for x in r]
    return IntPoly(tuple(r))


def _div_int(a: IntPoly, n: int) -> IntPoly:
    return IntPoly(tuple(c // n for c in a.coeffs))


def poly_gcd(a: IntPoly, b: IntPoly) -> IntPoly:
    """gcd in Z[x] via the primitive remainder sequence; positive leading coefficient."""

    if a.is_zero():
        return b.primitive() * b.content if not b.is_zero() else b
    if b.is_zero():
        return a.primitive() * a.content
    c = math.gcd(a.content, b.content)
    a, b = a.primitive(), b.primitive()
    if a.degree < b.degree:
        a, b = b, a
    while not b.is_zero():
        if b.degree == 0:
            return IntPoly((c,))
        r = pseudo_remainder(a, b)
        a, b = b, (r.primitive() if not r.is_zero() else r)
    return a.primitive() * c


def resultant(a: IntPoly, b: IntPoly) -> int:
    """Exact resultant by the subresultant algorithm."""

    if a.is_zero() or b.is_zero():
        raise ValueError("Resultant needs two nonzero polynomials")
    da, db = a.degree, b.degree
    if db == 0:
        return b.coeffs[0] ** da
    if da == 0:
        return a.coeffs[0] ** db
    ca, cb = a.content, b.content
    A, B = _div_int(a, ca), _div_int(b, cb)
    t = ca ** db * cb ** da
    s = 1
    if da < db:
        A, B = B, A
        if da % 2 == 1 and db % 2 == 1:
            s = -1
    g = h = 1
    while True:
        dA, dB = A.degree, B.degree
        delta = dA - dB
        if dA % 2 == 1 and dB % 2 == 1:
            s = -s
        R = pseudo_remainder(A, B)
        A = B
        if R.is_zero():
            return 0
        B = _div_int(R, g * h ** delta)
        g = A.leading
        if delta >= 1:
            h = g ** delta // h ** (delta - 1)
        if B.degree == 0:
            break
    dA = A.degree
    h = B.leading ** dA // h ** (dA - 1)
    return s * t * h


def discriminant(P: IntPoly) -> int:
    n = P.degree
    if n < 1:
        raise ValueError("Discriminant needs degree at least 1")
    if n == 1:
        return 1
    res = resultant(P, P.derivative())
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return sign * res // P.leading


def is_squarefree(P: IntPoly, screens: int = 3) -> bool:
    """Squarefree over Q; a squarefree reduction modulo a good prime decides quickly."""

    if P.degree < 2:
        return not P.is_zero()
    p = max(P.degree, 100)
    tried = 0
    while tried < screens:
        p = next_prime(p)
        if P.leading % p == 0:
            continue
        tried += 1
        if is_squarefree_mod(reduce_mod(P, p)):
            return True
    return poly_gcd(P, P.derivative()).degree == 0


def squarefree_decomposition(P: IntPoly) -> Tuple[int, List[Tuple[IntPoly, int]]]:
    """Yun's algorithm over Z: ``P = unit_content * prod(f_i ** i)``."""

    if P.is_zero():
        raise ValueError("Zero polynomial has no squarefree decomposition")
    c = P.content if P.leading > 0 else -P.content
    f = _div_int(P, c)
    if f.degree < 1:
        return c, []
    if is_squarefree(f):
        return c, [(f, 1)]
    a0 = poly_gcd(f, f.derivative())
    b = f.exact_quotient(a0)
    cc = f.derivative().exact_quotient(a0)
    d = cc - b.derivative()
    out: List[Tuple[IntPoly, int]] = []
    i = 1
    while b.degree > 0:
        a = poly_gcd(b, d)
        b = b.exact_quotient(a)
        cc = d.exact_quotient(a)
        d = cc - b.derivative()
        if a.degree > 0:
            out.append((a, i))
        i += 1
    return c, out


def discriminant_bound_check(P: IntPoly, R: Optional[IntPoly] = None) -> Dict[str, object]:
    """Compare |disc P| (and |Res(P, R)|) with the height and Mahler-measure bounds."""

    d = P.degree
    H = P.height
    disc = abs(discriminant(P))
    M = mahler_measure(P)
    log_disc = math.log(disc) if disc else float("-inf")
    out: Dict[str, object] = {
        "discriminant": disc,
        "height_bound_log": 2 * d * math.log(H * d) if H * d > 0 else float("-inf"),
        "mahler_bound_log": d * math.log(d) + (2 * d - 2) * math.log(M),
    }
    out["height_bound_holds"] = log_disc <= out["height_bound_log"] + 1e-9
    out["mahler_bound_holds"] = log_disc <= out["mahler_bound_log"] + math.log1p(1e-6)
    if R is not None:
        res = abs(resultant(P, R))
        dd = max(d, R.degree)
        out["resultant"] = res
        out["resultant_bound_log"] = 2 * dd * math.log(4 * H * dd)
        out["resultant_bound_holds"] = (
            (math.log(res) if res else float("-inf")) <= out["resultant_bound_log"] + 1e-9
        )
    return out


# ---------------------------------------------------------------------------
# Cyclotomic structure


def euler_phi(n: int) -> int:
    return int(totient(n))


@lru_cache(maxsize=None)
def _phi_table(limit: int) -> np.ndarray:
    phi = np.arange(limit + 1, dtype=np.int64)
    for q in range(2, limit + 1):
        if phi[q] == q:
            phi[q::q] -= phi[q::q] // q
    return phi


@lru_cache(maxsize=None)
def cyclotomic_indices(max_degree: int) -> Tuple[int, ...]:
    """All n with phi(n) <= max_degree, ascending (phi(n) >= sqrt(n/2) bounds the search)."""

    if max_degree < 1:
        return ()
    limit = 2 * max_degree * max_degree + 6
    phi = _phi_table(limit)
    idx = np.flatnonzero(phi <= max_degree)
    return tuple(int(n) for n in idx if n >= 1)


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> IntPoly:
    """Phi_n through the division identity Phi_{qm}(x) = Phi_m(x^q) / Phi_m(x)."""

    if n < 1:
        raise ValueError(f"Cyclotomic index must be positive, got {n}")
    if n == 1:
        return IntPoly((-1, 1))
    q = primefactors(n)[0]
    m = n // q
    lifted = cyclotomic_poly(m).compose_power(q)
    if m % q == 0:
        return lifted
    return lifted.exact_quotient(cyclotomic_poly(m))


@lru_cache(maxsize=None)
def _root_of_unity_mod(n: int) -> Tuple[int, int]:
    """A prime l = 1 mod n (l > 10**6) and a primitive n-th root of unity mod l."""

    k = max(1, 10 ** 6 // n)
    while not is_probable_prime(k * n + 1):
        k += 1
    ell = k * n + 1
    factors = primefactors(n)
    a = 2
    while True:
        w = pow(a, (ell - 1) // n, ell)
        if all(pow(w, n // q, ell) != 1 for q in factors):
            return ell, w
        a += 1


def _cyclotomic_factors(P: IntPoly) -> Tuple[int, List[Tuple[int, int]], IntPoly]:
    """Split ``P`` into ``x**e * prod(Phi_n ** m_n) * rest``."""

    coeffs = list(P.coeffs)
    e = 0
    while e < len(coeffs) and coeffs[e] == 0:
        e += 1
    rest = IntPoly(tuple(coeffs[e:]))
    found: List[Tuple[int, int]] = []
    for n in cyclotomic_indices(rest.degree):
        if euler_phi(n) > rest.degree:
            continue
        if n > 1:
            ell, w = _root_of_unity_mod(n)
            acc = 0
            for c in reversed(rest.coeffs):
                acc = (acc * w + c) % ell
            if acc:
                continue
        phi = cyclotomic_poly(n)
        mult = 0
        while True:
            q = rest.exact_quotient(phi)
            if q is None:
                break
            rest = q
            mult += 1
        if mult:
            found.append((n, mult))
    return e, found, rest


def cyclotomic_part(P: IntPoly) -> Tuple[IntPoly, IntPoly]:
    """``(Phi, Tilde)`` with Phi the maximal x-power-times-cyclotomic divisor."""

    if P.is_zero():
        raise ValueError("Cyclotomic part of the zero polynomial")
    e, found, rest = _cyclotomic_factors(P)
    phi = IntPoly.monomial(e)
    for n, mult in found:
        phi = phi * cyclotomic_poly(n) ** mult
    return phi, rest


def is_cyclotomic_product(P: IntPoly) -> bool:
    _, tilde = cyclotomic_part(P)
    return tilde.degree == 0 and abs(tilde.coeffs[0]) == 1


# ---------------------------------------------------------------------------
# Mahler measure


@dataclass(frozen=True)
class AdmissibilityParams:
    """``(X, kappa)`` of the admissibility definition.

    ``relaxed`` lifts the working range ``kappa < 1/100`` and ``X > 10`` for
    table experiments outside it; positivity is always enforced.
    """

    X: float
    kappa: float
    relaxed: bool = False

    def __post_init__(self) -> None:
        if self.X <= 0 or self.kappa <= 0:
            raise ValueError(f"X and kappa must be positive, got X={self.X}, kappa={self.kappa}")
        if not self.relaxed and (self.kappa >= 0.01 or self.X <= 10):
            raise ValueError(
                f"Admissibility needs kappa < 1/100 and X > 10 (got X={self.X}, "
                f"kappa={self.kappa}); pass relaxed=True to go outside that range"
            )

    @property
    def degree_bound(self) -> float:
        return 10 * self.X

    @property
    def measure_bound(self) -> float:
        return math.exp(self.kappa)


def _horner(c_high: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    p = np.full(x.shape, c_high[0], dtype=complex)
    dp = np.zeros(x.shape, dtype=complex)
    for c in c_high[1:]:
        dp = dp * x + p
        p = p * x + c
    return p, dp


def _abs_horner(c_high: np.ndarray, r: np.ndarray) -> np.ndarray:
    acc = np.full(r.shape, abs(c_high[0]), dtype=float)
    for c in c_high[1:]:
        acc = acc * r + abs(c)
    return acc


def _newton_ratio(c_high: np.ndarray, z: np.ndarray) -> np.ndarray:
    n = len(c_high) - 1
    ratio = np.empty_like(z)
    inside = np.abs(z) <= 1.0
    if inside.any():
        p, dp = _horner(c_high, z[inside])
        ratio[inside] = p / dp
    outside = ~inside
    if outside.any():
        w = 1.0 / z[outside]
        r, dr = _horner(c_high[::-1], w)
        ratio[outside] = z[outside] / (n - w * dr / r)
    return ratio


def _backward_error(c_high: np.ndarray, z: np.ndarray) -> np.ndarray:
    err = np.empty(z.shape, dtype=float)
    inside = np.abs(z) <= 1.0
    if inside.any():
        p, _ = _horner(c_high, z[inside])
        err[inside] = np.abs(p) / _abs_horner(c_high, np.abs(z[inside]))
    outside = ~inside
    if outside.any():
        w = 1.0 / z[outside]
        r, _ = _horner(c_high[::-1], w)
        err[outside] = np.abs(r) / _abs_horner(c_high[::-1], np.abs(w))
    return err


def _repulsion(z: np.ndarray) -> np.ndarray:
    n = len(z)
    out = np.zeros(n, dtype=complex)
    chunk = max(1, 4_000_000 // max(n, 1))
    for start in range(0, n, chunk):
        block = z[start:start + chunk]
        diff = block[:, None] - z[None, :]
        rows = np.arange(len(block))
        diff[rows, rows + start] = 1.0
        inv = 1.0 / diff
        inv[rows, rows + start] = 0.0
        out[start:start + chunk] = inv.sum(axis=1)
    return out


def aberth_roots(P: IntPoly, tol: float = MAHLER_TOL, max_iter: int = ABERTH_MAX_ITER) -> np.ndarray:
    """Complex roots by Aberth-Ehrlich iteration with one Newton polish step."""

    n = P.degree
    if n < 1:
        return np.zeros(0, dtype=complex)
    scale = max(abs(c) for c in P.coeffs)
    c_high = np.array([c / scale for c in reversed(P.coeffs)], dtype=complex)
    if n == 1:
        return np.array([-c_high[1] / c_high[0]], dtype=complex)
    radius = 1.0 + float(np.max(np.abs(c_high[1:] / c_high[0])))
    k = np.arange(n)
    z = radius * np.exp(1j * (2 * np.pi * k / n + 0.4 / n))
    step = residual = float("inf")
    with np.errstate(all="ignore"):
        for it in range(1, max_iter + 1):
            ratio = _newton_ratio(c_high, z)
            denom = 1.0 - ratio * _repulsion(z)
            w = np.where(np.isfinite(denom) & (denom != 0), ratio / denom, ratio)
            w = np.where(np.isfinite(w), w, 0.0)
            z = z - w
            step = float(np.max(np.abs(w) / np.maximum(1.0, np.abs(z))))
            if step < 1e-7:
                residual = float(np.max(_backward_error(c_high, z)))
                if residual < tol:
                    logger.debug("Aberth converged for degree %d after %d iterations", n, it)
                    break
        else:
            raise ConvergenceError(
                f"Aberth iteration did not converge for degree {n} after {max_iter} steps "
                f"(last step {step:.3g}, residual {residual:.3g})",
                max_iter,
                step,
                residual,
            )
        polish = _newton_ratio(c_high, z)
        z = np.where(np.isfinite(polish), z - polish, z)
    return z


def _log_mahler_squarefree(f: IntPoly, tol: float, max_iter: int) -> float:
    roots = aberth_roots(f, tol, max_iter)
    outside = np.abs(roots)
    return math.log(abs(f.leading)) + float(np.sum(np.log(np.maximum(1.0, outside))))


def log_mahler_measure(P: IntPoly, tol: float = MAHLER_TOL, max_iter: int = ABERTH_MAX_ITER) -> float:
    if P.is_zero():
        raise ValueError("Mahler measure of the zero polynomial")
    if not 0 < tol <= 1e-6:
        raise ValueError(f"Tolerance must lie in (0, 1e-6], got {tol}")
    unit, parts = squarefree_decomposition(P)
    total = math.log(abs(unit))
    for f, mult in parts:
        total += mult * _log_mahler_squarefree(f, tol, max_iter)
    return total


def mahler_measure(P: IntPoly, tol: float = MAHLER_TOL, max_iter: int = ABERTH_MAX_ITER) -> float:
    """``|a_d| * prod(max(1, |z|))`` over the complex roots of P."""

    return math.exp(log_mahler_measure(P, tol, max_iter))


def _graeffe_step(coeffs: List[int]) -> List[int]:
    even = coeffs[0::2]
    odd = coeffs[1::2]

    def square(a: List[int]) -> List[int]:
        out = [0] * (2 * len(a) - 1) if a else []
        for i, x in enumerate(a):
            for j, y in enumerate(a):
                out[i + j] += x * y
        return out

    e2 = square(even)
    o2 = [0] + square(odd)
    n = len(coeffs) - 1
    size = max(len(e2), len(o2))
    out = [(e2[i] if i < len(e2) else 0) - (o2[i] if i < len(o2) else 0) for i in range(size)]
    if n % 2:
        out = [-c for c in out]
    while out and out[-1] == 0:
        out.pop()
    return out


def graeffe_mahler_bracket(P: IntPoly, steps: int = 12) -> Tuple[float, float]:
    """Rigorous ``(lower, upper)`` bracket of M(P) from exact root squaring."""

    if P.degree < 1:
        m = float(abs(P.leading))
        return m, m
    coeffs = list(P.coeffs)
    for _ in range(steps):
        coeffs = _graeffe_step(coeffs)
    n = len(coeffs) - 1
    scale = 2.0 ** steps
    upper = 0.5 * math.log(sum(c * c for c in coeffs)) / scale
    lower = max(
        math.log(abs(c)) - math.log(math.comb(n, i)) for i, c in enumerate(coeffs) if c
    ) / scale
    return math.exp(lower), math.exp(upper)


def is_exceptional(R: IntPoly, params: AdmissibilityParams) -> bool:
    """True iff ``M(R) <= e^kappa`` and ``deg R <= 10 X``."""

    if R.degree > params.degree_bound:
        return False
    return log_mahler_measure(R) <= params.kappa + 1e-12


def dobrowolski_floor(d: int, c: float = DOBROWOLSKI_C) -> float:
    if d < 3:
        raise ValueError(f"Dobrowolski floor needs d >= 3, got {d}")
    ratio = math.log(math.log(d)) / math.log(d)
    return 1.0 + c * ratio ** 3


def bell_number(m: int) -> int:
    """Bell number via the Bell triangle."""

    if m < 0:
        raise ValueError(f"Bell number index must be nonnegative, got {m}")
    row = [1]
    for _ in range(m):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
    return row[0]


# ---------------------------------------------------------------------------
# k-th roots and the irreducibility certificate


def kth_root_poly(P: IntPoly, k: int) -> Optional[IntPoly]:
    """Q with Q**k == P if one exists (positive leading coefficient for even k)."""

    if k < 2:
        raise ValueError(f"Root order must be at least 2, got {k}")
    if P.is_zero():
        return IntPoly(())
    n = P.degree
    if n % k:
        return None
    lc = P.leading
    if lc < 0 and k % 2 == 0:
        return None
    root, exact = integer_nthroot(abs(lc), k)
    if not exact:
        return None
    b0 = int(root) if lc > 0 else -int(root)
    a = P.coeffs[::-1]
    m = n // k
    b: List[Fraction] = [Fraction(b0)]
    for j in range(1, m + 1):
        acc = Fraction(0)
        for i in range(1, j + 1):
            if i < len(a) and a[i]:
                acc += Fraction((k + 1) * i - k * j, k) * a[i] * b[j - i]
        bj = acc / (j * a[0])
        if bj.denominator != 1:
            return None
        b.append(bj)
    Q = IntPoly(tuple(int(x) for x in reversed(b)))
    return Q if Q ** k == P else None


@dataclass(frozen=True)
class CertifiedIrreducible:
    witnesses: Tuple[int, ...]
    degree: int


@dataclass(frozen=True)
class Factored:
    factor: IntPoly
    reason: str


@dataclass(frozen=True)
class Unknown:
    surviving: Tuple[int, ...]
    primes_tried: int


IrreducibilityVerdict = Union[CertifiedIrreducible, Factored, Unknown]


def _rational_root(P: IntPoly) -> Optional[IntPoly]:
    a0, lc = P.coeffs[0], P.leading
    if abs(a0) > RATIONAL_ROOT_LIMIT or abs(lc) > RATIONAL_ROOT_LIMIT:
        candidates: Iterable[Tuple[int, int]] = ((1, 1), (-1, 1))
    else:
        candidates = (
            (sign * r, s) for r in divisors(abs(a0)) for s in divisors(abs(lc)) for sign in (1, -1)
        )
    n = P.degree
    for r, s in candidates:
        if math.gcd(r, s) != 1:
            continue
        if sum(c * r ** i * s ** (n - i) for i, c in enumerate(P.coeffs)) == 0:
            return IntPoly((-r, s))
    return None


def irreducibility_certificate(P: IntPoly, prime_budget: int = 60, seed=0) -> IrreducibilityVerdict:
    """One-sided certificate from factor-degree patterns modulo primes.

    Subset sums of the degree sequence mod p contain the degree of every
    rational factor; intersecting over primes down to ``{0, d}`` proves
    irreducibility.
    """

    d = P.degree
    if d < 1:
        raise ValueError("Certificate needs degree at least 1")
    if P.content != 1:
        raise ValueError(f"Polynomial must be primitive, content is {P.content}")
    if not is_squarefree(P):
        raise NotSquarefreeError(poly_gcd(P, P.derivative()))
    if d == 1:
        return CertifiedIrreducible((), 1)
    if P.coeffs[0] == 0:
        return Factored(X_POLY, "root 0")
    linear = _rational_root(P)
    if linear is not None:
        return Factored(linear, "rational root")
    e, found, rest = _cyclotomic_factors(P)
    if found and (rest.degree > 0 or len(found) > 1):
        return Factored(cyclotomic_poly(found[0][0]), f"cyclotomic factor Phi_{found[0][0]}")

    rng = np.random.default_rng(seed)
    full = (1 << (d + 1)) - 1
    target = 1 | (1 << d)
    possible = full
    witnesses: List[int] = []
    p = 1
    tried = 0
    while tried < prime_budget:
        p = next_prime(p)
        if P.leading % p == 0:
            continue
        f = reduce_mod(P, p)
        if not is_squarefree_mod(f):
            continue
        tried += 1
        sums = 1
        for deg in degree_sequence(f, rng):
            sums |= sums << deg
        new = possible & sums & full
        if new != possible:
            witnesses.append(p)
            possible = new
        if possible == target:
            logger.debug("Certified degree-%d polynomial irreducible with primes %s", d, witnesses)
            return CertifiedIrreducible(tuple(witnesses), d)
    surviving = tuple(i for i in range(d + 1) if possible >> i & 1)
    return Unknown(surviving, tried)
