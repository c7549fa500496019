"""Exceptional tables, the proper-power sieve and cyclotomic divisor experiments."""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import norm
from sympy import divisors

from randpoly.ffpoly import inverse_mod, next_prime
from randpoly.intpoly import (
    ONE,
    X_POLY,
    AdmissibilityParams,
    CertifiedIrreducible,
    Factored,
    IntPoly,
    _cyclotomic_factors,
    _phi_table,
    cyclotomic_indices,
    cyclotomic_part,
    cyclotomic_poly,
    euler_phi,
    irreducibility_certificate,
    is_squarefree,
    kth_root_poly,
    log_mahler_measure,
)
from randpoly.model import PolynomialModel, parallel_map, sample_coefficients, sup_norm, substream

try:
    from tqdm import tqdm
except ImportError:  # pragma: no cover - optional dependency
    def tqdm(iterable, **_):
        return iterable

logger = logging.getLogger(__name__)

# Exhaustive small-measure enumeration
DEFAULT_ENUMERATION_CAP = 10
MAX_ENUMERATION_CAP = 14
# Non-reciprocal candidates only exist above Smyth's bound, and are costly
SMYTH_LOG = math.log(1.3247179572)
NONRECIPROCAL_CAP = 8

# Power sieve
DEFAULT_SIEVE_PRIMES = 50
DETECT_SIEVE_PRIMES = 12

# Monte Carlo
MC_CHUNK = 10_000
MIN_MC_SAMPLES = 1000
INT64_SAFE = 1 << 62


class BudgetError(ValueError):
    """Requested enumeration cap is beyond what the exhaustive search can finish."""

    def __init__(self, cap: int, limit: int = MAX_ENUMERATION_CAP):
        super().__init__(f"Enumeration degree cap {cap} exceeds the budget limit {limit}")
        self.cap = cap
        self.limit = limit


# ---------------------------------------------------------------------------
# Bundled small-Mahler list


@dataclass(frozen=True)
class SmallMahlerEntry:
    name: str
    poly: IntPoly
    stored_measure: float
    measure: float


@lru_cache(maxsize=None)
def load_small_mahler() -> Tuple[SmallMahlerEntry, ...]:
    """Bundled small-measure polynomials with their measures recomputed."""

    raw = resources.files("randpoly.data").joinpath("small_mahler.json").read_text(encoding="utf-8")
    data = json.loads(raw)
    if data.get("version") != 1:
        raise ValueError(f"Unsupported small-Mahler table version {data.get('version')!r}")
    entries = []
    for item in data["entries"]:
        poly = IntPoly(tuple(int(c) for c in item["coeffs"]))
        stored = float(item["measure"])
        measure = math.exp(log_mahler_measure(poly))
        if abs(measure - stored) > 1e-6:
            logger.warning(
                "Bundled polynomial %s: stored measure %s, recomputed %.9f", item["name"], item["measure"], measure
            )
        entries.append(SmallMahlerEntry(item["name"], poly, stored, measure))
    return tuple(entries)


# ---------------------------------------------------------------------------
# Exceptional table


@dataclass(frozen=True)
class TableEntry:
    poly: IntPoly
    provenance: str
    index: Optional[int] = None

    def to_json(self) -> Dict[str, object]:
        data: Dict[str, object] = {"coeffs": self.poly.to_json(), "provenance": self.provenance}
        if self.index is not None:
            data["index"] = self.index
        return data


@dataclass(frozen=True)
class ExceptionalTable:
    params: AdmissibilityParams
    entries: Tuple[TableEntry, ...]
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    hash: str = field(init=False)

    def __post_init__(self) -> None:
        payload = json.dumps(self._content(), sort_keys=True, separators=(",", ":"))
        object.__setattr__(self, "hash", hashlib.sha256(payload.encode()).hexdigest())

    @classmethod
    def empty(cls, params: AdmissibilityParams) -> "ExceptionalTable":
        return cls(params, (), 0)

    @property
    def polynomials(self) -> Tuple[IntPoly, ...]:
        return tuple(e.poly for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, poly: IntPoly) -> bool:
        return any(e.poly == poly for e in self.entries)

    def _content(self) -> Dict[str, object]:
        return {
            "params": {"X": self.params.X, "kappa": self.params.kappa},
            "enumeration_cap": self.enumeration_cap,
            "entries": [e.to_json() for e in self.entries],
        }

    def to_json(self) -> Dict[str, object]:
        data = self._content()
        data["hash"] = self.hash
        return data

    @classmethod
    def from_json(cls, data: Dict[str, object]) -> "ExceptionalTable":
        try:
            params = AdmissibilityParams(float(data["params"]["X"]), float(data["params"]["kappa"]), relaxed=True)
            entries = tuple(
                TableEntry(IntPoly.from_json(e["coeffs"]), str(e["provenance"]), e.get("index")) for e in data["entries"]
            )
            table = cls(params, entries, int(data.get("enumeration_cap", DEFAULT_ENUMERATION_CAP)))
        except (KeyError, TypeError) as exc:
            raise ValueError("Malformed exceptional table JSON") from exc
        if "hash" in data and data["hash"] != table.hash:
            raise ValueError(f"Exceptional table hash mismatch: stored {data['hash']}, computed {table.hash}")
        return table


def _rec_bounds(n: int, levels: int, M: float) -> Tuple[List[int], List[int]]:
    # |s_k| <= n - 1 + M^k and |c_k| <= C(n, k) M
    power_bounds = [int(math.floor(n - 1 + M ** k + 1e-9)) for k in range(1, levels + 1)]
    coeff_bounds = [int(math.floor(math.comb(n, k) * M + 1e-9)) for k in range(1, levels + 1)]
    return power_bounds, coeff_bounds


def _power_sum_search(n: int, levels: int, M: float) -> List[List[int]]:
    """Integer prefixes ``c_0 = 1, c_1..c_levels`` of monic degree-n polynomials.

    DFS over Newton power sums with integrality pruning.
    """

    power_bounds, coeff_bounds = _rec_bounds(n, levels, M)
    c = [1] + [0] * levels
    s = [n] + [0] * levels
    found: List[List[int]] = []

    def descend(k: int) -> None:
        if k > levels:
            found.append(list(c))
            return
        partial = sum(c[i] * s[k - i] for i in range(1, k))
        bound = power_bounds[k - 1]
        start = -bound + ((-partial + bound) % k)
        for sk in range(start, bound + 1, k):
            ck = -(sk + partial) // k
            if abs(ck) > coeff_bounds[k - 1]:
                continue
            c[k] = ck
            s[k] = sk
            descend(k + 1)
        c[k] = 0
        s[k] = 0

    descend(1)
    return found


def _batch_measures(rows: np.ndarray) -> np.ndarray:
    """Mahler measures of monic polynomials given high-first as rows ``[1, c_1, ..., c_n]``."""

    count, width = rows.shape
    n = width - 1
    comp = np.zeros((count, n, n))
    comp[:, 0, :] = -rows[:, 1:]
    if n > 1:
        comp[:, np.arange(1, n), np.arange(n - 1)] = 1.0
    roots = np.linalg.eigvals(comp)
    return np.prod(np.maximum(np.abs(roots), 1.0), axis=1)


def _small_measure_candidates(n: int, M: float, reciprocal: bool) -> List[IntPoly]:
    if reciprocal:
        h = n // 2
        rows = []
        for prefix in _power_sum_search(n, h, M):
            rows.append(prefix + prefix[:h][::-1])
    else:
        rows = []
        for prefix in _power_sum_search(n, n - 1, M):
            rows.append(prefix + [1])
            rows.append(prefix + [-1])
    if not rows:
        return []
    arr = np.array(rows, dtype=float)
    measures = _batch_measures(arr)
    keep = (measures <= M * (1 + 1e-6)) & (measures > 1 + 1e-6)
    logger.debug("Degree %d (%s): %d candidates, %d below the measure bound",
                 n, "reciprocal" if reciprocal else "general", len(rows), int(keep.sum()))
    return [IntPoly(tuple(reversed(rows[i]))) for i in np.flatnonzero(keep)]


def build_exceptional_table(
    params: AdmissibilityParams,
    enumeration_degree_cap: int = DEFAULT_ENUMERATION_CAP,
    progress: bool = False,
) -> ExceptionalTable:
    """x, every Phi_n with phi(n) <= 10X, enumerated small-measure irreducibles, and bundled entries."""

    if enumeration_degree_cap > MAX_ENUMERATION_CAP:
        raise BudgetError(enumeration_degree_cap)
    max_degree = int(math.floor(params.degree_bound))
    entries: List[TableEntry] = [TableEntry(X_POLY, "monomial")]
    entries.extend(TableEntry(cyclotomic_poly(n), "cyclotomic", n) for n in cyclotomic_indices(max_degree))
    seen = {e.poly for e in entries}

    M = params.measure_bound
    top = min(enumeration_degree_cap, max_degree)
    jobs = [(n, True) for n in range(2, top + 1, 2)]
    if params.kappa >= SMYTH_LOG:
        jobs.extend((n, False) for n in range(2, min(top, NONRECIPROCAL_CAP) + 1))
    for n, reciprocal in tqdm(jobs, desc="enumerate", disable=not progress):
        for poly in _small_measure_candidates(n, M, reciprocal):
            if poly in seen:
                continue
            log_m = log_mahler_measure(poly)
            if not 1e-9 < log_m <= params.kappa + 1e-12 or not is_squarefree(poly):
                continue
            if isinstance(irreducibility_certificate(poly), CertifiedIrreducible):
                entries.append(TableEntry(poly, "enumerated"))
                seen.add(poly)

    for item in load_small_mahler():
        poly = item.poly.primitive()
        if poly in seen or poly.degree > params.degree_bound or item.measure > M * (1 + 1e-12):
            continue
        if isinstance(irreducibility_certificate(poly), Factored):
            logger.warning("Bundled polynomial %s factors; skipped", item.name)
            continue
        entries.append(TableEntry(poly, "bundled"))
        seen.add(poly)

    table = ExceptionalTable(params, tuple(entries), enumeration_degree_cap)
    logger.info("Exceptional table for X=%s kappa=%s: %d entries (%d enumerated)", params.X, params.kappa,
                len(table), sum(e.provenance == "enumerated" for e in table.entries))
    return table


@lru_cache(maxsize=8)
def default_table(params: AdmissibilityParams, enumeration_degree_cap: int = DEFAULT_ENUMERATION_CAP) -> ExceptionalTable:
    return build_exceptional_table(params, enumeration_degree_cap)


# ---------------------------------------------------------------------------
# Proper powers


@dataclass(frozen=True)
class PowerSieveReport:
    k: int
    primes: Tuple[int, ...]
    indicators: Tuple[int, ...]
    support_ok: bool

    @property
    def Y(self) -> int:
        return sum(self.indicators)

    @property
    def threshold(self) -> float:
        return 2 * len(self.primes) / 3

    @property
    def verdict(self) -> str:
        return "power-consistent" if self.Y == len(self.primes) else "refuted"

    def to_json(self) -> Dict[str, object]:
        return {
            "k": self.k,
            "primes": list(self.primes),
            "indicators": list(self.indicators),
            "Y": self.Y,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "support_ok": self.support_ok,
        }


def power_sieve(
    P: IntPoly,
    R: IntPoly = ONE,
    k: int = 2,
    n_primes: int = DEFAULT_SIEVE_PRIMES,
    prime_lo: Optional[int] = None,
) -> PowerSieveReport:
    """Test whether ``P(2) R(2)^{-1}`` is a k-th power residue at primes ``p = 1 mod k``."""

    if k < 2:
        raise ValueError(f"Power must be at least 2, got {k}")
    r2 = R(2)
    if r2 == 0:
        raise ValueError("R(2) = 0 is excluded from the power sieve")
    p2 = P(2)
    height = max(P.height, R.height)
    if prime_lo is None:
        prime_lo = max(2 * height + 1, 1000)
    primes: List[int] = []
    q = prime_lo - 1
    while len(primes) < n_primes:
        q = next_prime(q)
        if (q - 1) % k == 0 and r2 % q:
            primes.append(q)
    indicators = []
    for q in primes:
        v = p2 % q * inverse_mod(r2 % q, q) % q
        indicators.append(1 if v == 0 or pow(v, (q - 1) // k, q) == 1 else 0)
    support_ok = all(q > 2 * height for q in primes)
    report = PowerSieveReport(k, tuple(primes), tuple(indicators), support_ok)
    logger.debug("Power sieve k=%d: Y=%d of %d", k, report.Y, len(primes))
    return report


@dataclass(frozen=True)
class PowerForm:
    phi: IntPoly
    base: IntPoly
    k: int
    kind: str

    def to_json(self) -> Dict[str, object]:
        return {"phi": self.phi.to_json(), "base": self.base.to_json(), "k": self.k, "kind": self.kind}


def detect_power_form(P: IntPoly) -> PowerForm:
    """Write ``P = Phi * Q**k`` with Phi the cyclotomic part and k maximal, when possible."""

    if P.is_zero():
        raise ValueError("Power form of the zero polynomial")
    phi, tilde = cyclotomic_part(P)
    if tilde.degree == 0:
        return PowerForm(phi * tilde.coeffs[0], ONE, 1, "cyclotomic")
    for k in sorted((k for k in divisors(tilde.degree) if k >= 2), reverse=True):
        t, unit = tilde, phi
        if k % 2 == 0 and t.leading < 0:
            t, unit = -t, -phi
        if power_sieve(t, ONE, k, DETECT_SIEVE_PRIMES).verdict == "refuted":
            continue
        base = kth_root_poly(t, k)
        if base is not None:
            return PowerForm(unit, base, k, "power")
    return PowerForm(phi, tilde, 1, "none")


# ---------------------------------------------------------------------------
# Divisor probabilities


def _remainder_matrix(Q: IntPoly, d: int) -> Optional[np.ndarray]:
    """Rows ``x^j mod Q`` for j = 0..d (Q monic up to sign), int64 when safe."""

    if abs(Q.leading) != 1:
        return None
    if Q.leading < 0:
        Q = -Q
    n = Q.degree
    low = Q.coeffs[:n]
    rows = []
    r = [0] * n
    for j in range(d + 1):
        if j < n:
            r = [0] * n
            r[j] = 1
        else:
            top = r[-1]
            r = [0] + r[:-1]
            r = [a - top * b for a, b in zip(r, low)]
        rows.append(r)
    peak = max((abs(v) for row in rows for v in row), default=0)
    if peak * (d + 1) < INT64_SAFE // 1024:
        return np.array(rows, dtype=np.int64)
    return np.array(rows, dtype=object)


def _divisible_rows(coeffs: np.ndarray, Q: IntPoly, reduction: Optional[np.ndarray]) -> np.ndarray:
    if Q.degree == 0:
        c = abs(Q.coeffs[0])
        return np.all(coeffs % c == 0, axis=1)
    if reduction is not None:
        if reduction.dtype == object:
            rem = coeffs.astype(object) @ reduction
        else:
            rem = coeffs @ reduction
        return np.all(rem == 0, axis=1)
    return np.array([IntPoly(tuple(int(c) for c in row)).exact_quotient(Q) is not None for row in coeffs])


def wilson_interval(hits: int, n: int, level: float = 0.95) -> Tuple[float, float]:
    z = float(norm.ppf(0.5 + level / 2))
    phat = hits / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _chunks(N: int) -> List[Tuple[int, int]]:
    return [(i, min(MC_CHUNK, N - i * MC_CHUNK)) for i in range((N + MC_CHUNK - 1) // MC_CHUNK)]


@dataclass(frozen=True)
class DivisorReport:
    divisor: IntPoly
    model: str
    degree: int
    N: int
    seed: int
    hits: int
    ci: Tuple[float, float]
    sup_norm_bound: float
    cyclotomic_index: Optional[int] = None
    cyclotomic_constant_fit: Optional[float] = None

    @property
    def estimate(self) -> float:
        return self.hits / self.N

    def to_json(self) -> Dict[str, object]:
        data: Dict[str, object] = {
            "divisor": self.divisor.to_json(),
            "model": self.model,
            "degree": self.degree,
            "N": self.N,
            "seed": self.seed,
            "hits": self.hits,
            "estimate": self.estimate,
            "ci95": list(self.ci),
            "sup_norm_bound": self.sup_norm_bound,
        }
        if self.cyclotomic_index is not None:
            data["cyclotomic_index"] = self.cyclotomic_index
            data["cyclotomic_constant_fit"] = {"value": self.cyclotomic_constant_fit, "label": "empirical"}
        return data


def _single_cyclotomic(Q: IntPoly) -> Optional[int]:
    e, found, rest = _cyclotomic_factors(Q)
    if e == 0 and len(found) == 1 and found[0][1] == 1 and rest.degree == 0 and abs(rest.coeffs[0]) == 1:
        return found[0][0]
    return None


def divisor_probability_mc(
    Q: IntPoly,
    model: PolynomialModel,
    N: int,
    seed: int,
    threads: int = 1,
    progress: bool = False,
) -> DivisorReport:
    """Monte Carlo frequency of ``Q | P`` with a Wilson interval and the sup-norm bound."""

    if N < MIN_MC_SAMPLES:
        raise ValueError(f"Need at least {MIN_MC_SAMPLES} samples, got {N}")
    if Q.is_zero():
        raise ValueError("Divisor must be nonzero")
    d = model.degree
    n = Q.degree
    bound = Fraction(1)
    for j in range(min(n, d + 1)):
        bound *= sup_norm(model.law_at(j))
    index = _single_cyclotomic(Q)
    if n > d:
        return DivisorReport(Q, model.name, d, N, seed, 0, wilson_interval(0, N), float(bound), index, None)

    reduction = _remainder_matrix(Q, d)
    if reduction is None:
        logger.info("Divisor %s is not monic; using exact per-sample division", Q)

    def run(chunk: Tuple[int, int]) -> int:
        i, size = chunk
        coeffs = sample_coefficients(model, substream(seed, i), size)
        return int(np.count_nonzero(_divisible_rows(coeffs, Q, reduction)))

    chunks = _chunks(N)
    counts = parallel_map(run, list(tqdm(chunks, desc="divisor-mc", disable=not progress)), threads)
    hits = sum(counts)
    fit = None
    if index is not None and hits:
        # P(Phi_n | P) ~ (C n / d)^(phi(n)/2), solved for C
        fit = (d / index) * (hits / N) ** (2 / euler_phi(index))
    return DivisorReport(Q, model.name, d, N, seed, hits, wilson_interval(hits, N), float(bound), index, fit)


@dataclass(frozen=True)
class ObstructionReport:
    model: str
    degree: int
    N: int
    seed: int
    n_bound: int
    zero_constant: int
    per_index: Tuple[Tuple[int, int], ...]
    any_hits: int

    @property
    def irreducible_estimate(self) -> float:
        return 1 - self.any_hits / self.N

    @property
    def asymptotic(self) -> float:
        return 1 - math.sqrt(2 / (math.pi * self.degree))

    def frequency(self, n: int) -> float:
        return dict(self.per_index).get(n, 0) / self.N

    def to_json(self) -> Dict[str, object]:
        return {
            "model": self.model,
            "degree": self.degree,
            "N": self.N,
            "seed": self.seed,
            "n_bound": self.n_bound,
            "freq_x_divides": self.zero_constant / self.N,
            "freq_cyclotomic": {str(n): hits / self.N for n, hits in self.per_index},
            "freq_any": self.any_hits / self.N,
            "irreducible_estimate": self.irreducible_estimate,
            "asymptotic": self.asymptotic,
        }


def cyclotomic_obstruction_mc(
    model: PolynomialModel,
    n_bound: int,
    N: int,
    seed: int,
    threads: int = 1,
    progress: bool = False,
) -> ObstructionReport:
    """How often P vanishes at 0 or at a root of unity of degree below ``n_bound``."""

    if N < MIN_MC_SAMPLES:
        raise ValueError(f"Need at least {MIN_MC_SAMPLES} samples, got {N}")
    if n_bound < 2:
        raise ValueError(f"Degree bound must be at least 2, got {n_bound}")
    d = model.degree
    indices = [n for n in cyclotomic_indices(n_bound - 1) if euler_phi(n) <= d]
    reductions = [(n, _remainder_matrix(cyclotomic_poly(n), d)) for n in indices]

    def run(chunk: Tuple[int, int]) -> Tuple[int, List[int], int]:
        i, size = chunk
        coeffs = sample_coefficients(model, substream(seed, i), size)
        zero = coeffs[:, 0] == 0
        hit_any = zero.copy()
        per = []
        for n, red in reductions:
            mask = _divisible_rows(coeffs, cyclotomic_poly(n), red)
            per.append(int(np.count_nonzero(mask)))
            hit_any |= mask
        return int(np.count_nonzero(zero)), per, int(np.count_nonzero(hit_any))

    results = parallel_map(run, list(tqdm(_chunks(N), desc="obstruction-mc", disable=not progress)), threads)
    zero_total = sum(r[0] for r in results)
    per_total = [sum(r[1][j] for r in results) for j in range(len(indices))]
    any_total = sum(r[2] for r in results)
    return ObstructionReport(
        model.name, d, N, seed, n_bound, zero_total, tuple(zip(indices, per_total)), any_total
    )


# ---------------------------------------------------------------------------
# Cyclotomic products


def count_cyclotomic_products(n: int) -> int:
    """Number of degree-n products of cyclotomic polynomials."""

    if n < 0:
        raise ValueError(f"Degree must be nonnegative, got {n}")
    ways = [1] + [0] * n
    if n == 0:
        return 1
    phi = _phi_table(2 * n * n + 6)
    for m in cyclotomic_indices(n):
        t = int(phi[m])
        for s in range(t, n + 1):
            ways[s] += ways[s - t]
    return ways[n]
