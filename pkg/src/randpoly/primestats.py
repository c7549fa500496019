"""Root statistics over primes: admissible root counts, prime-ideal counts and weighted estimators."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from randpoly.ffpoly import count_roots_batch, divides_mask, reduce_mod, roots_mod_p
from randpoly.intpoly import (
    AdmissibilityParams,
    CertifiedIrreducible,
    Factored,
    IntPoly,
    NotSquarefreeError,
    _cyclotomic_factors,
    bell_number,
    discriminant,
    irreducibility_certificate,
    is_squarefree,
    poly_gcd,
    resultant,
)
from randpoly.model import PolynomialModel, parallel_map, sample_polynomial, substream
from randpoly.sieve import ExceptionalTable, default_table
from randpoly.weights import (
    KahanSum,
    PrimeRange,
    WeightSpec,
    eval_weight,
    laplace_G,
    prime_segments,
    weighted_prime_sum,
)

logger = logging.getLogger(__name__)

# Distance from B_m below which a moment estimate is inconsistent data
DEFAULT_TOLERANCE = 0.25

LC_REASON = "p divides the leading coefficient"
DISC_REASON = "p divides disc*lc"


@dataclass(frozen=True)
class Skip:
    reason: str


def _eval_mod(coeffs: Sequence[int], r: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * r + c) % p
    return acc


# ---------------------------------------------------------------------------
# Number fields by defining polynomial


@dataclass(frozen=True)
class FieldSpec:
    """K = Q(a) for a root a of ``defining``."""

    defining: IntPoly
    vouched: bool = True
    discriminant: int = field(init=False)
    leading: int = field(init=False)

    def __post_init__(self) -> None:
        if self.defining.degree < 1:
            raise ValueError("Defining polynomial needs degree at least 1")
        if not is_squarefree(self.defining):
            raise NotSquarefreeError(poly_gcd(self.defining, self.defining.derivative()))
        object.__setattr__(self, "discriminant", discriminant(self.defining))
        object.__setattr__(self, "leading", self.defining.leading)

    @classmethod
    def from_poly(cls, P: IntPoly, assert_irreducible: bool = False, prime_budget: int = 60, seed=0) -> "FieldSpec":
        """Field of ``P``; irreducibility is certified, or asserted by the caller and flagged."""

        P = P.primitive()
        verdict = irreducibility_certificate(P, prime_budget, seed)
        if isinstance(verdict, CertifiedIrreducible):
            return cls(P, True)
        if isinstance(verdict, Factored):
            raise ValueError(f"{P} is reducible: {verdict.reason} {verdict.factor}")
        if not assert_irreducible:
            raise ValueError(f"Could not certify {P} irreducible; surviving degrees {verdict.surviving}")
        logger.warning("Using %s as a field on the caller's assertion of irreducibility", P)
        return cls(P, False)

    @property
    def bad(self) -> int:
        return self.discriminant * self.leading

    def to_json(self) -> Dict[str, object]:
        return {
            "defining": self.defining.to_json(),
            "discriminant": str(self.discriminant),
            "irreducibility": "certified" if self.vouched else "asserted",
        }


def prime_ideal_count(K: FieldSpec, p: int) -> Union[int, Skip]:
    """Prime ideals of norm p, as the distinct roots of the defining polynomial mod p."""

    if K.bad % p == 0:
        return Skip(DISC_REASON)
    return len(roots_mod_p(reduce_mod(K.defining, p)))


def prime_ideal_counts(K: FieldSpec, primes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Counts for every prime plus the mask of skipped primes (count 0 there)."""

    primes = np.asarray(primes, dtype=np.int64)
    skip = divides_mask(K.bad, primes)
    counts = np.zeros(len(primes), dtype=np.int64)
    keep = ~skip
    if np.any(keep):
        counts[keep] = count_roots_batch(K.defining.coeffs, primes[keep])
    return counts, skip


# ---------------------------------------------------------------------------
# Admissible root counts


class AdmissibleRootCounter:
    """``B_P(p)`` for many primes.

    Table entries dividing P are split off first. For the remaining part
    ``rest`` a root mod p can only be exceptional when p divides some
    ``Res(rest, E)``, so the vectorized count of ``rest`` is exact away from
    those primes; at them the roots are enumerated.
    """

    def __init__(self, P: IntPoly, table: Optional[ExceptionalTable] = None):
        if P.is_zero():
            raise ValueError("Root counts of the zero polynomial")
        self.P = P
        self.table = table
        entries = table.entries if table is not None else ()
        rest = P
        for entry in entries:
            while entry.poly.degree >= 1:
                q = rest.exact_quotient(entry.poly)
                if q is None:
                    break
                rest = q
        self.rest = rest
        self._exceptional = [e.poly for e in entries]
        self._checks: List[Tuple[int, Optional[int]]] = []
        if rest.degree >= 1:
            for entry in entries:
                self._checks.append((resultant(rest, entry.poly), entry.index))
        logger.debug("Admissible part of degree %d after removing table factors from degree %d",
                     rest.degree, P.degree)

    def count(self, p: int) -> int:
        """Distinct roots of P mod p that are roots of no table entry."""

        if self.P.leading % p == 0:
            raise ValueError(f"{p} divides the leading coefficient of {self.P}")
        roots = roots_mod_p(reduce_mod(self.P, p))
        return sum(
            1 for r in roots if not any(_eval_mod(E.coeffs, r, p) == 0 for E in self._exceptional)
        )

    def skipped(self, primes: np.ndarray) -> np.ndarray:
        return divides_mask(self.P.leading, primes)

    def _bad(self, primes: np.ndarray) -> np.ndarray:
        mask = divides_mask(self.rest.leading, primes)
        for res, index in self._checks:
            if index is None:
                mask |= divides_mask(res, primes)
                continue
            # Phi_n has roots mod p only when p = 1 mod n, for p not dividing n
            sel = ((primes - 1) % index == 0) | (primes <= index)
            if np.any(sel):
                mask[sel] |= divides_mask(res, primes[sel])
        return mask

    def counts(self, primes) -> np.ndarray:
        primes = np.asarray(primes, dtype=np.int64)
        out = np.zeros(len(primes), dtype=np.int64)
        skip = self.skipped(primes)
        if self.rest.degree < 1:
            return out
        bad = self._bad(primes) & ~skip
        good = ~skip & ~bad
        if np.any(good):
            out[good] = count_roots_batch(self.rest.coeffs, primes[good])
        for i in np.flatnonzero(bad):
            out[i] = self.count(int(primes[i]))
        return out


def _table_for(params: AdmissibilityParams, table: Optional[ExceptionalTable]) -> ExceptionalTable:
    return table if table is not None else default_table(params)


def admissible_root_count(
    P: IntPoly, p: int, params: AdmissibilityParams, table: Optional[ExceptionalTable] = None
) -> int:
    """Distinct roots of P mod p that are not roots of an exceptional polynomial."""

    return AdmissibleRootCounter(P, _table_for(params, table)).count(p)


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class StatReport:
    kind: str
    estimate: float
    target: Optional[float]
    X: float
    prime_range: Dict[str, object]
    prime_count: int
    weight: Dict[str, object]
    m: int = 1
    seed: Optional[int] = None
    skipped: Tuple[Tuple[int, str], ...] = ()
    table_hash: Optional[str] = None
    notes: Tuple[str, ...] = ()
    extra: Tuple[Tuple[str, object], ...] = ()

    @property
    def rounded(self) -> int:
        return int(round(self.estimate))

    @property
    def distance(self) -> float:
        return abs(self.estimate - self.rounded)

    def to_json(self) -> Dict[str, object]:
        data: Dict[str, object] = {
            "kind": self.kind,
            "estimate": self.estimate,
            "rounded": self.rounded,
            "distance": self.distance,
            "target": self.target,
            "X": self.X,
            "prime_range": dict(self.prime_range, count=self.prime_count),
            "weight": self.weight,
            "m": self.m,
            "seed": self.seed,
            "skipped": [[p, reason] for p, reason in self.skipped],
            "table_hash": self.table_hash,
            "notes": list(self.notes),
        }
        data.update(dict(self.extra))
        return data


BatchStat = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


def _collect(
    w: WeightSpec,
    stat: BatchStat,
    reason: str,
    prime_range: Optional[PrimeRange],
    threads: int,
    progress: bool,
    cache_dir,
) -> Tuple[float, int, Tuple[Tuple[int, str], ...], PrimeRange]:
    prime_range = prime_range or PrimeRange.for_weight(w)
    seen: List[int] = []
    skipped: List[Tuple[int, str]] = []

    def wrapped(primes: np.ndarray) -> np.ndarray:
        values, skip = stat(primes)
        seen.append(len(primes))
        skipped.extend((int(p), reason) for p in primes[skip])
        return values

    estimate = weighted_prime_sum(w, wrapped, prime_range, threads=threads, progress=progress, cache_dir=cache_dir)
    if skipped:
        logger.info("%d primes skipped (%s)", len(skipped), reason)
    return estimate, sum(seen), tuple(sorted(skipped)), prime_range


def pit_check(
    K: FieldSpec,
    X: float,
    prime_range: Optional[PrimeRange] = None,
    threads: int = 1,
    progress: bool = False,
    cache_dir=None,
) -> StatReport:
    """``sum_p A_K(p) log p h_X(log p)``, which tends to 1."""

    w = WeightSpec.h(X)
    estimate, count, skipped, prime_range = _collect(
        w, lambda primes: prime_ideal_counts(K, primes), DISC_REASON, prime_range, threads, progress, cache_dir
    )
    notes = () if K.vouched else ("irreducibility asserted by caller, not certified",)
    return StatReport("pit-check", estimate, 1, w.X, prime_range.to_json(), count, w.to_json(),
                      skipped=skipped, notes=notes, extra=(("field", K.to_json()),))


def _irreducible_known(f: IntPoly) -> Optional[bool]:
    if f.degree == 1:
        return True
    e, found, rest = _cyclotomic_factors(f)
    if e == 0 and len(found) == 1 and found[0][1] == 1 and rest.degree == 0:
        return True
    if not is_squarefree(f):
        return False
    verdict = irreducibility_certificate(f)
    if isinstance(verdict, CertifiedIrreducible):
        return True
    if isinstance(verdict, Factored):
        return False
    return None


def factor_target(factors: Sequence[IntPoly], table: ExceptionalTable) -> Optional[int]:
    """Number of distinct non-exceptional irreducible factors, when the factors certify it."""

    distinct = {f.primitive() for f in factors if f.degree >= 1}
    count = 0
    for f in distinct:
        if f in table:
            continue
        known = _irreducible_known(f)
        if not known:
            return None
        count += 1
    return count


def _as_product(P: Union[IntPoly, Sequence[IntPoly]]) -> Tuple[IntPoly, List[IntPoly]]:
    if isinstance(P, IntPoly):
        return P, [P]
    factors = list(P)
    if not factors:
        raise ValueError("Empty factor list")
    product = factors[0]
    for f in factors[1:]:
        product = product * f
    return product, factors


def _table_note(table: ExceptionalTable) -> str:
    return (f"exceptional table truncated: enumeration to degree {table.enumeration_cap}, "
            "cyclotomics and bundled entries above; skip list correspondingly approximate")


def moment_estimate(
    P: Union[IntPoly, Sequence[IntPoly]],
    X: float,
    m: int,
    params: AdmissibilityParams,
    table: Optional[ExceptionalTable] = None,
    prime_range: Optional[PrimeRange] = None,
    threads: int = 1,
    progress: bool = False,
    cache_dir=None,
) -> StatReport:
    """``sum_p B_P(p)^m log p h_X(log p)``, the orbit count on m-tuples of admissible roots."""

    if m < 1:
        raise ValueError(f"Moment order must be at least 1, got {m}")
    product, factors = _as_product(P)
    if product.degree < 1:
        raise ValueError("Polynomial needs degree at least 1")
    table = _table_for(params, table)
    counter = AdmissibleRootCounter(product, table)
    w = WeightSpec.h(X)

    def stat(primes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return counter.counts(primes).astype(float) ** m, counter.skipped(primes)

    estimate, count, skipped, prime_range = _collect(w, stat, LC_REASON, prime_range, threads, progress, cache_dir)
    target = factor_target(factors, table) if m == 1 else None
    notes = [_table_note(table)]
    if target is None:
        notes.append("target not determined" if m == 1 else "orbit count on m-tuples not computed")
    return StatReport(
        "factor-count" if m == 1 else "moment",
        estimate, target, w.X, prime_range.to_json(), count, w.to_json(), m,
        skipped=skipped, table_hash=table.hash, notes=tuple(notes),
        extra=(("bell", bell_number(m)), ("admissible_degree", counter.rest.degree)),
    )


def factor_count_estimate(
    P: Union[IntPoly, Sequence[IntPoly]],
    X: float,
    params: AdmissibilityParams,
    table: Optional[ExceptionalTable] = None,
    **kwargs,
) -> StatReport:
    """Weighted count of distinct admissible irreducible factors of P.

    ``P`` may be given as a list of factors; the target is then read off the
    factors instead of being left undetermined.
    """

    return moment_estimate(P, X, 1, params, table, **kwargs)


@dataclass(frozen=True)
class TransitivityVerdict:
    m: int
    bell: int
    verdict: str
    report: StatReport

    @property
    def estimate(self) -> float:
        return self.report.estimate

    @property
    def rounded(self) -> int:
        return self.report.rounded

    def to_json(self) -> Dict[str, object]:
        return {"m": self.m, "bell": self.bell, "verdict": self.verdict, "report": self.report.to_json()}


def transitivity_verdict(
    P: Union[IntPoly, Sequence[IntPoly]],
    X: float,
    m: int,
    params: AdmissibilityParams,
    table: Optional[ExceptionalTable] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    **kwargs,
) -> TransitivityVerdict:
    """Compare the m-th moment with B_m, the orbit count of an m-transitive action."""

    product, _ = _as_product(P)
    table = _table_for(params, table)
    degree = AdmissibleRootCounter(product, table).rest.degree
    if degree < m:
        raise ValueError(f"Admissible part has degree {degree} < m = {m}")
    report = moment_estimate(P, X, m, params, table, **kwargs)
    bell = bell_number(m)
    if report.estimate < bell - tolerance:
        verdict = "inconsistent-data"
        logger.warning("Moment %.4f lies below B_%d = %d", report.estimate, m, bell)
    elif report.rounded == bell:
        verdict = f"{m}-transitive (statistical)"
    else:
        verdict = f"not {m}-transitive (statistical)"
    return TransitivityVerdict(m, bell, verdict, report)


# ---------------------------------------------------------------------------
# The Z statistic over random polynomials


@dataclass(frozen=True)
class ZReport:
    values: Tuple[float, ...]
    w: float
    weight: Dict[str, object]
    m: int
    seed: int
    model: str
    degree: int
    table_hash: str

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def variance(self) -> float:
        return float(np.var(self.values, ddof=1)) if len(self.values) > 1 else 0.0

    @property
    def fraction_small(self) -> float:
        return float(np.mean(np.abs(np.asarray(self.values)) < 0.5))

    def to_json(self) -> Dict[str, object]:
        return {
            "n_samples": len(self.values),
            "mean": self.mean,
            "variance": self.variance,
            "fraction_below_half": self.fraction_small,
            "w": self.w,
            "weight": self.weight,
            "m": self.m,
            "bell": bell_number(self.m),
            "seed": self.seed,
            "model": self.model,
            "degree": self.degree,
            "table_hash": self.table_hash,
        }


def z_statistic(
    model: PolynomialModel,
    X: float,
    m: int,
    n_samples: int,
    params: AdmissibilityParams,
    seed: int,
    k: Optional[int] = None,
    table: Optional[ExceptionalTable] = None,
    threads: int = 1,
    progress: bool = False,
    cache_dir=None,
) -> ZReport:
    """``Z = sum_p B_P(p)^m log p w(log p) - B_m w_mass`` for sampled P.

    ``k`` selects ``g_{X,k}``; without it ``h_X`` is used.
    """

    if n_samples < 1:
        raise ValueError(f"Need at least one sample, got {n_samples}")
    w = WeightSpec.g(X, k) if k is not None else WeightSpec.h(X)
    table = _table_for(params, table)
    segments = []
    for primes in prime_segments(PrimeRange.for_weight(w), cache_dir=cache_dir, progress=progress):
        logs = np.log(primes.astype(float))
        weights = eval_weight(w, logs)
        keep = weights != 0
        if np.any(keep):
            segments.append((primes[keep], logs[keep] * weights[keep]))
    mass = KahanSum()
    for _, lw in segments:
        mass.add(math.fsum(lw))
    bell = bell_number(m)

    def one(index: int) -> float:
        P = sample_polynomial(model, substream(seed, index))
        counter = AdmissibleRootCounter(P, table)
        acc = KahanSum()
        for primes, lw in segments:
            acc.add(math.fsum(counter.counts(primes).astype(float) ** m * lw))
        return acc.total - bell * mass.total

    values = parallel_map(one, list(range(n_samples)), threads)
    logger.info("Z statistic over %d samples: mean %.4f", n_samples, float(np.mean(values)))
    return ZReport(tuple(values), mass.total, w.to_json(), m, seed, model.name, model.degree, table.hash)


def exceptional_zero_effect(rho: complex, X: float, k: int) -> Union[float, complex]:
    """``1 - G_{X,k}(rho)`` for a synthetic zero rho."""

    value = 1 - laplace_G(X, k, rho)
    if complex(rho).imag == 0:
        return value.real
    return value


@dataclass(frozen=True)
class RootCountMean:
    mean: float
    sigma: float
    n_primes: int

    @property
    def stderr(self) -> float:
        return self.sigma / math.sqrt(self.n_primes)


def mean_root_count(P: IntPoly, lo: int, hi: int) -> RootCountMean:
    """Unweighted mean of root counts of P over the primes in [lo, hi]."""

    counts = []
    for primes in prime_segments(PrimeRange.between(lo, hi)):
        primes = primes[~divides_mask(P.leading, primes)]
        if len(primes):
            counts.append(count_roots_batch(P.coeffs, primes))
    values = np.concatenate(counts) if counts else np.zeros(0)
    if len(values) < 2:
        raise ValueError(f"Too few primes in [{lo}, {hi}]")
    return RootCountMean(float(values.mean()), float(values.std(ddof=1)), len(values))
