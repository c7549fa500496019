"""Prime-sum kernels h_X and g_{X,k}, their Laplace transform, and a segmented sieve."""
from __future__ import annotations

import cmath
import logging
import math
import struct
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from randpoly.model import parallel_map
from randpoly.records import DERIVED_ORACLE, PAPER_QUALITATIVE, make_check

try:
    from tqdm import tqdm
except Exception:  # pragma: no cover - fallback when tqdm is missing
    def tqdm(iterable, **_):
        return iterable


logger = logging.getLogger(__name__)


# Largest X accepted by the sieve (e^22 is about 3.6e9).  A configuration
# value; callers and the CLI may raise or lower it.
DEFAULT_SIEVE_CAP = 22.0
DEFAULT_SEGMENT_SIZE = 1 << 22

# Below this |z| the factor sinh(z)/z is summed from its Taylor series.
SERIES_THRESHOLD = 1e-4
SERIES_TERMS = 8

# Prime cache files: magic, version, segment lo, segment hi, bit count.
CACHE_MAGIC = b"RPSG"
CACHE_VERSION = 1
CACHE_HEADER = struct.Struct("<4sHQQQ")

PrimeFunction = Callable[[np.ndarray], np.ndarray]


class SieveCapError(ValueError):
    """Requested prime range lies beyond the configured sieve cap."""


@dataclass(frozen=True)
class WeightSpec:
    """``h_X`` (``kind="h"``) or ``g_{X,k}`` (``kind="g"``)."""

    kind: str
    X: float
    k: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind == "h":
            if self.X <= 10:
                raise ValueError(f"h_X needs X > 10, got {self.X}")
        elif self.kind == "g":
            if self.k is None or self.k < 4:
                raise ValueError(f"g_(X,k) needs k >= 4, got {self.k}")
            if self.X < 2 * self.k:
                raise ValueError(f"g_(X,k) needs X >= 2k, got X={self.X}, k={self.k}")
        else:
            raise ValueError(f"Unknown weight kind {self.kind!r}")

    @classmethod
    def h(cls, X: float) -> "WeightSpec":
        return cls("h", float(X))

    @classmethod
    def g(cls, X: float, k: int) -> "WeightSpec":
        return cls("g", float(X), int(k))

    def support(self) -> Tuple[float, float]:
        """Interval in u = log p outside which the kernel vanishes."""

        if self.kind == "h":
            return self.X - math.log(2), self.X
        return self.X / 2, self.X

    def to_json(self) -> Dict[str, object]:
        out: Dict[str, object] = {"kind": self.kind, "X": self.X}
        if self.k is not None:
            out["k"] = self.k
        return out


def irwin_hall_density(k: int, x):
    """Density of a sum of k independent uniforms on [0, 1].

    Evaluated as the alternating binomial sum on the left half and by symmetry
    on the right half; exact when ``x`` is a ``Fraction``.
    """

    if np.ndim(x) == 0:
        if x <= 0 or x >= k:
            return 0 * x
        y = k - x if 2 * x > k else x
        total = sum(
            (-1) ** i * math.comb(k, i) * (y - i) ** (k - 1) for i in range(int(math.floor(y)) + 1)
        )
        return max(total / math.factorial(k - 1), 0 * x)
    x = np.asarray(x, dtype=float)
    y = np.minimum(x, k - x)
    total = np.zeros_like(y)
    for i in range(k):
        total += (-1) ** i * math.comb(k, i) * np.where(y > i, y - i, 0.0) ** (k - 1)
    out = total / math.factorial(k - 1)
    return np.where((x > 0) & (x < k), np.maximum(out, 0.0), 0.0)


def eval_weight(w: WeightSpec, u):
    """Kernel value at ``u`` (scalar or array)."""

    scalar = np.ndim(u) == 0
    u_arr = np.asarray(u, dtype=float)
    X = w.X
    if w.kind == "h":
        inside = (u_arr > X - math.log(2)) & (u_arr <= X)
        out = np.where(inside, 2 * math.exp(-X), 0.0)
    else:
        k = w.k
        scale = 2 * k / X
        arg = (u_arr - 0.75 * X) * scale + k / 2
        out = np.exp(-u_arr) * irwin_hall_density(k, arg) * scale
        out = np.where((u_arr >= X / 2) & (u_arr <= X), out, 0.0)
    return float(out) if scalar else out


def _sinhc(z: complex) -> complex:
    if abs(z) < SERIES_THRESHOLD:
        term = 1 + 0j
        total = 0j
        z2 = z * z
        for n in range(SERIES_TERMS):
            total += term
            term *= z2 / ((2 * n + 2) * (2 * n + 3))
        return total
    return cmath.sinh(z) / z


def laplace_G(X: float, k: int, s: complex) -> complex:
    """``G_{X,k}(s) = exp(3(s-1)X/4) (sinh z / z)^k`` with ``z = (s-1)X/(4k)``."""

    if k < 4 or X < 2 * k:
        raise ValueError(f"G_(X,k) needs k >= 4 and X >= 2k, got X={X}, k={k}")
    s = complex(s)
    z = (s - 1) * X / (4 * k)
    return cmath.exp(0.75 * (s - 1) * X) * _sinhc(z) ** k


def laplace_G_quad(X: float, k: int, s: complex) -> complex:
    """``int exp(s u) g_{X,k}(u) du`` by adaptive quadrature over the k pieces."""

    w = WeightSpec.g(X, k)
    s = complex(s)
    knots = [X / 2 + j * X / (2 * k) for j in range(k + 1)]
    real = imag = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        re_part, _ = integrate.quad(
            lambda u: (cmath.exp(s * u) * eval_weight(w, u)).real, a, b,
            epsabs=1e-14, epsrel=1e-12, limit=200,
        )
        im_part, _ = integrate.quad(
            lambda u: (cmath.exp(s * u) * eval_weight(w, u)).imag, a, b,
            epsabs=1e-14, epsrel=1e-12, limit=200,
        )
        real += re_part
        imag += im_part
    return complex(real, imag)


# ---------------------------------------------------------------------------
# Segmented sieve


@dataclass(frozen=True)
class PrimeRange:
    lo: int
    hi: int
    X: Optional[float] = None
    segment_size: int = DEFAULT_SEGMENT_SIZE
    cap: float = DEFAULT_SIEVE_CAP

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"Empty prime range [{self.lo}, {self.hi}]")
        if self.segment_size < 1024:
            raise ValueError("Segment size must be at least 1024")
        limit = self.X if self.X is not None else math.log(max(self.hi, 2))
        if limit > self.cap:
            raise SieveCapError(
                f"Prime range up to e^{limit:.3f} exceeds the sieve cap e^{self.cap}"
            )

    @classmethod
    def for_X(cls, X: float, **kwargs) -> "PrimeRange":
        """Primes in [ceil(e^(X/2)), floor(e^X)]."""

        return cls(math.ceil(math.exp(X / 2)), math.floor(math.exp(X)), X=X, **kwargs)

    @classmethod
    def between(cls, lo: int, hi: int, **kwargs) -> "PrimeRange":
        return cls(int(lo), int(hi), **kwargs)

    @classmethod
    def for_weight(cls, w: WeightSpec, **kwargs) -> "PrimeRange":
        if w.kind == "h":
            return cls(math.floor(math.exp(w.X) / 2) + 1, math.floor(math.exp(w.X)), X=w.X, **kwargs)
        return cls.for_X(w.X, **kwargs)

    def segments(self) -> List[Tuple[int, int]]:
        bounds = []
        lo = max(self.lo, 2)
        while lo <= self.hi:
            hi = min(lo + self.segment_size - 1, self.hi)
            bounds.append((lo, hi))
            lo = hi + 1
        return bounds

    def to_json(self) -> Dict[str, object]:
        return {"lo": self.lo, "hi": self.hi, "X": self.X}


def simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit."""

    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, int(math.isqrt(limit)) + 1):
        if mask[p]:
            mask[p * p::p] = False
    return np.flatnonzero(mask).astype(np.int64)


def _sieve_segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    mask = np.ones(hi - lo + 1, dtype=bool)
    for p in base:
        p = int(p)
        if p * p > hi:
            break
        start = max(p * p, -(-lo // p) * p)
        mask[start - lo::p] = False
    if lo < 2:
        mask[: 2 - lo] = False
    return mask


def _cache_file(cache_dir: Path, lo: int, hi: int) -> Path:
    return cache_dir / f"primes_{lo}_{hi}.bin"


def _load_cached(path: Path, lo: int, hi: int) -> Optional[np.ndarray]:
    try:
        raw = path.read_bytes()
        magic, version, c_lo, c_hi, nbits = CACHE_HEADER.unpack_from(raw)
    except (OSError, struct.error):
        return None
    if magic != CACHE_MAGIC or version != CACHE_VERSION or (c_lo, c_hi) != (lo, hi):
        logger.debug("Ignoring stale prime cache %s", path)
        return None
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8, offset=CACHE_HEADER.size))
    return bits[:nbits].astype(bool)


def _store_cached(path: Path, lo: int, hi: int, mask: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, lo, hi, len(mask))
    path.write_bytes(header + np.packbits(mask).tobytes())


def prime_segments(
    prime_range: PrimeRange,
    cache_dir: Optional[Union[str, Path]] = None,
    progress: bool = False,
) -> Iterator[np.ndarray]:
    """Ascending int64 arrays of the primes in each segment of the range."""

    base = simple_sieve(int(math.isqrt(prime_range.hi)) + 1)
    cache = Path(cache_dir) if cache_dir is not None else None
    segments = prime_range.segments()
    bar = tqdm(
        segments,
        desc="Sieving",
        unit="seg",
        disable=not progress or not sys.stdout.isatty(),
    )
    for lo, hi in bar:
        mask = None
        if cache is not None:
            mask = _load_cached(_cache_file(cache, lo, hi), lo, hi)
        if mask is None:
            mask = _sieve_segment(lo, hi, base)
            if cache is not None:
                _store_cached(_cache_file(cache, lo, hi), lo, hi, mask)
        logger.debug("Segment [%d, %d] sieved", lo, hi)
        yield np.flatnonzero(mask).astype(np.int64) + lo


def prime_stream(prime_range: PrimeRange, **kwargs) -> Iterator[int]:
    """Every prime of the range exactly once, ascending."""

    for segment in prime_segments(prime_range, **kwargs):
        for p in segment:
            yield int(p)


class KahanSum:
    """Compensated accumulator for per-segment partial sums."""

    def __init__(self) -> None:
        self.total = 0.0
        self._c = 0.0

    def add(self, value: float) -> None:
        y = value - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def per_prime(func: Callable[[int], float]) -> PrimeFunction:
    """Lift a scalar per-prime function to the array form used by the sums."""

    def lifted(primes: np.ndarray) -> np.ndarray:
        return np.array([func(int(p)) for p in primes], dtype=float)

    return lifted


def _segment_partial(w: WeightSpec, f: PrimeFunction, primes: np.ndarray) -> float:
    if len(primes) == 0:
        return 0.0
    logs = np.log(primes.astype(float))
    weights = eval_weight(w, logs)
    keep = weights != 0
    if not np.any(keep):
        return 0.0
    values = np.asarray(f(primes[keep]), dtype=float)
    return math.fsum(values * logs[keep] * weights[keep])


def weighted_prime_sum(
    w: WeightSpec,
    f: PrimeFunction,
    prime_range: Optional[PrimeRange] = None,
    threads: int = 1,
    progress: bool = False,
    cache_dir: Optional[Union[str, Path]] = None,
) -> float:
    """``sum_p f(p) log p w(log p)`` merged in ascending segment order.

    ``f`` receives an int64 array of primes and returns one value per prime.
    """

    prime_range = prime_range or PrimeRange.for_weight(w)
    acc = KahanSum()
    segments = prime_segments(prime_range, cache_dir=cache_dir, progress=progress)
    if threads > 1:
        partials = parallel_map(lambda seg: _segment_partial(w, f, seg), list(segments), threads)
    else:
        partials = (_segment_partial(w, f, seg) for seg in segments)
    for part in partials:
        acc.add(part)
    return acc.total


def w_mass(w: WeightSpec, prime_range: Optional[PrimeRange] = None, **kwargs) -> float:
    """``sum_p log p w(log p)``."""

    return weighted_prime_sum(w, lambda primes: np.ones(len(primes)), prime_range, **kwargs)


# ---------------------------------------------------------------------------
# Property checks of the g_{X,k} family


def weight_property_report(
    X: float, k: int, n_points: int = 1000, seed: int = 0, slack: float = 1e-12
) -> List[Dict[str, object]]:
    """Support, domination, normalisation and the four G inequalities on grids."""

    w = WeightSpec.g(X, k)
    rng = np.random.default_rng(seed)
    checks: List[Dict[str, object]] = []

    grid = np.linspace(X / 2 - 2.0, X + 2.0, 10 * n_points)
    values = eval_weight(w, grid)
    outside = (grid < X / 2) | (grid > X)
    checks.append(make_check("support", float(np.max(values[outside], initial=0.0)), 0.0,
                             not np.any(values[outside] != 0), PAPER_QUALITATIVE))
    excess = float(np.max(values * np.exp(grid)))
    checks.append(make_check("domination", excess, 1.0, excess <= 1.0 + slack, PAPER_QUALITATIVE))

    g1 = laplace_G(X, k, 1.0)
    checks.append(make_check("G(1)", abs(g1 - 1), 0.0, g1 == 1, PAPER_QUALITATIVE))
    quad1 = laplace_G_quad(X, k, 1.0)
    checks.append(make_check("normalisation-quadrature", abs(quad1 - 1), 1e-8,
                             abs(quad1 - 1) <= 1e-8, DERIVED_ORACLE))

    sigma = rng.uniform(0.0, 1.0, n_points)
    one_minus = np.array([1 - laplace_G(X, k, s).real for s in sigma])
    ok = np.all(one_minus >= -slack) and np.all(one_minus <= X * (1 - sigma) + slack)
    checks.append(make_check("one-minus-G", float(np.max(one_minus - X * (1 - sigma))), 0.0, ok,
                             PAPER_QUALITATIVE))

    re = rng.uniform(-3.0, 1.0, n_points)
    im = rng.uniform(-20.0, 20.0, n_points)
    s_vals = re + 1j * im
    mags = np.array([abs(laplace_G(X, k, s)) for s in s_vals])
    decay = (4 * k / (np.abs(1 - s_vals) * X)) ** k
    checks.append(make_check("decay-bound", float(np.max(mags - decay)), 0.0,
                             bool(np.all(mags <= decay + slack)), PAPER_QUALITATIVE))
    shift = np.exp((re - 1) * X / 2)
    checks.append(make_check("shift-bound", float(np.max(mags - shift)), 0.0,
                             bool(np.all(mags <= shift + slack)), PAPER_QUALITATIVE))

    X2 = rng.uniform(2 * k, X, n_points)
    X1 = X2 + rng.uniform(0.0, X, n_points)
    ratios = np.array([
        laplace_G(a, k, s).real / laplace_G(b, k, s).real for a, b, s in zip(X1, X2, sigma)
    ])
    ratio_bound = np.exp(-(1 - sigma) * (X1 - X2) / 4)
    checks.append(make_check("ratio-bound", float(np.max(ratios - ratio_bound)), 0.0,
                             bool(np.all(ratios <= ratio_bound + slack)), PAPER_QUALITATIVE))

    samples = [
        (rng.uniform(-1.0, 1.0) + 1j * rng.uniform(-3.0, 3.0)) for _ in range(20)
    ]
    gap = max(abs(laplace_G(X, k, s) - laplace_G_quad(X, k, s)) for s in samples)
    checks.append(make_check("quadrature-cross-check", gap, 1e-8, gap <= 1e-8, DERIVED_ORACLE))
    return checks
