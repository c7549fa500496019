"""Random polynomial models: coefficient laws, presets and seeded samplers."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from randpoly.intpoly import IntPoly

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

PRESETS = ("zero_one_monic", "uniform_interval", "rademacher", "custom")


def _fraction(value: Union[int, str, float, Fraction]) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class CoefficientLaw:
    """Finite law on the integers with exact rational probabilities."""

    support: Tuple[int, ...]
    probabilities: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probabilities) or not self.support:
            raise ValueError("Law needs a nonempty support matching its probabilities")
        pairs = sorted(zip((int(a) for a in self.support), (_fraction(q) for q in self.probabilities)))
        support = tuple(a for a, _ in pairs)
        probs = tuple(q for _, q in pairs)
        if len(set(support)) != len(support):
            raise ValueError(f"Support entries must be distinct: {support}")
        if any(q <= 0 for q in probs):
            raise ValueError("Probabilities must be positive")
        if sum(probs) != 1:
            raise ValueError(f"Probabilities sum to {sum(probs)}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def uniform(cls, values: Iterable[int]) -> "CoefficientLaw":
        values = sorted(set(int(v) for v in values))
        return cls(tuple(values), tuple(Fraction(1, len(values)) for _ in values))

    @classmethod
    def point_mass(cls, value: int) -> "CoefficientLaw":
        return cls((int(value),), (Fraction(1),))

    @classmethod
    def from_pmf(cls, pmf: Mapping) -> "CoefficientLaw":
        try:
            items = [(int(k), _fraction(v)) for k, v in pmf.items()]
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"Malformed pmf: {pmf!r}") from exc
        return cls(tuple(k for k, _ in items), tuple(v for _, v in items))

    @property
    def max_abs(self) -> int:
        return max(abs(a) for a in self.support)

    def float_probabilities(self) -> np.ndarray:
        return np.array([float(q) for q in self.probabilities])

    def integer_weights(self) -> Tuple[Tuple[int, ...], int]:
        """Probabilities as integer counts over their least common denominator."""

        den = 1
        for q in self.probabilities:
            den = den * q.denominator // math.gcd(den, q.denominator)
        return tuple(int(q * den) for q in self.probabilities), den

    def to_json(self) -> Dict[str, str]:
        return {str(a): str(q) for a, q in zip(self.support, self.probabilities)}


def collision_norm(mu: CoefficientLaw) -> Fraction:
    return sum((q * q for q in mu.probabilities), Fraction(0))


def sup_norm(mu: CoefficientLaw) -> Fraction:
    return max(mu.probabilities)


def law_fourier(mu: CoefficientLaw, t):
    """``sum_a mu(a) exp(2 pi i a t)`` for scalar or array ``t``."""

    t_arr = np.asarray(t, dtype=float)
    out = np.zeros(t_arr.shape, dtype=complex)
    for a, q in zip(mu.support, mu.probabilities):
        out += float(q) * np.exp(2j * np.pi * a * t_arr)
    if np.ndim(t) == 0:
        return complex(out)
    return out


@dataclass(frozen=True)
class PolynomialModel:
    """``A_d x^d + ... + A_0`` with independent coefficients."""

    degree: int
    law_constant: CoefficientLaw
    law_middle: CoefficientLaw
    law_leading: CoefficientLaw
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.degree < 2:
            raise ValueError(f"Model degree must be at least 2, got {self.degree}")

    @property
    def bound(self) -> int:
        return max(self.law_constant.max_abs, self.law_middle.max_abs, self.law_leading.max_abs)

    def law_at(self, n: int, length: Optional[int] = None) -> CoefficientLaw:
        """Law of the coefficient of x^n when the polynomial has degree ``length``."""

        d = self.degree if length is None else length
        if n == 0:
            return self.law_constant
        if n == d:
            return self.law_leading
        return self.law_middle

    def to_json(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "degree": self.degree,
            "constant": self.law_constant.to_json(),
            "middle": self.law_middle.to_json(),
            "leading": self.law_leading.to_json(),
        }


def zero_one_monic(d: int) -> PolynomialModel:
    one = CoefficientLaw.point_mass(1)
    return PolynomialModel(d, one, CoefficientLaw.uniform((0, 1)), one, "zero_one_monic")


def uniform_interval(d: int, L: int) -> PolynomialModel:
    """Monic, other coefficients uniform on {1, ..., L}."""

    if L < 1:
        raise ValueError(f"Interval length must be positive, got {L}")
    mu = CoefficientLaw.uniform(range(1, L + 1))
    return PolynomialModel(d, mu, mu, CoefficientLaw.point_mass(1), f"uniform_interval({L})")


def rademacher(d: int) -> PolynomialModel:
    mu = CoefficientLaw.uniform((-1, 1))
    return PolynomialModel(d, mu, mu, mu, "rademacher")


def iid(d: int, mu: CoefficientLaw, name: str = "iid") -> PolynomialModel:
    return PolynomialModel(d, mu, mu, mu, name)


def custom(d: int, pmf_json: Union[str, Mapping]) -> PolynomialModel:
    """A single pmf for every coefficient, or ``constant``/``middle``/``leading`` pmfs."""

    try:
        data = json.loads(pmf_json) if isinstance(pmf_json, str) else dict(pmf_json)
    except json.JSONDecodeError as exc:
        raise ValueError(f"Malformed pmf JSON: {pmf_json!r}") from exc
    if {"constant", "middle", "leading"} <= set(data):
        laws = [CoefficientLaw.from_pmf(data[key]) for key in ("constant", "middle", "leading")]
        return PolynomialModel(d, *laws, name="custom")
    return iid(d, CoefficientLaw.from_pmf(data), "custom")


def model_from_name(name: str, d: int, L: Optional[int] = None, pmf: Optional[str] = None) -> PolynomialModel:
    if name == "zero_one_monic":
        return zero_one_monic(d)
    if name == "rademacher":
        return rademacher(d)
    if name == "uniform_interval":
        if L is None:
            raise ValueError("uniform_interval needs L")
        return uniform_interval(d, L)
    if name == "custom":
        if pmf is None:
            raise ValueError("custom model needs a JSON pmf")
        return custom(d, pmf)
    raise ValueError(f"Unknown model {name!r}; choose from {', '.join(PRESETS)}")


# ---------------------------------------------------------------------------
# Sampling


def substream(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for sample ``index`` of a run seeded with ``seed``."""

    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def sample_law(mu: CoefficientLaw, rng: np.random.Generator, size) -> np.ndarray:
    return rng.choice(np.array(mu.support, dtype=np.int64), size=size, p=mu.float_probabilities())


def sample_coefficients(model: PolynomialModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """``(n, d + 1)`` array of coefficients, least-degree-first."""

    d = model.degree
    out = np.empty((n, d + 1), dtype=np.int64)
    out[:, 0] = sample_law(model.law_constant, rng, n)
    if d > 1:
        out[:, 1:d] = sample_law(model.law_middle, rng, (n, d - 1))
    out[:, d] = sample_law(model.law_leading, rng, n)
    return out


def sample_polynomial(model: PolynomialModel, rng: np.random.Generator) -> IntPoly:
    return IntPoly(tuple(int(c) for c in sample_coefficients(model, rng, 1)[0]))


def parallel_map(func: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Map preserving input order; threads only change the schedule."""

    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
