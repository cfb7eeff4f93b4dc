"""
Finite sums of product measures s-factor (x) t-factor on [0, M1] x [0, M2].
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Any, Tuple, Sequence

from measures import BaseMeasure, NonIntegrable
from measures.measure_1d import (
    Measure1D, moment, integrate_power, divide_by_t, restrict_off_zero, linear_combine
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProductTerm:
    weight: float
    s: Measure1D
    t: Measure1D

    def to_dict(self) -> Dict[str, Any]:
        return {"weight": self.weight, "s": self.s.to_dict(), "t": self.t.to_dict()}


@dataclass(frozen=True)
class Measure2D(BaseMeasure):
    terms: Tuple[ProductTerm, ...] = ()
    signed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.signed:
            for term in self.terms:
                if term.weight < 0.0 or term.s.signed or term.t.signed:
                    raise ValueError("positive 2D measure built from a signed term")

    def moment(self, k1: int, k2: int) -> float:
        return moment2d(self, k1, k2)

    def total_mass(self) -> float:
        return moment2d(self, 0, 0)

    def to_dict(self) -> Dict[str, Any]:
        return {"terms": [term.to_dict() for term in self.terms]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Measure2D":
        terms = tuple(
            ProductTerm(float(term.get("weight", 1.0)),
                        Measure1D.from_dict(term["s"]), Measure1D.from_dict(term["t"]))
            for term in data.get("terms", [])
        )
        signed = any(t.weight < 0.0 or t.s.signed or t.t.signed for t in terms)
        return cls(terms=terms, signed=signed)


def product(s: Measure1D, t: Measure1D, weight: float = 1.0) -> Measure2D:
    return Measure2D(terms=(ProductTerm(weight, s, t),),
                     signed=weight < 0.0 or s.signed or t.signed)


def combine2d(coeffs: Sequence[float], measures: Sequence[Measure2D]) -> Measure2D:
    """Sum of coeffs[i] * measures[i], term lists concatenated"""
    terms = tuple(ProductTerm(c * term.weight, term.s, term.t)
                  for c, mu in zip(coeffs, measures) if c != 0.0 for term in mu.terms)
    signed = any(c < 0.0 for c in coeffs) or any(mu.signed for mu in measures)
    return Measure2D(terms=terms, signed=signed)


def moment2d(mu: Measure2D, k1: int, k2: int) -> float:
    if k1 < 0 or k2 < 0:
        raise ValueError(f"moment indices must be non-negative, got ({k1}, {k2})")
    return sum(term.weight * moment(term.s, k1) * moment(term.t, k2) for term in mu.terms)


def marginal_X(mu: Measure2D) -> Measure1D:
    """Pushforward onto the first coordinate"""
    if not mu.terms:
        return Measure1D()
    return linear_combine([term.weight * term.t.total_mass() for term in mu.terms],
                          [term.s for term in mu.terms])


def marginal_Y(mu: Measure2D) -> Measure1D:
    if not mu.terms:
        return Measure1D()
    return linear_combine([term.weight * term.s.total_mass() for term in mu.terms],
                          [term.t for term in mu.terms])


def inverse_t_norm(mu: Measure2D, off_zero: bool = True) -> float:
    """
    The integral of 1/t against mu.

    With off_zero the slice t = 0 is removed first, which is the norm used by
    the extremal measure; otherwise an atom at t = 0 makes the result infinite.
    """
    total = 0.0
    for term in mu.terms:
        t_factor = restrict_off_zero(term.t) if off_zero else term.t
        value = integrate_power(t_factor, -1.0)
        if math.isinf(value):
            return value
        total += term.weight * term.s.total_mass() * value
    return total


def extremal(mu: Measure2D) -> Tuple[Measure2D, float]:
    """
    The probability measure (1 - delta_0(t)) / (t * ||1/t||) dmu(s, t).

    Returns:
        (extremal measure, the norm ||1/t|| it was normalized by)
    """
    norm = inverse_t_norm(mu, off_zero=True)
    if not math.isfinite(norm) or norm <= 0.0:
        raise NonIntegrable(f"no finite positive 1/t mass off t = 0 (norm {norm!r})")
    terms = []
    for term in mu.terms:
        t_off = restrict_off_zero(term.t)
        if t_off.is_zero():
            continue
        terms.append(ProductTerm(term.weight / norm, term.s, divide_by_t(t_off)))
    logger.debug("extremal measure normalized by %.12g", norm)
    return Measure2D(terms=tuple(terms), signed=mu.signed), norm
