"""
One-variable finite measures on [0, M]: a finite atomic part plus density
pieces that are finite sums of power terms c*t^p. The family is closed under
tilting by t^n, division by t and pushforward under t -> t^m, so every
operation below is computed in closed form.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Any, List, Tuple, Sequence, Optional

import numpy as np

from config import TOLERANCE_SETTINGS, QUADRATURE_SETTINGS, resolve_tolerance
from measures import BaseMeasure, Verdict, NonIntegrable, GammaMismatch

logger = logging.getLogger(__name__)

_EXPONENT_DIGITS = 12


@dataclass(frozen=True)
class PowerTerm:
    coefficient: float
    exponent: float

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        return self.coefficient * np.power(t, self.exponent)

    def integral(self, lo: float, hi: float, r: float = 0.0) -> float:
        """Closed-form integral of t^r * c*t^p over [lo, hi]"""
        if self.coefficient == 0.0:
            return 0.0
        q = self.exponent + r
        if abs(q + 1.0) < 1e-14:
            if lo <= 0.0:
                raise NonIntegrable(f"t^{q:g} is not integrable at 0")
            return self.coefficient * (math.log(hi) - math.log(lo))
        if lo <= 0.0 and q + 1.0 < 0.0:
            raise NonIntegrable(f"t^{q:g} is not integrable at 0")
        upper = hi ** (q + 1.0)
        lower = 0.0 if lo <= 0.0 else lo ** (q + 1.0)
        return self.coefficient * (upper - lower) / (q + 1.0)


@dataclass(frozen=True)
class DensityPiece:
    lo: float
    hi: float
    terms: Tuple[PowerTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not (0.0 <= self.lo < self.hi):
            raise ValueError(f"invalid density interval [{self.lo}, {self.hi}]")
        if self.lo == 0.0:
            for term in self.terms:
                if term.coefficient != 0.0 and term.exponent <= -1.0:
                    raise NonIntegrable(
                        f"density term t^{term.exponent:g} is not integrable on [0, {self.hi}]")

    def integrate_power(self, r: float) -> float:
        return sum(term.integral(self.lo, self.hi, r) for term in self.terms)

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        values = np.zeros_like(t)
        for term in self.terms:
            values = values + term.evaluate(t)
        return values

    def limit_at_zero(self) -> float:
        """Value of the density as t -> 0+ (may be +/- inf)"""
        grouped = _group_terms(self.terms)
        for exponent, coefficient in grouped:
            if exponent < 0.0:
                return math.copysign(math.inf, coefficient)
        return sum(c for p, c in grouped if p == 0.0)

    def sample(self, num_points: int) -> Tuple[np.ndarray, np.ndarray]:
        """Chebyshev points in (lo, hi) plus both endpoints, with density values"""
        j = np.arange(num_points)
        nodes = np.cos((2 * j + 1) * np.pi / (2 * num_points))
        mid, half = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
        interior = np.sort(mid + half * nodes)
        locations = np.concatenate(([self.lo], interior, [self.hi]))
        values = np.empty_like(locations)
        values[1:] = self.evaluate(locations[1:])
        values[0] = self.limit_at_zero() if self.lo == 0.0 else float(self.evaluate(np.array([self.lo]))[0])
        return locations, values

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "terms": [[term.coefficient, term.exponent] for term in self.terms]
        }


@dataclass(frozen=True)
class Measure1D(BaseMeasure):
    """Atoms (location, mass) sorted by location plus density pieces"""
    atoms: Tuple[Tuple[float, float], ...] = ()
    pieces: Tuple[DensityPiece, ...] = ()
    signed: bool = False

    def __post_init__(self):
        atoms = tuple((float(loc), float(mass)) for loc, mass in self.atoms)
        pieces = tuple(sorted(self.pieces, key=lambda piece: piece.lo))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "pieces", pieces)

        for index, (loc, mass) in enumerate(atoms):
            if loc < 0.0:
                raise ValueError(f"atom location {loc} is negative")
            if index and loc <= atoms[index - 1][0]:
                raise ValueError("atom locations must be strictly increasing")
            if not self.signed and mass < 0.0:
                raise ValueError(f"negative mass {mass} in a positive measure")
        for left, right in zip(pieces, pieces[1:]):
            if right.lo < left.hi:
                raise ValueError("density pieces must have disjoint interiors")

    # convenience wrappers around the module-level calculus
    def moment(self, k: int) -> float:
        return moment(self, k)

    def integrate_power(self, r: float) -> float:
        return integrate_power(self, r)

    def total_mass(self) -> float:
        return integrate_power(self, 0.0)

    def is_zero(self) -> bool:
        return not self.atoms and not self.pieces

    def atom_mass(self, loc: float, tol: Optional[float] = None) -> float:
        """Mass of the atom at `loc` (0 when there is none)"""
        tol = TOLERANCE_SETTINGS["atom_merge"] if tol is None else tol
        return sum(mass for x, mass in self.atoms if abs(x - loc) <= tol)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "atoms": [[loc, mass] for loc, mass in self.atoms],
            "pieces": [piece.to_dict() for piece in self.pieces]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Measure1D":
        atoms = [(float(loc), float(mass)) for loc, mass in data.get("atoms", [])]
        pieces = [
            DensityPiece(float(p["lo"]), float(p["hi"]),
                         tuple(PowerTerm(float(c), float(e)) for c, e in p["terms"]))
            for p in data.get("pieces", [])
        ]
        signed = any(mass < 0.0 for _, mass in atoms) or any(
            term.coefficient < 0.0 for piece in pieces for term in piece.terms)
        return _normalized(atoms, pieces, signed)

    def __repr__(self) -> str:
        parts = [f"{mass:.6g}*d[{loc:.6g}]" for loc, mass in self.atoms]
        for piece in self.pieces:
            density = " + ".join(f"{t.coefficient:.6g}*t^{t.exponent:.6g}" for t in piece.terms)
            parts.append(f"({density})dt on [{piece.lo:.6g}, {piece.hi:.6g}]")
        return "Measure1D(" + (" + ".join(parts) if parts else "0") + ")"


def dirac(loc: float, mass: float = 1.0) -> Measure1D:
    return Measure1D(atoms=((loc, mass),), signed=mass < 0.0)


def lebesgue(lo: float = 0.0, hi: float = 1.0, density: float = 1.0) -> Measure1D:
    return Measure1D(pieces=(DensityPiece(lo, hi, (PowerTerm(density, 0.0),)),), signed=density < 0.0)


def atomic(atoms: Sequence[Tuple[float, float]]) -> Measure1D:
    """Atomic measure from unsorted (location, mass) pairs"""
    signed = any(mass < 0.0 for _, mass in atoms)
    return _normalized(list(atoms), [], signed)


def zero_measure() -> Measure1D:
    return Measure1D()


def integrate_power(mu: Measure1D, r: float) -> float:
    """
    Integral of t^r against mu.

    Returns +inf (or -inf for a negative mass) when r < 0 and mu has an atom
    at 0; raises NonIntegrable when a density piece makes t^r non-integrable.
    """
    total = 0.0
    for loc, mass in mu.atoms:
        if loc <= 0.0:
            if r < 0.0:
                if mass != 0.0:
                    return math.copysign(math.inf, mass)
                continue
            total += mass if r == 0.0 else 0.0
        else:
            total += mass * loc ** r
    for piece in mu.pieces:
        total += piece.integrate_power(r)
    return total


def moment(mu: Measure1D, k: int) -> float:
    if k < 0:
        raise ValueError(f"moment order must be non-negative, got {k}")
    return integrate_power(mu, float(k))


def pushforward_power(mu: Measure1D, m: int) -> Measure1D:
    """Image of mu under t -> t^m, so that moment(result, k) = moment(mu, m*k)"""
    if m < 1:
        raise ValueError(f"power must be >= 1, got {m}")
    if m == 1:
        return mu
    atoms = [(loc ** m, mass) for loc, mass in mu.atoms]
    pieces = [
        DensityPiece(piece.lo ** m, piece.hi ** m,
                     tuple(PowerTerm(t.coefficient / m, (t.exponent + 1.0) / m - 1.0) for t in piece.terms))
        for piece in mu.pieces
    ]
    return _normalized(atoms, pieces, mu.signed)


def multiply_by_power(mu: Measure1D, n: float) -> Measure1D:
    """The un-normalized measure t^n dmu(t)"""
    if n == 0:
        return mu
    if n < 0.0 and any(loc <= 0.0 and mass != 0.0 for loc, mass in mu.atoms):
        raise NonIntegrable("measure charges {0}; t^n is not integrable for n < 0")
    atoms = [(loc, mass * loc ** n) for loc, mass in mu.atoms if loc > 0.0]
    pieces = [
        DensityPiece(piece.lo, piece.hi,
                     tuple(PowerTerm(t.coefficient, t.exponent + n) for t in piece.terms))
        for piece in mu.pieces
    ]
    return _normalized(atoms, pieces, mu.signed)


def tilt(mu: Measure1D, n: int, gamma_n: float, tol: Optional[float] = None) -> Measure1D:
    """The measure (t^n / gamma_n) dmu(t); gamma_n must equal moment(mu, n)"""
    tol = TOLERANCE_SETTINGS["moment"] if tol is None else tol
    actual = moment(mu, n)
    if abs(actual - gamma_n) > tol * max(1.0, abs(gamma_n)):
        raise GammaMismatch(f"moment {n} is {actual!r}, caller supplied {gamma_n!r}")
    if gamma_n <= 0.0:
        raise GammaMismatch(f"moment {n} must be positive to normalize, got {gamma_n!r}")
    return scale(multiply_by_power(mu, n), 1.0 / gamma_n)


def divide_by_t(mu: Measure1D) -> Measure1D:
    """The measure (1/t) dmu(t); mu must not charge {0}"""
    for loc, mass in mu.atoms:
        if loc <= 0.0 and mass != 0.0:
            raise NonIntegrable("measure charges {0}; 1/t is not integrable")
    return multiply_by_power(mu, -1.0)


def restrict_off_zero(mu: Measure1D) -> Measure1D:
    """Drop the atom at 0 (the factor 1 - delta_0)"""
    atoms = tuple((loc, mass) for loc, mass in mu.atoms if loc > 0.0)
    return Measure1D(atoms=atoms, pieces=mu.pieces, signed=mu.signed)


def scale(mu: Measure1D, factor: float) -> Measure1D:
    return linear_combine([factor], [mu])


def linear_combine(coeffs: Sequence[float], measures: Sequence[Measure1D]) -> Measure1D:
    """
    Sum of coeffs[i] * measures[i].

    Atoms within the merge tolerance are combined and density pieces are
    refined to common intervals. The result is flagged signed unless every
    coefficient is non-negative and every input is positive.
    """
    if len(coeffs) != len(measures):
        raise ValueError("coeffs and measures must have the same length")
    atoms = [(loc, c * mass) for c, mu in zip(coeffs, measures) for loc, mass in mu.atoms]
    pieces = [
        DensityPiece(piece.lo, piece.hi,
                     tuple(PowerTerm(c * t.coefficient, t.exponent) for t in piece.terms))
        for c, mu in zip(coeffs, measures) if c != 0.0 for piece in mu.pieces
    ]
    signed = any(c < 0.0 for c in coeffs) or any(mu.signed for mu in measures)
    return _normalized(atoms, pieces, signed, refine=True)


def is_nonnegative(mu: Measure1D, tol: Optional[float] = None) -> Verdict:
    """
    Positivity of a (signed) measure.

    Every atom mass and every density sample (Chebyshev grid plus endpoints)
    must be >= -tol. The verdict carries the most negative (location, value).
    """
    tol = resolve_tolerance(tol)
    worst_value, worst_loc, worst_kind = math.inf, None, ""
    for loc, mass in mu.atoms:
        if mass < worst_value:
            worst_value, worst_loc, worst_kind = mass, loc, "atom"
    num_points = QUADRATURE_SETTINGS["chebyshev_points"]
    for piece in mu.pieces:
        locations, values = piece.sample(num_points)
        index = int(np.argmin(values))
        if values[index] < worst_value:
            worst_value, worst_loc, worst_kind = float(values[index]), float(locations[index]), "density"

    if worst_loc is None:
        return Verdict(passed=True, margin=0.0, witness=None, reason="zero measure")
    passed = worst_value >= -tol
    reason = "" if passed else f"negative {worst_kind} at t={worst_loc:.12g}"
    return Verdict(passed=passed, margin=worst_value, witness=(worst_loc, worst_value), reason=reason)


def as_positive(mu: Measure1D, tol: Optional[float] = None) -> Measure1D:
    """Re-flag a signed measure that passed is_nonnegative; atoms at or below 0 are dropped"""
    if not mu.signed:
        return mu
    verdict = is_nonnegative(mu, tol)
    if not verdict.passed:
        raise ValueError(f"measure is not positive: {verdict.reason}")
    atoms = tuple((loc, mass) for loc, mass in mu.atoms if mass > 0.0)
    return Measure1D(atoms=atoms, pieces=mu.pieces, signed=False)


def measure_leq(mu: Measure1D, nu: Measure1D, tol: Optional[float] = None) -> Verdict:
    """mu <= nu set-wise, decided as positivity of nu - mu"""
    return is_nonnegative(linear_combine([1.0, -1.0], [nu, mu]), tol)


def _group_terms(terms: Sequence[PowerTerm]) -> List[Tuple[float, float]]:
    """Sum coefficients of equal exponents; drop vanishing ones; sort by exponent"""
    grouped: Dict[float, float] = {}
    for term in terms:
        key = round(term.exponent, _EXPONENT_DIGITS)
        grouped[key] = grouped.get(key, 0.0) + term.coefficient
    zero = TOLERANCE_SETTINGS["zero_mass"]
    return sorted((p, c) for p, c in grouped.items() if abs(c) > zero)


def _merge_atoms(atoms: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    merge_tol = TOLERANCE_SETTINGS["atom_merge"]
    zero = TOLERANCE_SETTINGS["zero_mass"]
    merged: List[List[float]] = []
    for loc, mass in sorted(atoms):
        if merged and loc - merged[-1][0] <= merge_tol:
            merged[-1][1] += mass
        else:
            merged.append([loc, mass])
    return [(loc, mass) for loc, mass in merged if abs(mass) > zero]


def _refine_pieces(pieces: Sequence[DensityPiece]) -> List[DensityPiece]:
    """Split overlapping pieces on common breakpoints and add their terms"""
    if not pieces:
        return []
    merge_tol = TOLERANCE_SETTINGS["atom_merge"]
    breakpoints: List[float] = []
    for value in sorted({b for piece in pieces for b in (piece.lo, piece.hi)}):
        if not breakpoints or value - breakpoints[-1] > merge_tol:
            breakpoints.append(value)

    refined: List[DensityPiece] = []
    for lo, hi in zip(breakpoints, breakpoints[1:]):
        covering = [t for piece in pieces
                    if piece.lo <= lo + merge_tol and piece.hi >= hi - merge_tol
                    for t in piece.terms]
        grouped = _group_terms(covering)
        if not grouped:
            continue
        terms = tuple(PowerTerm(c, p) for p, c in grouped)
        if refined and refined[-1].hi == lo and refined[-1].terms == terms:
            refined[-1] = DensityPiece(refined[-1].lo, hi, terms)
        else:
            refined.append(DensityPiece(lo, hi, terms))
    return refined


def _normalized(atoms: Sequence[Tuple[float, float]], pieces: Sequence[DensityPiece],
                signed: bool, refine: bool = False) -> Measure1D:
    merged = _merge_atoms(atoms)
    if refine or len(pieces) > 1:
        pieces = _refine_pieces(pieces)
    else:
        pieces = [DensityPiece(p.lo, p.hi, tuple(PowerTerm(c, e) for e, c in _group_terms(p.terms)))
                  for p in pieces if _group_terms(p.terms)]
    if not signed:
        # rounding can leave -0.0 style residues on positive inputs
        merged = [(loc, max(mass, 0.0)) for loc, mass in merged]
    return Measure1D(atoms=tuple(merged), pieces=tuple(pieces), signed=signed)
