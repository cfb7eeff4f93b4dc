"""
Unilateral weighted shifts: weights, moments and Berger measures, restrictions,
powers, backward extensions, the Stampfli completion and Hankel certificates.
"""
import logging
import math
from typing import Dict, Any, List, Optional, Sequence, Tuple

import numpy as np

from config import TOLERANCE_SETTINGS, resolve_tolerance
from measures import Verdict, NonIntegrable, GammaMismatch
from measures.measure_1d import (
    Measure1D, moment, integrate_power, tilt, divide_by_t, linear_combine,
    pushforward_power, dirac, atomic
)
from shifts import BaseShift, DegenerateTail, NotCompletable, psd_eigen_margin

logger = logging.getLogger(__name__)


class ExplicitWeights(BaseShift):
    """Finitely many listed weights, optionally continued by the last one"""

    def __init__(self, weights: Sequence[float], tail: Optional[str] = "constant"):
        super().__init__()
        if not weights:
            raise ValueError("at least one weight is required")
        if any(w <= 0.0 for w in weights):
            raise ValueError("weights must be strictly positive")
        if tail not in ("constant", None):
            raise ValueError(f"unknown tail rule {tail!r}")
        self.explicit = tuple(float(w) for w in weights)
        self.tail = tail

    def weight(self, n: int) -> float:
        if n < len(self.explicit):
            return self.explicit[n]
        if self.tail == "constant":
            return self.explicit[-1]
        raise IndexError(f"weight {n} is beyond the {len(self.explicit)} listed weights")

    def to_dict(self) -> Dict[str, Any]:
        return {"weights": list(self.explicit), "tail": self.tail}


class MeasureBacked(BaseShift):
    """Shift whose moments are the moments of a probability measure"""

    def __init__(self, measure: Measure1D):
        super().__init__()
        if not measure.is_probability(TOLERANCE_SETTINGS["oracle"]):
            raise ValueError(f"Berger measure must have mass 1, got {measure.total_mass()!r}")
        self._measure = measure

    @property
    def measure(self) -> Measure1D:
        return self._measure

    def _compute_gamma(self, k: int) -> float:
        return moment(self._measure, k) if k else 1.0

    def weight(self, n: int) -> float:
        current, following = self.gamma(n), self.gamma(n + 1)
        floor = TOLERANCE_SETTINGS["degenerate_ratio"]
        if current <= floor or following / current <= floor:
            raise DegenerateTail(f"moment ratio gamma_{n + 1}/gamma_{n} collapses "
                                 f"({following!r}/{current!r})")
        return math.sqrt(following / current)

    def to_dict(self) -> Dict[str, Any]:
        return {"measure": self._measure.to_dict()}


class BackExtended(BaseShift):
    """shift(a, inner weights): the weight a prepended to `inner`"""

    def __init__(self, a: float, inner: BaseShift):
        super().__init__()
        if a <= 0.0:
            raise ValueError(f"prepended weight must be positive, got {a}")
        self.a = float(a)
        self.inner = inner

    @property
    def measure(self) -> Optional[Measure1D]:
        if self.inner.measure is None:
            return None
        return backward_extension_measure(self.a, self.inner.measure)

    def _compute_gamma(self, k: int) -> float:
        return self.a ** 2 * self.inner.gamma(k - 1) if k else 1.0

    def weight(self, n: int) -> float:
        return self.a if n == 0 else self.inner.weight(n - 1)

    def to_dict(self) -> Dict[str, Any]:
        return {"backext": {"a": self.a, "inner": self.inner.to_dict()}}


class PacketShift(BaseShift):
    """
    The i-th summand of the m-th power: weights alpha_{mj+i} ... alpha_{mj+i+m-1}
    multiplied together, moments gamma_{mj+i} / gamma_i.
    """

    def __init__(self, parent: BaseShift, m: int, i: int):
        super().__init__()
        if m < 1 or not 0 <= i < m:
            raise ValueError(f"invalid packet ({m}, {i})")
        self.parent = parent
        self.m = m
        self.i = i

    @property
    def measure(self) -> Optional[Measure1D]:
        parent_measure = self.parent.measure
        if parent_measure is None:
            return None
        tilted = tilt(parent_measure, self.i, self.parent.gamma(self.i)) if self.i else parent_measure
        return pushforward_power(tilted, self.m)

    def _compute_gamma(self, k: int) -> float:
        return self.parent.gamma(self.m * k + self.i) / self.parent.gamma(self.i) if k else 1.0

    def weight(self, n: int) -> float:
        start = self.m * n + self.i
        return float(np.prod([self.parent.weight(start + k) for k in range(self.m)]))

    def to_dict(self) -> Dict[str, Any]:
        return {"packet": {"m": self.m, "i": self.i, "parent": self.parent.to_dict()}}


def weight_seq_from_dict(data: Dict[str, Any]) -> BaseShift:
    if data.get("weights") is not None:
        return ExplicitWeights(data["weights"], data.get("tail", "constant"))
    if data.get("measure") is not None:
        return MeasureBacked(Measure1D.from_dict(data["measure"]))
    if data.get("backext") is not None:
        entry = data["backext"]
        return BackExtended(float(entry["a"]), weight_seq_from_dict(entry["inner"]))
    if data.get("packet") is not None:
        entry = data["packet"]
        return PacketShift(weight_seq_from_dict(entry["parent"]), int(entry["m"]), int(entry["i"]))
    raise ValueError(f"unrecognized weight sequence keys {sorted(data)}")


def gamma(w: BaseShift, k: int) -> float:
    return w.gamma(k)


def weights_from_measure(mu: Measure1D) -> MeasureBacked:
    return MeasureBacked(mu)


def restriction_measure(mu: Measure1D, n: int) -> Measure1D:
    """Berger measure of the shift with its first n weights removed"""
    if n < 1:
        raise ValueError(f"restriction order must be >= 1, got {n}")
    return tilt(mu, n, moment(mu, n))


def power_decompose(w: BaseShift, m: int) -> List[PacketShift]:
    """The m summands of the m-th power, packet i acting on e_{mj+i}"""
    if m < 1:
        raise ValueError(f"power must be >= 1, got {m}")
    return [PacketShift(w, m, i) for i in range(m)]


def backward_extension_measure(a: float, xi: Measure1D) -> Measure1D:
    """
    The measure a^2 (1/t) dxi + (1 - a^2 ||1/t||) delta_0.

    Its moments are those of shift(a, xi-weights) whether or not it is positive.
    """
    norm = integrate_power(xi, -1.0)
    if math.isinf(norm):
        raise NonIntegrable("1/t is not integrable against the extended measure")
    defect = 1.0 - a * a * norm
    if abs(defect) <= TOLERANCE_SETTINGS["zero_mass"]:
        return linear_combine([a * a], [divide_by_t(xi)])
    return linear_combine([a * a, defect], [divide_by_t(xi), dirac(0.0)])


def backward_extension(a: float, xi: Measure1D,
                       tol: Optional[float] = None) -> Tuple[Verdict, Optional[Measure1D]]:
    """
    Subnormality of shift(a, xi-weights).

    Args:
        a: The prepended weight
        xi: Berger measure of the shift being extended
        tol: Positivity tolerance

    Returns:
        (verdict, Berger measure on pass else None)
    """
    tol = resolve_tolerance(tol)
    try:
        norm = integrate_power(xi, -1.0)
    except NonIntegrable as e:
        return Verdict(False, -math.inf, witness=("1/t", math.inf), reason=str(e)), None
    if math.isinf(norm):
        return Verdict(False, -math.inf, witness=("1/t", norm),
                       reason="1/t is not integrable: the measure charges {0}"), None

    load = a * a * norm
    margin = 1.0 - load
    if margin < -tol:
        return Verdict(False, margin, witness=("a^2*||1/t||", load),
                       reason=f"a^2*||1/t|| = {load:.12g} exceeds 1"), None

    if margin < 0.0:
        measure = linear_combine([a * a], [divide_by_t(xi)])
    else:
        measure = backward_extension_measure(a, xi)
    _check_backward_moments(a, xi, measure)
    return Verdict(True, margin, witness=("a^2*||1/t||", load)), measure


def _check_backward_moments(a: float, xi: Measure1D, measure: Measure1D, order: int = 10) -> None:
    oracle = TOLERANCE_SETTINGS["oracle"]
    for k in range(order):
        expected = a * a * moment(xi, k)
        actual = moment(measure, k + 1)
        if abs(actual - expected) > oracle * max(1.0, abs(expected)):
            raise GammaMismatch(f"backward extension moment {k + 1}: {actual!r} != {expected!r}")


def stampfli_completion(w0: float, w1: float, w2: float) -> Measure1D:
    """
    The 2-atomic probability measure with moments 1, w0^2, w0^2 w1^2, w0^2 w1^2 w2^2.

    The atoms are the roots of the degree-2 orthogonal polynomial of the
    Hankel system; masses come from the first two moments.
    """
    if not 0.0 < w0 < w1 < w2:
        raise NotCompletable(f"weights must satisfy 0 < w0 < w1 < w2, got ({w0}, {w1}, {w2})")
    gammas = [1.0, w0 ** 2, w0 ** 2 * w1 ** 2, w0 ** 2 * w1 ** 2 * w2 ** 2]
    hankel = np.array([[gammas[0], gammas[1]], [gammas[1], gammas[2]]])
    if abs(np.linalg.det(hankel)) <= 1e-14 * np.trace(hankel) ** 2:
        raise NotCompletable("Hankel system is singular")
    c0, c1 = np.linalg.solve(hankel, np.array([gammas[2], gammas[3]]))

    roots = np.roots([1.0, -c1, -c0])
    if np.any(np.abs(np.imag(roots)) > 1e-12):
        raise NotCompletable(f"orthogonal polynomial has complex roots {roots}")
    t0, t1 = sorted(float(np.real(r)) for r in roots)
    if t0 < -TOLERANCE_SETTINGS["atom_merge"] or t1 - t0 <= TOLERANCE_SETTINGS["atom_merge"]:
        raise NotCompletable(f"quadrature nodes ({t0}, {t1}) are not admissible")
    t0 = max(t0, 0.0)
    rho1 = (gammas[1] - t0) / (t1 - t0)
    rho0 = 1.0 - rho1
    if rho0 <= 0.0 or rho1 <= 0.0:
        raise NotCompletable(f"quadrature masses ({rho0}, {rho1}) are not positive")
    completion = atomic([(t0, rho0), (t1, rho1)])

    oracle = TOLERANCE_SETTINGS["oracle"]
    for k, expected in enumerate(gammas):
        if abs(moment(completion, k) - expected) > oracle * max(1.0, expected):
            raise NotCompletable(f"completion misses moment {k}: "
                                 f"{moment(completion, k)!r} != {expected!r}")
    logger.debug(f"Stampfli completion atoms {completion.atoms}")
    return completion


def hankel_check(w: BaseShift, k: int, window: int) -> Verdict:
    """
    Positivity of the Hankel matrices (gamma_{n+i+j})_{i,j<=k} for n <= window.

    A pass only means no obstruction up to order k.
    """
    if k < 1:
        raise ValueError(f"Hankel order must be >= 1, got {k}")
    floor = TOLERANCE_SETTINGS["psd_floor"]
    gammas = w.gammas(window + 2 * k + 1)
    worst_margin, worst_n = math.inf, 0
    for n in range(window + 1):
        matrix = np.array([[gammas[n + i + j] for j in range(k + 1)] for i in range(k + 1)])
        min_eig, trace = psd_eigen_margin(matrix)
        margin = min_eig / trace if trace > 0.0 else min_eig
        if margin < worst_margin:
            worst_margin, worst_n = margin, n
        if margin < -floor:
            return Verdict(False, margin, witness=n,
                           reason=f"Hankel matrix of order {k} at n={n} is not positive semidefinite")
    return Verdict(True, worst_margin, witness=worst_n,
                   reason=f"no obstruction up to order {k}, window {window}")
