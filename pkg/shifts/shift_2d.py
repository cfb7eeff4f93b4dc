"""
2-variable weighted shifts on a finite evaluable window.

A grid is a pair of weight generators alpha(k1, k2) (horizontal) and
beta(k1, k2) (vertical). Checks here are finite-window: a pass means no
obstruction was found up to the requested index bound.
"""
import logging
import math
import threading
from functools import lru_cache
from typing import Callable, Dict, Any, List, Optional, Sequence, Tuple

import numpy as np

from config import TOLERANCE_SETTINGS, GRID_SETTINGS, resolve_tolerance
from measures import Verdict
from measures.measure_1d import Measure1D, linear_combine, measure_leq, as_positive, dirac, \
    divide_by_t, restrict_off_zero
from measures.measure_2d import Measure2D, ProductTerm, extremal, marginal_X, inverse_t_norm, moment2d
from shifts import BaseShift, PathMismatch, psd_eigen_margin

logger = logging.getLogger(__name__)

Index = Tuple[int, int]
WeightGenerator = Callable[[int, int], float]


class ShiftGrid:
    def __init__(self, alpha: WeightGenerator, beta: WeightGenerator,
                 window: Index = None, name: str = ""):
        self.alpha = alpha
        self.beta = beta
        self.window = tuple(window or GRID_SETTINGS["window"])
        self.name = name
        self._gammas: Dict[Index, float] = {(0, 0): 1.0}
        self._lock = threading.RLock()

    def __repr__(self) -> str:
        return f"ShiftGrid({self.name or 'anonymous'}, window={self.window})"

    @classmethod
    def tensor(cls, horizontal: BaseShift, vertical: BaseShift, window: Index = None) -> "ShiftGrid":
        """(I x W_horizontal, W_vertical x I): alpha depends on k1 only, beta on k2 only"""
        return cls(lambda k1, k2: horizontal.weight(k1),
                   lambda k1, k2: vertical.weight(k2),
                   window, name="tensor")

    @classmethod
    def from_rows(cls, alpha_rows: Sequence[Sequence[float]], beta_rows: Sequence[Sequence[float]],
                  tail: str = "tensor", window: Index = None) -> "ShiftGrid":
        """
        Explicit weights, row k2 of each table listing k1 = 0, 1, ...

        With the "tensor" tail, indices past the tables repeat the last row
        and column.
        """
        if tail != "tensor":
            raise ValueError(f"unknown tail rule {tail!r}")
        alpha_table = [list(map(float, row)) for row in alpha_rows]
        beta_table = [list(map(float, row)) for row in beta_rows]
        for table in (alpha_table, beta_table):
            if not table or any(not row for row in table):
                raise ValueError("weight tables must be non-empty")
            if any(w <= 0.0 for row in table for w in row):
                raise ValueError("weights must be strictly positive")

        def lookup(table):
            def weight(k1: int, k2: int) -> float:
                row = table[min(k2, len(table) - 1)]
                return row[min(k1, len(row) - 1)]
            return weight

        return cls(lookup(alpha_table), lookup(beta_table), window, name="explicit")

    @classmethod
    def from_berger_measure(cls, mu: Measure2D, window: Index = None) -> "ShiftGrid":
        """Weights alpha_k = sqrt(gamma_{k+e1}/gamma_k), beta_k = sqrt(gamma_{k+e2}/gamma_k)"""
        moments = lru_cache(maxsize=None)(lambda k1, k2: moment2d(mu, k1, k2))
        return cls(lambda k1, k2: math.sqrt(moments(k1 + 1, k2) / moments(k1, k2)),
                   lambda k1, k2: math.sqrt(moments(k1, k2 + 1) / moments(k1, k2)),
                   window, name="berger")

    def transposed(self) -> "ShiftGrid":
        """The grid with the two variables swapped"""
        return ShiftGrid(lambda k1, k2: self.beta(k2, k1),
                         lambda k1, k2: self.alpha(k2, k1),
                         (self.window[1], self.window[0]), name=f"{self.name}^T")

    def gamma(self, k1: int, k2: int) -> float:
        """Moment gamma_k along the row-then-column path, checked against column-then-row"""
        key = (k1, k2)
        with self._lock:
            cached = self._gammas.get(key)
            if cached is not None:
                return cached
            row_first = self._row_first(k1, k2)
            column_first = self._column_first(k1, k2)
            scale = max(abs(row_first), abs(column_first))
            if abs(row_first - column_first) > TOLERANCE_SETTINGS["path"] * scale:
                raise PathMismatch(f"gamma{key}: row-first {row_first!r} != column-first {column_first!r}")
            self._gammas[key] = row_first
            return row_first

    def _row_first(self, k1: int, k2: int) -> float:
        value = 1.0
        for i in range(k1):
            value *= self.alpha(i, 0) ** 2
        for j in range(k2):
            value *= self.beta(k1, j) ** 2
        return value

    def _column_first(self, k1: int, k2: int) -> float:
        value = 1.0
        for j in range(k2):
            value *= self.beta(0, j) ** 2
        for i in range(k1):
            value *= self.alpha(i, k2) ** 2
        return value

    def to_dict(self, window: Index = None) -> Dict[str, Any]:
        K1, K2 = window or self.window
        return {
            "alphaRows": [[self.alpha(k1, k2) for k1 in range(K1 + 1)] for k2 in range(K2 + 1)],
            "betaRows": [[self.beta(k1, k2) for k1 in range(K1 + 1)] for k2 in range(K2 + 1)],
            "tail": "tensor"
        }


def _require_window(g: ShiftGrid, K: Index, extra: int = 0) -> None:
    if K[0] + extra > g.window[0] or K[1] + extra > g.window[1]:
        raise ValueError(f"index bound {tuple(K)} (+{extra}) exceeds the grid window {g.window}")


def _indices(K: Index):
    for k1 in range(K[0] + 1):
        for k2 in range(K[1] + 1):
            yield k1, k2


def commutes(g: ShiftGrid, K: Index, tol: Optional[float] = None) -> Verdict:
    """beta_{k+e1} alpha_k = alpha_{k+e2} beta_k for every k <= K, relative tolerance"""
    tol = TOLERANCE_SETTINGS["path"] if tol is None else tol
    _require_window(g, K, 1)
    worst, worst_index = 0.0, (0, 0)
    for k1, k2 in _indices(K):
        lhs = g.beta(k1 + 1, k2) * g.alpha(k1, k2)
        rhs = g.alpha(k1, k2 + 1) * g.beta(k1, k2)
        relative = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
        if relative > worst:
            worst, worst_index = relative, (k1, k2)
    passed = worst <= tol
    reason = "" if passed else f"weights do not commute at {worst_index} (relative gap {worst:.3g})"
    return Verdict(passed, tol - worst, witness=worst_index, reason=reason)


def gamma2d(g: ShiftGrid, k: Index) -> float:
    k1, k2 = k
    if k1 < 0 or k2 < 0:
        raise ValueError(f"moment indices must be non-negative, got {k}")
    _require_window(g, k)
    return g.gamma(k1, k2)


def six_point_matrix(g: ShiftGrid, k1: int, k2: int) -> np.ndarray:
    a, a_right, a_up = g.alpha(k1, k2), g.alpha(k1 + 1, k2), g.alpha(k1, k2 + 1)
    b, b_right, b_up = g.beta(k1, k2), g.beta(k1 + 1, k2), g.beta(k1, k2 + 1)
    off = a_up * b_right - a * b
    return np.array([[a_right ** 2 - a ** 2, off], [off, b_up ** 2 - b ** 2]])


def _psd_fails(matrix: np.ndarray, tol: float) -> Tuple[bool, float]:
    min_eig, trace = psd_eigen_margin(matrix)
    return min_eig < -tol * (1.0 + abs(trace)), min_eig


def six_point_test(g: ShiftGrid, K: Index, tol: Optional[float] = None) -> Verdict:
    """
    Joint hyponormality on the window: the 2x2 six-point matrix must be
    positive semidefinite at every k <= K. The margin is the smallest
    determinant seen; the witness is the first failing index.
    """
    tol = resolve_tolerance(tol)
    _require_window(g, K, 2)
    worst_det, worst_index = math.inf, (0, 0)
    for k1, k2 in _indices(K):
        matrix = six_point_matrix(g, k1, k2)
        det = float(np.linalg.det(matrix))
        fails, min_eig = _psd_fails(matrix, tol)
        if fails:
            return Verdict(False, min(det, min_eig), witness=(k1, k2),
                           reason=f"six-point matrix at {(k1, k2)} is not positive semidefinite",
                           details={"min_eigenvalue": min_eig, "determinant": det})
        if det < worst_det:
            worst_det, worst_index = det, (k1, k2)
    return Verdict(True, worst_det, witness=worst_index, reason=f"no obstruction <= {tuple(K)}")


def monomial_exponents(k: int) -> List[Index]:
    """Exponents (p, q) with 1 <= p + q <= k, by degree and then decreasing p"""
    return [(p, degree - p) for degree in range(1, k + 1) for p in range(degree, -1, -1)]


def k_hyponormal_matrix(g: ShiftGrid, k: int, u: Index) -> np.ndarray:
    """
    Self-commutator matrix of the monomial tuple of degree <= k, compressed
    to e_u and rescaled by the positive diagonal sqrt(gamma_{u+a_i}/gamma_u).
    For k = 1 this is the six-point matrix.
    """
    exponents = monomial_exponents(k)
    base = g.gamma(*u)
    ratios = [g.gamma(u[0] + p, u[1] + q) / base for p, q in exponents]
    size = len(exponents)
    matrix = np.empty((size, size))
    for i, (pi, qi) in enumerate(exponents):
        for j, (pj, qj) in enumerate(exponents):
            joint = g.gamma(u[0] + pi + pj, u[1] + qi + qj) / base
            matrix[i, j] = (joint - ratios[i] * ratios[j]) / math.sqrt(ratios[i] * ratios[j])
    return matrix


def k_hyponormal_window(g: ShiftGrid, k: int, K: Index, tol: Optional[float] = None) -> Verdict:
    """
    Finite-window joint k-hyponormality. Necessary for subnormality only:
    a pass means no obstruction up to (k, K).
    """
    if k < 1:
        raise ValueError(f"hyponormality order must be >= 1, got {k}")
    tol = resolve_tolerance(tol)
    _require_window(g, K, 2 * k)
    worst_eig, worst_index = math.inf, (0, 0)
    for u in _indices(K):
        fails, min_eig = _psd_fails(k_hyponormal_matrix(g, k, u), tol)
        if fails:
            return Verdict(False, min_eig, witness=u,
                           reason=f"{k}-hyponormality fails at e_{u}")
        if min_eig < worst_eig:
            worst_eig, worst_index = min_eig, u
    return Verdict(True, worst_eig, witness=worst_index, reason=f"no obstruction <= ({k}, {tuple(K)})")


def backward_ext_2var(muM: Measure2D, sigma: Measure1D, beta00: float,
                      tol: Optional[float] = None) -> Tuple[Verdict, Optional[Measure2D]]:
    """
    Subnormality of the shift obtained by adding row 0 (Berger measure sigma)
    below a subnormal shift with Berger measure muM, joined by beta_(0,0).

    Conditions: 1/t is integrable against muM; beta00^2 ||1/t|| <= 1; and
    beta00^2 ||1/t|| (muM)_ext^X <= sigma, with equality forced when the load is 1.

    Returns:
        (verdict, reconstructed Berger measure on pass else None)
    """
    tol = resolve_tolerance(tol)
    full_norm = inverse_t_norm(muM, off_zero=False)
    if math.isinf(full_norm):
        return Verdict(False, -math.inf, witness=("1/t", full_norm),
                       reason="1/t is not integrable: the t-marginal charges {0}"), None

    mu_ext, norm = extremal(muM)
    load = beta00 ** 2 * norm
    if load > 1.0 + tol:
        return Verdict(False, 1.0 - load, witness=("beta00^2*||1/t||", load),
                       reason=f"beta00^2*||1/t|| = {load:.12g} exceeds 1"), None

    scaled_marginal = linear_combine([load], [marginal_X(mu_ext)])
    comparison = measure_leq(scaled_marginal, sigma, tol)
    details = {"norm_inv_t": norm, "load": load, "marginal_leq": comparison}
    if not comparison.passed:
        return Verdict(False, comparison.margin, witness=comparison.witness,
                       reason=f"marginal comparison fails ({comparison.reason})", details=details), None

    saturated = abs(load - 1.0) <= tol
    if saturated:
        reverse = measure_leq(sigma, scaled_marginal, tol)
        if not reverse.passed:
            return Verdict(False, reverse.margin, witness=reverse.witness,
                           reason="load is 1 but the extremal marginal differs from sigma",
                           details=details), None

    terms = [ProductTerm(beta00 ** 2 * term.weight, term.s, divide_by_t(restrict_off_zero(term.t)))
             for term in muM.terms if not restrict_off_zero(term.t).is_zero()]
    if not saturated:
        remainder = as_positive(linear_combine([1.0, -1.0], [sigma, scaled_marginal]), tol)
        if not remainder.is_zero():
            terms.append(ProductTerm(1.0, remainder, dirac(0.0)))
    measure = Measure2D(terms=tuple(terms), signed=muM.signed)
    margin = min(1.0 - load, comparison.margin) if not saturated else comparison.margin
    logger.debug(f"2-variable backward extension passes with load {load:.12g}")
    return Verdict(True, margin, witness=("beta00^2*||1/t||", load), details=details), measure
