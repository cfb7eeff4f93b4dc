"""
Class TC: 2-variable weighted shifts with subnormal components and a core of
tensor form, described by five-tuples <sigma, tau, a, xi, eta>.

sigma and tau are the Berger measures of row 0 and column 0, xi x eta is the
Berger measure of the core, and a is the first weight of row 1. Every other
weight is forced by commutativity.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Any, List, Optional, Tuple

from config import TOLERANCE_SETTINGS, GRID_SETTINGS, resolve_tolerance
from measures import Verdict, NonIntegrable, GammaMismatch
from measures.measure_1d import (
    Measure1D, moment, integrate_power, linear_combine, divide_by_t, dirac,
    is_nonnegative, as_positive
)
from measures.measure_2d import Measure2D, ProductTerm, product, combine2d, marginal_X, marginal_Y
from shifts import Unbounded, NotSubnormal
from shifts.shift_1d import (
    MeasureBacked, PacketShift, restriction_measure, backward_extension,
    backward_extension_measure
)
from shifts.shift_2d import ShiftGrid, backward_ext_2var

logger = logging.getLogger(__name__)

COMPONENTS = ("sigma", "tau", "xi", "eta")


@dataclass(frozen=True)
class FiveTuple:
    sigma: Measure1D
    tau: Measure1D
    a: float
    xi: Measure1D
    eta: Measure1D

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        for name in COMPONENTS:
            measure = getattr(self, name)
            if not measure.is_probability(TOLERANCE_SETTINGS["oracle"]):
                raise ValueError(f"{name} must be a probability measure, mass {measure.total_mass()!r}")

    # weight sequences of the four Berger measures, memoized per tuple
    @cached_property
    def sigma_shift(self) -> MeasureBacked:
        return MeasureBacked(self.sigma)

    @cached_property
    def tau_shift(self) -> MeasureBacked:
        return MeasureBacked(self.tau)

    @cached_property
    def xi_shift(self) -> MeasureBacked:
        return MeasureBacked(self.xi)

    @cached_property
    def eta_shift(self) -> MeasureBacked:
        return MeasureBacked(self.eta)

    @property
    def x0(self) -> float:
        return math.sqrt(moment(self.sigma, 1))

    @property
    def y0(self) -> float:
        return math.sqrt(moment(self.tau, 1))

    @cached_property
    def tau1(self) -> Measure1D:
        return restriction_measure(self.tau, 1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sigma": self.sigma.to_dict(),
            "tau": self.tau.to_dict(),
            "a": self.a,
            "xi": self.xi.to_dict(),
            "eta": self.eta.to_dict()
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FiveTuple":
        return cls(sigma=Measure1D.from_dict(data["sigma"]), tau=Measure1D.from_dict(data["tau"]),
                   a=float(data["a"]), xi=Measure1D.from_dict(data["xi"]),
                   eta=Measure1D.from_dict(data["eta"]))


def simple_tuple(x: float, y: float, a: float) -> FiveTuple:
    """<[x, delta_1], [y, delta_1], a, delta_1, delta_1>: row 0 = (x, 1, 1, ...), column 0 = (y, 1, 1, ...)"""
    return FiveTuple(sigma=backward_extension_measure(x, dirac(1.0)),
                     tau=backward_extension_measure(y, dirac(1.0)),
                     a=a, xi=dirac(1.0), eta=dirac(1.0))


def row_seam(ft: FiveTuple, k2: int) -> float:
    """alpha_(0,k2) for k2 >= 1: a * sqrt(m_eta(k2-1) m_tau(1) / m_tau(k2))"""
    if k2 < 1:
        raise ValueError("row seam starts at k2 = 1")
    return ft.a * math.sqrt(ft.eta_shift.gamma(k2 - 1) * ft.tau_shift.gamma(1) / ft.tau_shift.gamma(k2))


def column_seam(ft: FiveTuple, k1: int) -> float:
    """beta_(k1,0) for k1 >= 1: a * y0 * sqrt(m_xi(k1-1) / m_sigma(k1))"""
    if k1 < 1:
        raise ValueError("column seam starts at k1 = 1")
    return ft.a * ft.y0 * math.sqrt(ft.xi_shift.gamma(k1 - 1) / ft.sigma_shift.gamma(k1))


def build_grid(ft: FiveTuple, window: Tuple[int, int] = None) -> ShiftGrid:
    """
    The weight diagram of a five-tuple.

    Raises:
        Unbounded: a seam weight is non-finite or exceeds the cap inside the window
    """
    window = tuple(window or GRID_SETTINGS["window"])
    cap = TOLERANCE_SETTINGS["unbounded_cap"]
    K1, K2 = window
    for k2 in range(1, K2 + 2):
        value = row_seam(ft, k2)
        if not math.isfinite(value) or value > cap:
            raise Unbounded(f"row seam alpha_(0,{k2}) = {value!r}")
    for k1 in range(1, K1 + 2):
        value = column_seam(ft, k1)
        if not math.isfinite(value) or value > cap:
            raise Unbounded(f"column seam beta_({k1},0) = {value!r}")

    def alpha(k1: int, k2: int) -> float:
        if k2 == 0:
            return ft.sigma_shift.weight(k1)
        if k1 == 0:
            return row_seam(ft, k2)
        return ft.xi_shift.weight(k1 - 1)

    def beta(k1: int, k2: int) -> float:
        if k1 == 0:
            return ft.tau_shift.weight(k2)
        if k2 == 0:
            return column_seam(ft, k1)
        return ft.eta_shift.weight(k2 - 1)

    return ShiftGrid(alpha, beta, window, name="tc")


def row_measure(ft: FiveTuple, k2: int) -> Measure1D:
    """Measure with the moments of row k2 (signed when the row is not subnormal)"""
    return ft.sigma if k2 == 0 else backward_extension_measure(row_seam(ft, k2), ft.xi)


def column_measure(ft: FiveTuple, k1: int) -> Measure1D:
    return ft.tau if k1 == 0 else backward_extension_measure(column_seam(ft, k1), ft.eta)


def components_subnormal(ft: FiveTuple, K: Tuple[int, int] = None,
                         tol: Optional[float] = None) -> Verdict:
    """Subnormality of every row k2 <= K2 and every column k1 <= K1"""
    K1, K2 = K or GRID_SETTINGS["commute_window"]
    checks = [(("row", 0), is_nonnegative(ft.sigma, tol)), (("column", 0), is_nonnegative(ft.tau, tol))]
    checks += [(("row", k2), backward_extension(row_seam(ft, k2), ft.xi, tol)[0]) for k2 in range(1, K2 + 1)]
    checks += [(("column", k1), backward_extension(column_seam(ft, k1), ft.eta, tol)[0])
               for k1 in range(1, K1 + 1)]
    for where, verdict in checks:
        if not verdict.passed:
            return Verdict(False, verdict.margin, witness=where,
                           reason=f"{where[0]} {where[1]} is not subnormal ({verdict.reason})")
    margin = min(verdict.margin for _, verdict in checks)
    return Verdict(True, margin, witness=None, reason=f"rows <= {K2} and columns <= {K1} subnormal")


def psi_phi(ft: FiveTuple) -> Tuple[Measure1D, Measure1D]:
    """
    The two signed measures whose positivity decides subnormality:

        psi = tau_1 - a^2 ||1/s||_xi eta
        phi = sigma - y0^2 ||1/t||_psi delta_0 - a^2 y0^2 ||1/t||_eta xi/s

    Raises:
        NonIntegrable: one of the three norms is infinite
    """
    norms = {}
    for label, measure in (("xi", ft.xi), ("eta", ft.eta)):
        norms[label] = integrate_power(measure, -1.0)
        if math.isinf(norms[label]):
            raise NonIntegrable(f"1/t is not integrable against {label}")

    a2 = ft.a ** 2
    y02 = moment(ft.tau, 1)
    psi = linear_combine([1.0, -a2 * norms["xi"]], [ft.tau1, ft.eta])
    norm_psi = integrate_power(psi, -1.0)
    if math.isinf(norm_psi):
        raise NonIntegrable("1/t is not integrable against psi")
    phi = linear_combine([1.0, -y02 * norm_psi, -a2 * y02 * norms["eta"]],
                         [ft.sigma, dirac(0.0), divide_by_t(ft.xi)])
    return psi, phi


def is_subnormal(ft: FiveTuple, tol: Optional[float] = None) -> Verdict:
    """
    Subnormality of the TC shift: all four component measures positive, and
    psi, phi positive. The margin is the smaller psi/phi margin unless a
    component fails, in which case it is that component's margin.
    """
    tol = resolve_tolerance(tol)
    components = {name: is_nonnegative(getattr(ft, name), tol) for name in COMPONENTS}
    failing = [(name, v) for name, v in components.items() if not v.passed]
    if failing:
        name, verdict = min(failing, key=lambda item: item[1].margin)
        return Verdict(False, verdict.margin, witness=(name, verdict.witness),
                       reason=f"component {name} is not subnormal ({verdict.reason})",
                       details={"components": components})

    try:
        psi, phi = psi_phi(ft)
    except NonIntegrable as e:
        return Verdict(False, -math.inf, witness=("1/t", math.inf), reason=str(e))

    checks = {"psi": is_nonnegative(psi, tol), "phi": is_nonnegative(phi, tol)}
    name, worst = min(checks.items(), key=lambda item: item[1].margin)
    details = {"psi": checks["psi"], "phi": checks["phi"],
               "psi_measure": psi.to_dict(), "phi_measure": phi.to_dict()}
    if not worst.passed:
        return Verdict(False, worst.margin, witness=(name, worst.witness),
                       reason=f"{name} is not positive ({worst.reason})", details=details)
    return Verdict(True, worst.margin, witness=(name, worst.witness), details=details)


def transpose(ft: FiveTuple) -> FiveTuple:
    """The tuple of the shift with its two variables swapped"""
    return FiveTuple(sigma=ft.tau, tau=ft.sigma, a=ft.a * ft.y0 / ft.x0, xi=ft.eta, eta=ft.xi)


def _vertical_power(ft: FiveTuple, n: int) -> List[FiveTuple]:
    """Summands q = 0..n-1 of (T1, T2^n), acting on the rows k2 = q mod n"""
    if n == 1:
        return [ft]
    tau_packets = [PacketShift(ft.tau_shift, n, q) for q in range(n)]
    eta_packets = [PacketShift(ft.eta_shift, n, q) for q in range(n)]
    summands = []
    for q in range(n):
        sigma_q = ft.sigma if q == 0 else backward_extension_measure(row_seam(ft, q), ft.xi)
        if q == 0:
            eta_q = eta_packets[n - 1].measure
        else:
            eta_q = restriction_measure(eta_packets[q - 1].measure, 1)
        summands.append(FiveTuple(sigma=sigma_q, tau=tau_packets[q].measure,
                                  a=row_seam(ft, n + q), xi=ft.xi, eta=eta_q))
    return summands


def power(ft: FiveTuple, m: int, n: int) -> List[FiveTuple]:
    """
    The m*n TC summands of T^(m,n) = (T1^m, T2^n).

    Summand (p, q) acts on the indices (m k1 + p, n k2 + q) and sits at
    position p*n + q.
    """
    if m < 1 or n < 1:
        raise ValueError(f"powers must be >= 1, got ({m}, {n})")
    by_row: List[List[FiveTuple]] = []
    for column_summand in _vertical_power(ft, n):
        by_row.append([transpose(h) for h in _vertical_power(transpose(column_summand), m)])
    return [by_row[q][p] for p in range(m) for q in range(n)]


def muM(ft: FiveTuple) -> Measure2D:
    """Berger measure of the restriction to rows k2 >= 1: (a^2 xi/s) x eta + delta_0 x psi"""
    psi, _ = psi_phi(ft)
    coeffs, parts = [ft.a ** 2], [product(divide_by_t(ft.xi), ft.eta)]
    if not psi.is_zero():
        coeffs.append(1.0)
        parts.append(product(dirac(0.0), psi))
    return combine2d(coeffs, parts)


def _check_marginals(ft: FiveTuple, measure: Measure2D, tol: float, order: int = 8) -> None:
    """The Berger measure projects onto sigma (s-marginal) and tau (t-marginal)"""
    allowed = max(TOLERANCE_SETTINGS["oracle"], tol)
    for label, marginal, expected in (("sigma", marginal_X(measure), ft.sigma),
                                      ("tau", marginal_Y(measure), ft.tau)):
        for k in range(order):
            actual, target = moment(marginal, k), moment(expected, k)
            if abs(actual - target) > allowed * max(1.0, abs(target)):
                raise GammaMismatch(f"Berger measure {label} marginal moment {k}: {actual!r} != {target!r}")


def berger_measure(ft: FiveTuple, tol: Optional[float] = None) -> Measure2D:
    """
    Berger measure of a subnormal TC shift, rebuilt from muM by adding row 0.

    Raises:
        NotSubnormal: the tuple fails is_subnormal
        GammaMismatch: the marginals miss sigma or tau
    """
    tol = resolve_tolerance(tol)
    verdict = is_subnormal(ft, tol)
    if not verdict.passed:
        raise NotSubnormal(verdict.reason)
    upper = muM(ft)
    if upper.signed:
        upper = Measure2D(terms=tuple(ProductTerm(t.weight, t.s, as_positive(t.t, tol)) for t in upper.terms))
    extension, measure = backward_ext_2var(upper, ft.sigma if not ft.sigma.signed else as_positive(ft.sigma, tol),
                                           ft.y0, tol)
    if not extension.passed:
        raise NotSubnormal(f"backward extension of rows >= 1 fails: {extension.reason}")
    _check_marginals(ft, measure, tol)
    return measure


def transpose_matches(ft: FiveTuple, K: Tuple[int, int] = (6, 6)) -> Verdict:
    """
    Weight diagram of transpose(ft) against the diagram of ft with its
    variables swapped, at every k <= K. The margin is the oracle tolerance
    less the largest relative gap.
    """
    tol = TOLERANCE_SETTINGS["oracle"]
    K1, K2 = K
    direct = build_grid(transpose(ft), (K1, K2))
    swapped = build_grid(ft, (K2, K1)).transposed()
    worst, worst_index = 0.0, (0, 0)
    for k1 in range(K1 + 1):
        for k2 in range(K2 + 1):
            for label, actual, expected in (("alpha", direct.alpha(k1, k2), swapped.alpha(k1, k2)),
                                            ("beta", direct.beta(k1, k2), swapped.beta(k1, k2))):
                gap = abs(actual - expected) / max(abs(expected), 1e-300)
                if gap > tol:
                    return Verdict(False, tol - gap, witness=(label, k1, k2),
                                   reason=f"{label}{(k1, k2)} of the transpose is {actual!r}, expected {expected!r}")
                if gap > worst:
                    worst, worst_index = gap, (k1, k2)
    return Verdict(True, tol - worst, witness=worst_index, reason=f"transpose agrees on k <= {tuple(K)}")
