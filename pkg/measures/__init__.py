from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Any, Optional

from config import TOLERANCE_SETTINGS


class ShiftlabError(Exception):
    """Base class for every error raised by the library"""


class NonIntegrable(ShiftlabError):
    """A power of t is not integrable against a measure"""


class GammaMismatch(ShiftlabError):
    """A caller-supplied moment disagrees with the computed one"""


@dataclass(frozen=True)
class Verdict:
    """Outcome of a positivity-type test.

    `margin` is the signed distance to failure in the test's own units:
    non-negative (up to tolerance) on pass, the most negative value seen on fail.
    """
    passed: bool
    margin: float
    witness: Any = None
    reason: str = ""
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.passed and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "margin": self.margin,
            "witness": self.witness,
            "reason": self.reason,
            "details": {k: (v.to_dict() if isinstance(v, Verdict) else v)
                        for k, v in self.details.items()}
        }


class BaseMeasure(ABC):
    """Finite measure with closed-form power moments"""

    signed: bool = False

    @abstractmethod
    def total_mass(self) -> float:
        """Total (signed) mass"""
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """
        JSON-ready description of the measure

        Returns:
            Dictionary in the documented interchange shape
        """
        pass

    def is_probability(self, tol: Optional[float] = None) -> bool:
        tol = TOLERANCE_SETTINGS["moment"] if tol is None else tol
        return abs(self.total_mass() - 1.0) <= tol
