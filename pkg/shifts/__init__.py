from abc import ABC, abstractmethod
import threading
from typing import Dict, Any, List, Optional, Tuple

import numpy as np
from scipy.linalg import eigvalsh

from measures import ShiftlabError
from measures.measure_1d import Measure1D


class DegenerateTail(ShiftlabError):
    """Moment ratios of a measure collapse, so weights stop being positive"""


class NotCompletable(ShiftlabError):
    """Initial weights admit no 2-atomic subnormal completion"""


class PathMismatch(ShiftlabError):
    """Row-first and column-first moment products disagree"""


class Unbounded(ShiftlabError):
    """Seam weights of a construction diverge"""


class NotSubnormal(ShiftlabError):
    """A Berger measure was requested for a non-subnormal shift"""


def psd_eigen_margin(matrix: np.ndarray) -> Tuple[float, float]:
    """Smallest eigenvalue and trace of a symmetric matrix"""
    matrix = np.asarray(matrix, dtype=float)
    symmetric = 0.5 * (matrix + matrix.T)
    eigenvalues = eigvalsh(symmetric)
    return float(eigenvalues[0]), float(np.trace(symmetric))


class BaseShift(ABC):
    """
    Unilateral weighted shift e_n -> weight(n) e_{n+1}.

    Moments gamma(k) = weight(0)^2 ... weight(k-1)^2 are memoized; filling the
    memo is idempotent, so one instance can be shared between threads.
    """

    def __init__(self):
        self._gammas: Dict[int, float] = {0: 1.0}
        self._lock = threading.RLock()

    @abstractmethod
    def weight(self, n: int) -> float:
        """
        Weight of the n-th basis vector

        Args:
            n: Index >= 0

        Returns:
            The strictly positive weight alpha_n
        """
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    @property
    def measure(self) -> Optional[Measure1D]:
        """A measure whose moments are the gammas, when one is known"""
        return None

    def gamma(self, k: int) -> float:
        if k < 0:
            raise ValueError(f"gamma index must be non-negative, got {k}")
        with self._lock:
            cached = self._gammas.get(k)
            if cached is None:
                cached = self._compute_gamma(k)
                self._gammas[k] = cached
            return cached

    def _compute_gamma(self, k: int) -> float:
        previous = self._gammas.get(k - 1)
        if previous is not None:
            return previous * self.weight(k - 1) ** 2
        value = 1.0
        for n in range(k):
            value *= self.weight(n) ** 2
        return value

    def weights(self, count: int) -> List[float]:
        return [self.weight(n) for n in range(count)]

    def gammas(self, count: int) -> List[float]:
        return [self.gamma(k) for k in range(count)]
