# vmbwaves/backends/base.py
from abc import ABC, abstractmethod

import numpy as np


class PropagatorBackend(ABC):
    """
    Abstract Base Class for semigroup propagation engines.
    Every engine turns a dense generator A and a time t >= 0 into exp(tA).
    """

    name: str = "base"

    @abstractmethod
    def exponential(self, matrix: np.ndarray, t: float) -> np.ndarray:
        """
        Returns exp(t * matrix) as a dense array.
        This method must be implemented by all subclasses.
        """

    def propagate(self, matrix: np.ndarray, times, state: np.ndarray) -> np.ndarray:
        """exp(t A) state for every t; one row per time."""
        return np.array([self.exponential(matrix, float(t)) @ state for t in np.atleast_1d(times)])
