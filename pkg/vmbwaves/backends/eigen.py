# vmbwaves/backends/eigen.py
import logging

import numpy as np
import scipy.linalg as la

from vmbwaves.backends.base import PropagatorBackend
from vmbwaves.backends.expm import ExpmBackend

LOGGER = logging.getLogger(__name__)

CONDITION_LIMIT = 1e10


class EigenBackend(PropagatorBackend):
    """
    Propagates through a dense eigendecomposition A = V diag(lambda) V^{-1}, reused
    across times for the same generator. Falls back to expm when V is ill-conditioned.
    """

    name = "eigen"

    def __init__(self, condition_limit: float = CONDITION_LIMIT):
        self.condition_limit = condition_limit
        self._fallback = ExpmBackend()
        self._matrix = None
        self._decomposition = None

    def decompose(self, matrix: np.ndarray):
        """(values, V, V^{-1}) or None when V is too ill-conditioned."""
        if self._matrix is matrix:
            return self._decomposition
        values, vectors = la.eig(matrix)
        condition = np.linalg.cond(vectors)
        if not np.isfinite(condition) or condition > self.condition_limit:
            LOGGER.warning("Eigenvector matrix condition %.2e exceeds %.0e; using expm", condition, self.condition_limit)
            decomposition = None
        else:
            decomposition = (values, vectors, la.inv(vectors))
        self._matrix = matrix
        self._decomposition = decomposition
        return decomposition

    def spectrum(self, matrix: np.ndarray) -> np.ndarray:
        decomposition = self.decompose(matrix)
        return decomposition[0] if decomposition is not None else la.eigvals(matrix)

    def exponential(self, matrix: np.ndarray, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"Propagation time must be nonnegative, got {t}")
        decomposition = self.decompose(matrix)
        if decomposition is None:
            return self._fallback.exponential(matrix, t)
        values, vectors, inverse = decomposition
        return (vectors * np.exp(t * values)[None, :]) @ inverse
