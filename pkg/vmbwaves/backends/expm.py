# vmbwaves/backends/expm.py
import logging

import numpy as np
import scipy.linalg as la

from vmbwaves.backends.base import PropagatorBackend

LOGGER = logging.getLogger(__name__)


class ExpmBackend(PropagatorBackend):
    """
    Scaling-and-squaring matrix exponential (scipy.linalg.expm) for every requested time.
    """

    name = "expm"

    def exponential(self, matrix: np.ndarray, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"Propagation time must be nonnegative, got {t}")
        if t == 0:
            return np.eye(matrix.shape[0], dtype=complex)
        LOGGER.debug("expm of a %d x %d generator at t=%.4g", matrix.shape[0], matrix.shape[1], t)
        return la.expm(t * matrix)
