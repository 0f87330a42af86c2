# vmbwaves/core/hierarchy.py
# Truncated level algebra: nested Duhamel integrals as coefficients of one matrix exponential.
"""
Series in a formal parameter eps with eps^{n+1} = 0.

The level-n coefficient of exp(t (A + sum_l eps^l B_l)) is the sum of all nested Duhamel
integrals of exp(sA) with n "eps-weight" worth of B insertions; for a single B_1 it is

    int_0^t int_0^{s_1} ... exp((t - s_1) A) B_1 exp((s_1 - s_2) A) ... B_1 exp(s_n A) ds_n ... ds_1.

The exponential is computed by scaling and squaring with a Taylor kernel, so one call returns
every level up to n at the cost of O(n^2) dense products per series product.
"""
import logging
import math

import numpy as np

from vmbwaves.exceptions import ConvergenceError, UsageError

LOGGER = logging.getLogger(__name__)

TAYLOR_DEGREE = 12
SCALED_NORM = 0.125


class LevelSeries:
    """Coefficients [C_0, ..., C_n] of a truncated series of square matrices."""

    def __init__(self, terms):
        self.terms = [np.asarray(term, dtype=complex) for term in terms]
        if not self.terms:
            raise UsageError("A level series needs at least the level-0 term")

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    @classmethod
    def identity(cls, size: int, order: int) -> "LevelSeries":
        return cls([np.eye(size, dtype=complex)] + [np.zeros((size, size), dtype=complex)] * order)

    def __getitem__(self, level: int) -> np.ndarray:
        return self.terms[level]

    def __matmul__(self, other: "LevelSeries") -> "LevelSeries":
        order = min(self.order, other.order)
        return LevelSeries(
            [sum(self.terms[a] @ other.terms[k - a] for a in range(k + 1)) for k in range(order + 1)]
        )

    def __add__(self, other: "LevelSeries") -> "LevelSeries":
        return LevelSeries([a + b for a, b in zip(self.terms, other.terms)])

    def __sub__(self, other: "LevelSeries") -> "LevelSeries":
        return LevelSeries([a - b for a, b in zip(self.terms, other.terms)])

    def scaled(self, factor: complex) -> "LevelSeries":
        return LevelSeries([factor * term for term in self.terms])

    def conjugated(self, left: np.ndarray, right: np.ndarray) -> "LevelSeries":
        """left C_k right for every level."""
        return LevelSeries([left @ term @ right for term in self.terms])

    def cumulative(self) -> list[np.ndarray]:
        """Partial sums C_0 + ... + C_k."""
        return list(np.cumsum(np.array(self.terms), axis=0))


def generator_series(A: np.ndarray, couplings, order: int) -> LevelSeries:
    """[A, B_1, ..., B_order]; missing couplings are zero."""
    A = np.asarray(A, dtype=complex)
    couplings = list(couplings)
    if len(couplings) > order:
        couplings = couplings[:order]
    zero = np.zeros_like(A)
    terms = [A] + [np.asarray(B, dtype=complex) for B in couplings] + [zero] * (order - len(couplings))
    for term in terms:
        if term.shape != A.shape:
            raise UsageError(f"Level coupling has shape {term.shape}, the generator is {A.shape}")
    return LevelSeries(terms)


def level_exponential(A: np.ndarray, couplings, t: float, order: int, degree: int = TAYLOR_DEGREE) -> LevelSeries:
    """Coefficients of exp(t (A + sum_l eps^l B_l)) up to eps^order."""
    if t < 0:
        raise UsageError(f"Propagation time must be nonnegative, got {t}")
    generator = generator_series(A, couplings, order)
    size = generator[0].shape[0]
    if t == 0:
        return LevelSeries.identity(size, order)

    total = t * sum(np.linalg.norm(term, 1) for term in generator.terms)
    squarings = max(0, math.ceil(math.log2(total / SCALED_NORM))) if total > 0 else 0
    step = generator.scaled(t / 2.0**squarings)

    identity = LevelSeries.identity(size, order)
    result = identity
    for k in range(degree, 0, -1):
        result = identity + (step @ result).scaled(1.0 / k)
    for _ in range(squarings):
        result = result @ result

    if not all(np.all(np.isfinite(term)) for term in result.terms):
        raise ConvergenceError(f"Level exponential overflowed at t={t} ({squarings} squarings)")
    LOGGER.debug("Level exponential: size %d, order %d, t=%.4g, %d squarings", size, order, t, squarings)
    return result


def level_derivative(generator: LevelSeries, exponential: LevelSeries) -> LevelSeries:
    """d/dt of exp(tG) as a series: G exp(tG), truncated to the common order."""
    return generator @ exponential


def riesz_projector(diagonal: np.ndarray, coupling: np.ndarray, selected: np.ndarray, order: int) -> LevelSeries:
    """Spectral projector of diag(d) + eps B onto the group continuing the selected eigenvalues.

    Level k follows from commuting with the generator off the selected block and from
    idempotence on it:
        (P_k)_ij = (P_{k-1} B - B P_{k-1})_ij / (d_i - d_j)   for i, j in different groups,
        (P_k)_ss = -S_ss,  (P_k)_rr = S_rr,  with S = sum_{a+b=k, a,b>=1} P_a P_b.
    """
    d = np.asarray(diagonal, dtype=complex)
    selected = np.asarray(selected, dtype=bool)
    size = d.size
    gap = d[:, None] - d[None, :]
    cross = selected[:, None] != selected[None, :]
    if np.any(np.abs(gap[cross]) < 1e-12):
        raise UsageError("The selected eigenvalues are not separated from the rest")
    inner_s = np.outer(selected, selected)
    inner_r = np.outer(~selected, ~selected)

    terms = [np.diag(selected.astype(complex))]
    for k in range(1, order + 1):
        commutator = terms[k - 1] @ coupling - coupling @ terms[k - 1]
        term = np.zeros((size, size), dtype=complex)
        term[cross] = commutator[cross] / gap[cross]
        square = sum((terms[a] @ terms[k - a] for a in range(1, k)), np.zeros((size, size), dtype=complex))
        term[inner_s] = -square[inner_s]
        term[inner_r] = square[inner_r]
        terms.append(term)
    return LevelSeries(terms)
