# vmbwaves/core/fitting.py
# Exponent and envelope fits shared by the mode, Green's function and hierarchy studies.
import logging
from dataclasses import dataclass, field

import numpy as np

from vmbwaves.exceptions import UsageError

LOGGER = logging.getLogger(__name__)

FLOOR = 1e-300


@dataclass
class EnvelopeFit:
    """max(value / envelope) over a sample grid, with the grid kept for the report."""

    constant: float
    ratios: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.constant))

    def to_dict(self) -> dict:
        return {"constant": self.constant, "max_ratio": float(np.max(self.ratios)), "params": self.params}


def _positive(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        raise UsageError("Fitted quantities must be nonnegative")
    return np.maximum(values, FLOOR)


def decay_fit(times, norms) -> tuple[float, float]:
    """(C, kappa) with ln ||S(t)|| <= ln C - kappa t, from the upper hull of the samples."""
    times = np.asarray(times, dtype=float)
    logs = np.log(_positive(norms))
    slope, _ = np.polyfit(times, logs, 1)
    kappa = -slope
    offset = float(np.max(logs + kappa * times))
    return float(np.exp(offset)), float(kappa)


def power_exponent(times, values, shift: float = 1.0) -> float:
    """Least-squares slope of ln value against ln(shift + t)."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise UsageError("A power-law fit needs at least two sample times")
    slope, _ = np.polyfit(np.log(shift + times), np.log(_positive(values)), 1)
    return float(slope)


def envelope_constant(values, envelope, **params) -> EnvelopeFit:
    values = np.asarray(values, dtype=float)
    envelope = _positive(envelope)
    ratios = values / envelope
    fit = EnvelopeFit(constant=float(np.max(ratios)), ratios=ratios, params=params)
    LOGGER.debug("Envelope constant %.4g over %d samples", fit.constant, ratios.size)
    return fit


def relative_change(coarse: float, fine: float) -> float:
    """|fine - coarse| / max(|coarse|, |fine|): the refinement stability measure."""
    scale = max(abs(coarse), abs(fine))
    return 0.0 if scale == 0 else abs(fine - coarse) / scale


def xi_gain(xi, n: float, logs: float = 0.0) -> np.ndarray:
    """(1 + |xi|)^{-n} ln^logs(2 + |xi|)."""
    xi = np.abs(np.asarray(xi, dtype=float))
    return (1.0 + xi) ** (-n) * np.log(2.0 + xi) ** logs


def local_maxima(x, values) -> np.ndarray:
    """Positions of the strict interior local maxima of a sampled profile."""
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    inner = (values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])
    return x[1:-1][inner]
