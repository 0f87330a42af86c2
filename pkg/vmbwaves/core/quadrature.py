# vmbwaves/core/quadrature.py
# Panel (Filon-type) quadrature for Fourier synthesis integrals.
"""
Fourier synthesis on uniform panels.

    int_a^b f(xi) exp(i x xi) dxi

is integrated exactly against the piecewise-quadratic interpolant of f on panels of three nodes,
so the step is bounded by the smoothness of f rather than by |x|. With s in [-1, 1] on a panel
centred at xi_m with half-width h,

    int p(s) exp(i x (xi_m + h s)) h ds = h exp(i x xi_m) (w_- f_- + w_0 f_0 + w_+ f_+),

with w_- = (mu2 - mu1) / 2, w_0 = mu0 - mu2, w_+ = (mu2 + mu1) / 2 and mu_k the moments
int_{-1}^{1} s^k exp(i theta s) ds at theta = x h.
"""
import logging

import numpy as np

from vmbwaves.exceptions import ResolutionError, UsageError

LOGGER = logging.getLogger(__name__)

SMALL_THETA = 0.2
OSCILLATION_LIMIT = np.pi / 4


def panel_grid(lower: float, upper: float, panels: int) -> np.ndarray:
    """2 * panels + 1 equally spaced nodes on [lower, upper]."""
    if panels < 1 or upper <= lower:
        raise UsageError(f"A panel grid needs lower < upper and at least one panel (got {lower}, {upper}, {panels})")
    return np.linspace(lower, upper, 2 * panels + 1)


def moments(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """mu0, mu1, mu2 of exp(i theta s) on [-1, 1]; Taylor series for small |theta|."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < SMALL_THETA
    safe = np.where(small, 1.0, theta)
    sin, cos = np.sin(safe), np.cos(safe)

    mu0 = 2.0 * sin / safe
    mu1 = 2j * (sin - safe * cos) / safe**2
    mu2 = 2.0 * ((safe**2 - 2.0) * sin + 2.0 * safe * cos) / safe**3

    t2 = theta**2
    mu0_series = 2.0 * (1.0 - t2 / 6.0 + t2**2 / 120.0 - t2**3 / 5040.0)
    mu1_series = 2j * theta * (1.0 / 3.0 - t2 / 30.0 + t2**2 / 840.0 - t2**3 / 45360.0)
    mu2_series = 2.0 * (1.0 / 3.0 - t2 / 10.0 + t2**2 / 168.0 - t2**3 / 6480.0)
    return (
        np.where(small, mu0_series, mu0),
        np.where(small, mu1_series, mu1),
        np.where(small, mu2_series, mu2),
    )


def check_resolution(xi: np.ndarray, x, limit: float = OSCILLATION_LIMIT) -> None:
    step = float(xi[1] - xi[0])
    reach = float(np.max(np.abs(x)))
    if step * reach > limit:
        panels = int(np.ceil((xi[-1] - xi[0]) * reach / (2.0 * limit)))
        raise ResolutionError(
            f"xi step {step:.3g} is too coarse for |x| up to {reach:.3g} "
            f"(step * |x| = {step * reach:.3g} > {limit:.3g}); use at least {panels} panels"
        )


def filon_fourier(values: np.ndarray, xi: np.ndarray, x, *, limit: float | None = OSCILLATION_LIMIT) -> np.ndarray:
    """int f(xi) exp(i x xi) dxi for every x.

    values has the xi samples on axis 0 and any trailing shape; the result has shape
    (len(x),) + trailing.
    """
    values = np.asarray(values)
    xi = np.asarray(xi, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if values.shape[0] != xi.size or xi.size < 3 or xi.size % 2 == 0:
        raise UsageError(f"Filon quadrature needs an odd number (>= 3) of samples, got {xi.size} nodes "
                         f"and {values.shape[0]} values")
    if limit is not None:
        check_resolution(xi, x, limit)

    h = 0.5 * (xi[2] - xi[0])
    centres = xi[1::2]
    lower, middle, upper = values[0:-1:2], values[1::2], values[2::2]
    mu0, mu1, mu2 = moments(x * h)
    w_lower, w_middle, w_upper = 0.5 * (mu2 - mu1), mu0 - mu2, 0.5 * (mu2 + mu1)

    phase = np.exp(1j * np.outer(x, centres))
    flat = [part.reshape(part.shape[0], -1) for part in (lower, middle, upper)]
    total = h * (
        (w_lower[:, None] * phase) @ flat[0]
        + (w_middle[:, None] * phase) @ flat[1]
        + (w_upper[:, None] * phase) @ flat[2]
    )
    return total.reshape((x.size,) + values.shape[1:])


def inverse_fourier(values: np.ndarray, xi: np.ndarray, x, **kwargs) -> np.ndarray:
    """(1 / 2 pi) int f(xi) exp(i x xi) dxi: the inverse transform with G(0, x) = delta(x)."""
    return filon_fourier(values, xi, x, **kwargs) / (2.0 * np.pi)


def symmetric_bands(lower: float, upper: float, panels: int) -> list[np.ndarray]:
    """Panel grids on [-upper, -lower] and [lower, upper]."""
    return [-panel_grid(lower, upper, panels)[::-1], panel_grid(lower, upper, panels)]
