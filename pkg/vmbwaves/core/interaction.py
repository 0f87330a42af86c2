# vmbwaves/core/interaction.py
# Wave profiles, the space-time interaction integrals I, J, K, L and their certified bounds.
"""
All four integrals share the shape

    int_{t1}^{t2} int_R kernel(t - s, x - y) (1 + s)^{-beta/2} B_{gamma/2}(s, y - mu s) dy ds

with a diffusive kernel (I), an exponentially localized hyperbolic kernel (J), a compactly
supported pulse (K) and a transport kernel exp(-(|x - y| + t - s) / D) (L). The y integral is
taken over the window where the kernel is not negligible, the s integral adaptively.

A bound is certified by sampling value / reference over (t, x) grids: the ratio has to stay
finite and stable when the x grid is refined.
"""
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from vmbwaves.core.fitting import relative_change
from vmbwaves.exceptions import ConvergenceError, ParameterError, UsageError

LOGGER = logging.getLogger(__name__)

KINDS = ("I", "J", "K", "L")
GAUSSIAN_REACH = 10.0
EXPONENTIAL_REACH = 30.0
INNER_TOL = 1e-8
OUTER_TOL = 1e-6
QUAD_LIMIT = 200
SHIFT_SAMPLES = 401
STABILITY_TOL = 0.25


@dataclass(frozen=True)
class WaveParams:
    alpha: float = 2.0
    beta: float = 2.0
    gamma: float = 1.5
    lam: float = 0.0
    mu: float = 0.0
    D: float = 1.0
    nu0: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def profile_B(beta: float, t, x, lam: float = 0.0):
    """B_{beta/2}(t, x - lam t) = (1 + |x - lam t|^2 / (1 + t))^{-beta/2}."""
    if beta < 0:
        raise UsageError(f"Profile exponent must be nonnegative, got {beta}")
    t = np.asarray(t, dtype=float)
    shifted = np.asarray(x, dtype=float) - lam * t
    return (1.0 + shifted**2 / (1.0 + t)) ** (-0.5 * beta)


def gamma_fn(alpha: float, t):
    """Gamma_alpha(t) = int_0^t (1 + s)^{-alpha/2} ds in closed form."""
    t = np.asarray(t, dtype=float)
    if alpha == 2:
        return np.log1p(t)
    power = 1.0 - 0.5 * alpha
    return ((1.0 + t) ** power - 1.0) / power


def pulse(alpha: float, t, offset):
    """A nonnegative pulse supported in |offset| <= 1 with mass (1 + t)^{-alpha/2}: a scaled indicator."""
    offset = np.asarray(offset, dtype=float)
    return np.where(np.abs(offset) <= 1.0, 0.5 * (1.0 + np.asarray(t, dtype=float)) ** (-0.5 * alpha), 0.0)


def _kernel(kind: str, p: WaveParams) -> Callable[[float, float], float]:
    """kernel(tau, z) with tau = t - s and z = x - y."""
    if kind == "I":
        return lambda tau, z: (1 + tau) ** (-0.5 * p.alpha) * math.exp(-((z - p.lam * tau) ** 2) / (p.D * (1 + tau)))
    if kind == "J":
        return lambda tau, z: (1 + tau) ** (-0.5 * p.alpha) * math.exp(-0.5 * p.nu0 * abs(z - p.lam * tau))
    if kind == "K":
        return lambda tau, z: float(pulse(p.alpha, tau, z - p.lam * tau))
    if kind == "L":
        return lambda tau, z: math.exp(-(abs(z) + tau) / p.D)
    raise UsageError(f"Unknown interaction integral {kind!r}; choose from {', '.join(KINDS)}")


def _window(kind: str, p: WaveParams, t: float, s: float, x: float) -> tuple[float, float, list[float]]:
    """y interval carrying the kernel at time s, and the kink points inside it."""
    tau = t - s
    centre = x - p.lam * tau
    if kind == "I":
        half = GAUSSIAN_REACH * math.sqrt(p.D * (1 + tau))
    elif kind == "J":
        half = 2.0 * EXPONENTIAL_REACH / p.nu0
    elif kind == "K":
        half = 1.0
    else:
        centre = x
        half = EXPONENTIAL_REACH * p.D
    lower, upper = centre - half, centre + half
    kinks = [point for point in (centre, p.mu * s) if lower < point < upper]
    return lower, upper, kinks


def _quad(func, lower, upper, points, tol, where: str) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(func, lower, upper, points=points or None, epsrel=tol, epsabs=1e-15, limit=QUAD_LIMIT)
        except IntegrationWarning as e:
            raise ConvergenceError(f"Quadrature did not reach the tolerance {tol:g} on {where}: {e}") from e
    return value


def integral(kind: str, params: WaveParams, t: float, x: float, t1: float = 0.0, t2: float | None = None) -> float:
    """I, J, K or L at (t, x) over s in [t1, t2] (t2 defaults to t)."""
    kernel = _kernel(kind, params)
    t2 = t if t2 is None else t2
    if not 0 <= t1 <= t2 <= t:
        raise UsageError(f"Need 0 <= t1 <= t2 <= t, got t1={t1}, t2={t2}, t={t}")
    if t2 == t1:
        return 0.0
    beta, gamma, mu = params.beta, params.gamma, params.mu

    def inner(s: float) -> float:
        lower, upper, kinks = _window(kind, params, t, s, x)

        def integrand(y: float) -> float:
            return kernel(t - s, x - y) * float(profile_B(gamma, s, y, mu))

        value = _quad(integrand, lower, upper, kinks, INNER_TOL, f"the y cell [{lower:.4g}, {upper:.4g}] at s={s:.4g}")
        return (1 + s) ** (-0.5 * beta) * value

    return _quad(inner, t1, t2, [], OUTER_TOL, f"the s range [{t1:.4g}, {t2:.4g}] at t={t:.4g}, x={x:.4g}")


def convolution(params: WaveParams, t: float, x: float) -> float:
    """int exp(-|x - y - lam t|^2 / (D (1 + t))) (1 + t)^{-alpha/2} (1 + y^2)^{-gamma/2} dy."""
    centre = x - params.lam * t
    half = GAUSSIAN_REACH * math.sqrt(params.D * (1 + t))
    scale = (1 + t) ** (-0.5 * params.alpha)

    def integrand(y: float) -> float:
        return scale * math.exp(-((centre - y) ** 2) / (params.D * (1 + t))) * (1 + y * y) ** (-0.5 * params.gamma)

    kinks = [0.0] if abs(centre) < half else []
    return _quad(integrand, centre - half, centre + half, kinks, INNER_TOL, f"the convolution at t={t:.4g}, x={x:.4g}")


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int

    def agrees(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(value - self.mean) <= sigmas * self.stderr


def monte_carlo(kind: str, params: WaveParams, t: float, x: float, *, samples: int = 1_000_000,
                seed: int = 0, t1: float = 0.0, t2: float | None = None) -> MonteCarloEstimate:
    """Importance-sampled estimate: s uniform on [t1, t2], y drawn from the kernel's own shape."""
    _kernel(kind, params)
    t2 = t if t2 is None else t2
    if t2 <= t1:
        return MonteCarloEstimate(0.0, 0.0, samples)
    rng = np.random.default_rng(seed)
    p = params
    s = rng.uniform(t1, t2, samples)
    tau = t - s
    centre = x - p.lam * tau
    decay = (1 + tau) ** (-0.5 * p.alpha)
    if kind == "I":
        variance = 0.5 * p.D * (1 + tau)
        y = centre + np.sqrt(variance) * rng.standard_normal(samples)
        weight = decay * np.sqrt(np.pi * p.D * (1 + tau))
    elif kind == "J":
        y = centre + rng.laplace(0.0, 2.0 / p.nu0, samples)
        weight = decay * 4.0 / p.nu0
    elif kind == "K":
        y = centre + rng.uniform(-1.0, 1.0, samples)
        weight = decay
    else:
        y = x + rng.laplace(0.0, p.D, samples)
        weight = 2.0 * p.D * np.exp(-tau / p.D)
    values = (t2 - t1) * weight * (1 + s) ** (-0.5 * p.beta) * profile_B(p.gamma, s, y, p.mu)
    return MonteCarloEstimate(float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples)), samples)


def _between(p: WaveParams, t: float, x):
    root = math.sqrt(1 + t)
    x = np.asarray(x, dtype=float)
    return (x >= p.lam * t + root) & (x <= p.mu * t - root)


def _rays(p: WaveParams, t: float, x):
    both = profile_B(p.gamma, t, x, p.lam)
    if p.mu != p.lam:
        both = both + profile_B(p.gamma, t, x, p.mu)
    return both


def _diffusive_rate(p: WaveParams, t: float) -> float:
    return (1 + t) ** (-0.5 * p.alpha) * gamma_fn(p.beta - 1, t) + (1 + t) ** (-0.5 * p.beta) * gamma_fn(p.alpha - 1, t)


def _hyperbolic_rate(p: WaveParams, t: float) -> float:
    return (1 + t) ** (-0.5 * p.alpha) * gamma_fn(p.beta, t) + (1 + t) ** (-0.5 * p.beta) * gamma_fn(p.alpha, t)


def _diffusive_plateau(p: WaveParams, t: float, x, early: bool = True, late: bool = True):
    """Terms between the two speeds: (1+t)^{-(alpha-1)/2} (1+x-lam t)^{-(beta-1)/2} and its mirror."""
    x = np.asarray(x, dtype=float)
    inside = _between(p, t, x)
    left = np.maximum(1 + x - p.lam * t, 1.0)
    right = np.maximum(1 + p.mu * t - x, 1.0)
    total = np.zeros_like(x)
    if early:
        total = total + (1 + t) ** (-0.5 * (p.alpha - 1)) * left ** (-0.5 * (p.beta - 1))
    if late:
        total = total + (1 + t) ** (-0.5 * (p.beta - 1)) * right ** (-0.5 * (p.alpha - 1))
    return np.where(inside, total, 0.0)


def _hyperbolic_plateau(p: WaveParams, t: float, x):
    x = np.asarray(x, dtype=float)
    inside = _between(p, t, x)
    spread = float(gamma_fn(2 * p.gamma, math.sqrt(1 + t)))
    left = np.maximum(1 + x - p.lam * t, 1.0)
    right = np.maximum(1 + p.mu * t - x, 1.0)
    total = (1 + t) ** (-0.5 * (p.alpha - 1)) * spread * left ** (-0.5 * p.beta)
    total = total + (1 + t) ** (-0.5 * (p.beta - 1)) * spread * right ** (-0.5 * p.alpha)
    return np.where(inside, total, 0.0)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterError(message)


def _check_diffusive(p: WaveParams, cross: bool) -> None:
    _require(p.alpha >= 1 and p.beta >= 1, f"Needs alpha, beta >= 1 (got {p.alpha}, {p.beta})")
    _require(p.gamma > 1, f"Needs gamma > 1 (got {p.gamma})")
    _require(p.D > 0, f"Needs D > 0 (got {p.D})")
    if cross:
        _require(p.lam < p.mu, f"Needs lam < mu (got {p.lam}, {p.mu})")


def _check_localized(p: WaveParams, cross: bool) -> None:
    _require(p.alpha >= 1 and p.beta >= 1, f"Needs alpha, beta >= 1 (got {p.alpha}, {p.beta})")
    _require(p.gamma >= 1, f"Needs gamma >= 1 (got {p.gamma})")
    _require(p.nu0 > 0, f"Needs nu0 > 0 (got {p.nu0})")
    if cross:
        _require(p.lam < p.mu, f"Needs lam < mu (got {p.lam}, {p.mu})")


def _speed_positions(p: WaveParams, t: float, count: int, widths: float = 5.0) -> np.ndarray:
    """x grid covering both rays and the gap between them, widths * sqrt(1 + t) beyond each."""
    root = math.sqrt(1 + t)
    low, high = min(p.lam, p.mu) * t, max(p.lam, p.mu) * t
    return np.linspace(low - widths * root, high + widths * root, count)


def _shift_positions(p: WaveParams, t: float, count: int) -> np.ndarray:
    """A values with A^2 >= 1 + t."""
    return math.sqrt(1 + t) * np.linspace(1.0, 5.0, count)


def _shift_gaussian_value(p: WaveParams, t: float, A: float) -> float:
    s = np.linspace(0.0, t, SHIFT_SAMPLES)
    return float(np.max(np.exp(-A**2 / (p.D * (1 + s))) * ((1 + s) / (1 + t)) ** p.alpha))


def _shift_algebraic_value(p: WaveParams, t: float, A: float) -> float:
    s = np.linspace(0.0, t, SHIFT_SAMPLES)
    return float(np.max((1 + A**2 / (1 + s)) ** (-p.alpha) * ((1 + t) / (1 + s)) ** p.alpha))


def _check_shift(p: WaveParams, cross: bool) -> None:
    _require(p.alpha >= 0, f"Needs alpha >= 0 (got {p.alpha})")
    _require(p.D > 0, f"Needs D > 0 (got {p.D})")


def _check_convolution(p: WaveParams, cross: bool) -> None:
    _require(p.D > 0, f"Needs D > 0 (got {p.D})")
    _require(p.gamma > 1, f"Needs gamma > 1 (got {p.gamma})")


def _check_transport(p: WaveParams, cross: bool) -> None:
    _require(p.beta >= 0 and p.gamma >= 0, f"Needs beta, gamma >= 0 (got {p.beta}, {p.gamma})")
    _require(p.D > 0, f"Needs D > 0 (got {p.D})")


@dataclass(frozen=True)
class Lemma:
    """One certified inequality: value(p, t, x) <= C bound(p, t, x) for every admissible sample."""

    name: str
    description: str
    check: Callable[[WaveParams, bool], None]
    value: Callable[[WaveParams, float, float], float]
    bound: Callable[[WaveParams, float, np.ndarray], np.ndarray]
    positions: Callable[[WaveParams, float, int], np.ndarray] = _speed_positions
    cross: bool = False
    kind: str | None = None

    def prepare(self, params: WaveParams) -> WaveParams:
        if not self.cross:
            params = replace(params, mu=params.lam)
        self.check(params, self.cross)
        return params


def _integral_value(kind: str, window: str = "full"):
    def value(p: WaveParams, t: float, x: float) -> float:
        t1, t2 = {"full": (0.0, t), "early": (0.0, 0.5 * t), "late": (0.5 * t, t)}[window]
        return integral(kind, p, t, x, t1, t2)

    return value


def _diffusive_bound(p, t, x):
    bound = _diffusive_rate(p, t) * _rays(p, t, x)
    return bound + _diffusive_plateau(p, t, x) if p.mu != p.lam else bound


def _early_bound(p, t, x):
    bound = (1 + t) ** (-0.5 * p.alpha) * gamma_fn(p.beta - 1, t) * _rays(p, t, x)
    return bound + _diffusive_plateau(p, t, x, late=False) if p.mu != p.lam else bound


def _late_bound(p, t, x):
    bound = (1 + t) ** (-0.5 * p.beta) * gamma_fn(p.alpha - 1, t) * _rays(p, t, x)
    return bound + _diffusive_plateau(p, t, x, early=False) if p.mu != p.lam else bound


def _hyperbolic_bound(p, t, x):
    bound = _hyperbolic_rate(p, t) * _rays(p, t, x)
    return bound + _hyperbolic_plateau(p, t, x) if p.mu != p.lam else bound


LEMMAS: dict[str, Lemma] = {
    lemma.name: lemma
    for lemma in (
        Lemma(
            "convolution",
            "Gaussian kernel against an algebraic tail keeps the algebraic profile",
            _check_convolution,
            convolution,
            lambda p, t, x: (1 + t) ** (-0.5 * p.alpha) * profile_B(p.gamma, t, x, p.lam),
        ),
        Lemma("diffusive", "I on one speed", _check_diffusive, _integral_value("I"), _diffusive_bound, kind="I"),
        Lemma("diffusive-cross", "I across two speeds, with the plateau between them", _check_diffusive,
              _integral_value("I"), _diffusive_bound, cross=True, kind="I"),
        Lemma("diffusive-early", "I over s in [0, t/2]", _check_diffusive, _integral_value("I", "early"),
              _early_bound, cross=True, kind="I"),
        Lemma("diffusive-late", "I over s in [t/2, t]", _check_diffusive, _integral_value("I", "late"),
              _late_bound, cross=True, kind="I"),
        Lemma("shift-gaussian", "Gaussian factor moved from time s to time t", _check_shift,
              _shift_gaussian_value, lambda p, t, A: np.exp(-np.asarray(A) ** 2 / (p.D * (1 + t))),
              positions=_shift_positions),
        Lemma("shift-algebraic", "algebraic factor moved from time s to time t (constant 2^alpha)", _check_shift,
              _shift_algebraic_value, lambda p, t, A: 2.0**p.alpha * (1 + np.asarray(A) ** 2 / (1 + t)) ** (-p.alpha),
              positions=_shift_positions),
        Lemma("hyperbolic", "J on one speed", _check_localized, _integral_value("J"), _hyperbolic_bound, kind="J"),
        Lemma("hyperbolic-cross", "J across two speeds", _check_localized, _integral_value("J"),
              _hyperbolic_bound, cross=True, kind="J"),
        Lemma("localized", "K on one speed", _check_localized, _integral_value("K"), _hyperbolic_bound, kind="K"),
        Lemma("localized-cross", "K across two speeds", _check_localized, _integral_value("K"),
              _hyperbolic_bound, cross=True, kind="K"),
        Lemma("transport", "L: exponentially damped transport", _check_transport, _integral_value("L"),
              lambda p, t, x: (1 + t) ** (-0.5 * p.beta) * profile_B(p.gamma, t, x, p.lam), kind="L"),
    )
}


def get_lemma(name: str) -> Lemma:
    try:
        return LEMMAS[name]
    except KeyError:
        raise UsageError(f"Unknown bound {name!r}; choose from {', '.join(LEMMAS)}") from None


@dataclass
class InteractionResult:
    lemma: str
    params: WaveParams
    times: np.ndarray
    positions: np.ndarray
    values: np.ndarray
    bounds: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.values / self.bounds

    @property
    def bound_ratio(self) -> float:
        return float(np.max(self.ratios))

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params.to_dict(),
            "times": self.times.tolist(),
            "bound_ratio": self.bound_ratio,
        }


def evaluate(name: str, params: WaveParams, times, count: int = 11) -> InteractionResult:
    """value and reference bound on count positions per time (positions depend on t)."""
    lemma = get_lemma(name)
    params = lemma.prepare(params)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    positions, values, bounds = [], [], []
    for t in times:
        xs = lemma.positions(params, float(t), count)
        positions.append(xs)
        values.append([lemma.value(params, float(t), float(x)) for x in xs])
        bounds.append(lemma.bound(params, float(t), xs))
    values = np.array(values, dtype=float)
    if np.any(values < -1e-12):
        raise ConvergenceError(f"{name}: negative integral value {values.min():.3g}")
    result = InteractionResult(name, params, times, np.array(positions), np.maximum(values, 0.0), np.array(bounds))
    LOGGER.debug("%s: bound ratio %.4g over %d samples", name, result.bound_ratio, values.size)
    return result


@dataclass
class Certification:
    lemma: str
    params: WaveParams
    coarse: InteractionResult = field(repr=False)
    fine: InteractionResult = field(repr=False)

    @property
    def max_ratio(self) -> float:
        return self.fine.bound_ratio

    @property
    def change(self) -> float:
        return relative_change(self.coarse.bound_ratio, self.fine.bound_ratio)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_ratio) and self.change <= STABILITY_TOL)

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params.to_dict(),
            "coarse_ratio": self.coarse.bound_ratio,
            "max_ratio": self.max_ratio,
            "relative_change": self.change,
            "passed": self.passed,
        }


def certify_bounds(name: str, params: WaveParams, times=(4.0, 16.0, 64.0), count: int = 11) -> Certification:
    """Max bound ratio on a position grid and on its refinement (2 count - 1 points)."""
    coarse = evaluate(name, params, times, count)
    fine = evaluate(name, params, times, 2 * count - 1)
    certification = Certification(name, coarse.params, coarse, fine)
    LOGGER.info("%s: max ratio %.4g (change %.2f%% under refinement)", name, certification.max_ratio,
                100 * certification.change)
    return certification


def ray_scan(name: str, params: WaveParams, times, speeds=None, count: int = 9) -> dict[float, np.ndarray]:
    """Bound ratios along rays x = c t; by default count speeds spanning [lam - 1, mu + 1]."""
    lemma = get_lemma(name)
    if lemma.positions is _shift_positions:
        raise UsageError(f"{name} is not a space-time bound")
    params = lemma.prepare(params)
    if speeds is None:
        speeds = np.linspace(params.lam - 1.0, params.mu + 1.0, count)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    scan = {}
    for c in speeds:
        values = np.array([lemma.value(params, float(t), float(c * t)) for t in times])
        bounds = np.array([float(lemma.bound(params, float(t), np.array([c * t]))[0]) for t in times])
        scan[float(c)] = values / bounds
    return scan
