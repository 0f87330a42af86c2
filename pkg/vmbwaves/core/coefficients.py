# vmbwaves/core/coefficients.py
# Transport coefficients and high-frequency expansion ingredients.
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad_vec

from vmbwaves.core.collision import CollisionMatrices, collision_frequency_speed, solve_microscopic
from vmbwaves.core.velocity import (
    MAXWELLIAN_NORM,
    GridFunction,
    MacroBasis,
    VelocityGrid,
    field_couplings,
    inner_product,
    project,
)
from vmbwaves.exceptions import ConvergenceError, UsageError

LOGGER = logging.getLogger(__name__)

SOUND_SPEED = float(np.sqrt(5.0 / 3.0))
ENERGY_LABELS = (-1, 0, 1, 2, 3)
CONTINUUM_CUTOFF = 12.0


def speeds() -> dict[int, float]:
    """Characteristic speeds sigma_{-2..2}."""
    return {-2: -SOUND_SPEED, -1: -1.0, 0: 0.0, 1: 1.0, 2: SOUND_SPEED}


def alpha_j(xi: complex, j: int) -> complex:
    """Eigenvalues of the free Maxwell block: -i xi for j = 1, 2 and +i xi for j = 3, 4."""
    if j in (1, 2):
        return -1j * xi
    if j in (3, 4):
        return 1j * xi
    raise UsageError(f"High-frequency index must be 1..4, got {j}")


def compute_a1(matrices: CollisionMatrices) -> float:
    """a1 = -1 / (L1^{-1} chi2, chi2)."""
    basis = matrices.basis
    g = solve_microscopic(matrices, "L1", basis.chi2)
    pairing = inner_product(g, basis.chi2, matrices.grid).real
    if pairing >= 0:
        raise ConvergenceError(f"(L1^-1 chi2, chi2) = {pairing:.3e} should be negative")
    return -1.0 / pairing


def energy_modes(basis: MacroBasis) -> dict[int, GridFunction]:
    """Zero-frequency Boltzmann fluid eigenfunctions E_j, j = -1..3."""
    chi0, chi1, chi4 = basis.chi0, basis.chi1, basis.chi4
    acoustic = np.sqrt(3.0 / 10.0) * chi0.coeffs + np.sqrt(1.0 / 5.0) * chi4.coeffs
    return {
        -1: GridFunction(0, acoustic - np.sqrt(0.5) * chi1.coeffs),
        0: GridFunction(0, np.sqrt(2.0 / 5.0) * chi0.coeffs - np.sqrt(3.0 / 5.0) * chi4.coeffs),
        1: GridFunction(0, acoustic + np.sqrt(0.5) * chi1.coeffs),
        2: basis.chi2,
        3: basis.chi3,
    }


def compute_Aj(matrices: CollisionMatrices, j: int) -> float:
    """A_j = -(L^{-1} P1 v1 E_j, v1 E_j)."""
    if j not in ENERGY_LABELS:
        raise UsageError(f"A_j is defined for j in {ENERGY_LABELS}, got {j}")
    grid = matrices.grid
    mode = energy_modes(matrices.basis)[j]
    flux = GridFunction(mode.sector, grid.v1 * mode.coeffs)
    g = solve_microscopic(matrices, "L", project(flux, "P1", matrices.basis))
    return float(-inner_product(g, flux, grid).real)


def _grid_moment(xi: complex, j: int, power: int, grid: VelocityGrid, chi2: np.ndarray) -> complex:
    denominator = collision_frequency_speed(grid.speed) + 1j * grid.v1 * xi + alpha_j(xi, j)
    return complex(np.sum(grid.weights(1) * chi2**2 / denominator**power))


def _continuum_moment(xi: complex, j: int, power: int, cutoff: float = CONTINUUM_CUTOFF, n_r: int = 48) -> complex:
    """int v2^2 M / (nu + i v1 xi + alpha_j)^power over R^3."""
    y, wy = leggauss(n_r)
    r = 0.5 * cutoff * (y + 1.0)
    w = 0.5 * cutoff * wy * np.pi * r**3
    alpha = alpha_j(xi, j)

    def integrand(v1):
        speed_sq = v1**2 + r**2
        values = w * MAXWELLIAN_NORM * np.exp(-0.5 * speed_sq) / (
            collision_frequency_speed(np.sqrt(speed_sq)) + 1j * v1 * xi + alpha
        ) ** power
        total = np.sum(values)
        return np.array([total.real, total.imag])

    value, error = quad_vec(integrand, -cutoff, cutoff, epsabs=1e-13, epsrel=1e-10, points=(-1.0, 0.0, 1.0))
    if not np.all(np.isfinite(value)) or error > 1e-6 * max(1.0, float(np.abs(value).max())):
        raise ConvergenceError(f"Velocity quadrature did not converge at xi={xi} (error estimate {error:.2e})")
    return complex(value[0], value[1])


def gamma_j(xi: complex, j: int, grid: VelocityGrid | None = None, basis: MacroBasis | None = None) -> complex:
    """gamma_j(xi) = -1/2 int v2^2 M / (nu + i v1 xi + alpha_j) dv.

    With a grid (and its basis) the node quadrature is used, which matches the discrete high branch.
    """
    if grid is not None:
        chi2 = field_couplings(basis)[1] if basis is not None else _raw_chi2(grid)
        return -0.5 * _grid_moment(xi, j, 1, grid, chi2)
    return -0.5 * _continuum_moment(xi, j, 1)


def d_j(xi: complex, j: int, grid: VelocityGrid | None = None, basis: MacroBasis | None = None) -> complex:
    """d_j(xi) = 1/2 int v2^2 M / (nu + i v1 xi + alpha_j)^2 dv."""
    if grid is not None:
        chi2 = field_couplings(basis)[1] if basis is not None else _raw_chi2(grid)
        return 0.5 * _grid_moment(xi, j, 2, grid, chi2)
    return 0.5 * _continuum_moment(xi, j, 2)


def _raw_chi2(grid: VelocityGrid) -> np.ndarray:
    return grid.r * np.sqrt(MAXWELLIAN_NORM * np.exp(-0.5 * grid.speed_squared))


def gamma_bounds(xis, j: int = 1, **kwargs) -> dict[str, float]:
    """(min, max) of -Re gamma (1+|xi|) and max of |Im gamma| (1+|xi|)/ln(2+|xi|) over the samples."""
    xis = np.asarray(xis, dtype=float)
    values = np.array([gamma_j(xi, j, **kwargs) for xi in xis])
    scaled = -values.real * (1.0 + np.abs(xis))
    imag = np.abs(values.imag) * (1.0 + np.abs(xis)) / np.log(2.0 + np.abs(xis))
    return {"C1": float(scaled.min()), "C2": float(scaled.max()), "C3": float(imag.max())}


@dataclass
class CoefficientReport:
    a1: float
    A: dict[int, float]
    speeds: dict[int, float] = field(default_factory=speeds)
    grid_hash: str = ""
    mu: float = 0.0
    nu0: float = 0.0
    nu1: float = 0.0

    def to_dict(self) -> dict:
        data = asdict(self)
        data["A"] = {str(key): value for key, value in self.A.items()}
        data["speeds"] = {str(key): value for key, value in self.speeds.items()}
        return data


def coefficient_report(matrices: CollisionMatrices) -> CoefficientReport:
    a1 = compute_a1(matrices)
    A = {j: compute_Aj(matrices, j) for j in ENERGY_LABELS}
    LOGGER.info("a1=%.8g, A=%s", a1, A)
    return CoefficientReport(
        a1=a1,
        A=A,
        grid_hash=matrices.grid.digest(),
        mu=matrices.mu,
        nu0=matrices.nu0,
        nu1=matrices.nu1,
    )


def transverse_samples(xis, j: int, matrices: CollisionMatrices, chunk: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    """gamma_j and d_j on many frequencies at once, by the node quadrature of gamma_j(grid=...)."""
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    grid = matrices.grid
    profile = grid.weights(1) * field_couplings(matrices.basis)[1] ** 2
    gammas = np.empty(xis.size, dtype=complex)
    ds = np.empty(xis.size, dtype=complex)
    for start in range(0, xis.size, chunk):
        block = xis[start:start + chunk]
        alphas = np.array([alpha_j(xi, j) for xi in block])
        denominator = matrices.nu[None, :] + 1j * block[:, None] * grid.v1[None, :] + alphas[:, None]
        gammas[start:start + chunk] = -0.5 * np.sum(profile / denominator, axis=1)
        ds[start:start + chunk] = 0.5 * np.sum(profile / denominator**2, axis=1)
    return gammas, ds
