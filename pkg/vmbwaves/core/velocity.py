# vmbwaves/core/velocity.py
# Velocity-space discretization in azimuthal sectors about the v1 axis.
"""
Velocity grid, grid functions and the macroscopic basis.

A function of v in R^3 that transforms like e^{i m phi} about the v1 axis is stored
through its profile on the half plane (v1, r), r = sqrt(v2^2 + v3^2). Sector m = 0
holds rotation-invariant profiles; sector m = 1 holds the cos(phi) (or sin(phi))
coefficient. The node set is a Gauss-Legendre column in v1 on [-R, R], and for each
column a Gauss-Legendre set in r on (0, sqrt(R^2 - v1^2)], so the grid covers the
ball |v| <= R. Weights include the azimuthal measure: 2 pi r for m = 0 and pi r for
m = 1 (the integral of cos^2 over a period).
"""
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.polynomial.legendre import leggauss

from vmbwaves.exceptions import ConfigurationError, UsageError

LOGGER = logging.getLogger(__name__)

MAXWELLIAN_NORM = (2.0 * np.pi) ** -1.5
MIN_NODES = 8
MIN_CUTOFF = 6.0
SECTOR_MEASURE = {0: 2.0 * np.pi, 1: np.pi}

Projection = Literal["P0", "P1", "Pd", "Pr"]


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    R: float
    n_v1: int
    n_r: int
    v1: np.ndarray
    r: np.ndarray
    base_weights: np.ndarray
    column: np.ndarray
    mirror: np.ndarray

    @property
    def size(self) -> int:
        return self.v1.size

    @property
    def v1_widths(self) -> np.ndarray:
        """Width of each node's v1 cell, the Gauss-Legendre weight of its column."""
        _, w = leggauss(self.n_v1)
        return (0.5 * self.R * (w + w[::-1]))[self.column]

    @property
    def speed_squared(self) -> np.ndarray:
        return self.v1**2 + self.r**2

    @property
    def speed(self) -> np.ndarray:
        return np.sqrt(self.speed_squared)

    def weights(self, sector: int) -> np.ndarray:
        """Quadrature weights of the sector inner product."""
        if sector not in SECTOR_MEASURE:
            raise UsageError(f"Sector must be 0 or 1, got {sector}")
        return SECTOR_MEASURE[sector] * self.r * self.base_weights

    def digest(self) -> str:
        """Hash identifying the node set; used to key cached matrices."""
        sha = hashlib.sha256()
        sha.update(f"{self.R!r}:{self.n_v1}:{self.n_r}".encode())
        for array in (self.v1, self.r, self.base_weights):
            sha.update(np.ascontiguousarray(array, dtype=np.float64).tobytes())
        return sha.hexdigest()

    def rows(self) -> list[dict]:
        """One record per node: v1, r and the sector 0 weight."""
        return [{"v1": v1, "r": r, "weight": weight} for v1, r, weight in zip(self.v1, self.r, self.weights(0))]


@dataclass(frozen=True, eq=False)
class GridFunction:
    sector: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.sector not in SECTOR_MEASURE:
            raise UsageError(f"Sector must be 0 or 1, got {self.sector}")
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim != 1:
            raise UsageError("GridFunction coefficients must be a flat node vector")
        if not np.all(np.isfinite(coeffs)):
            raise UsageError("GridFunction coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    def _check(self, other: "GridFunction"):
        if other.sector != self.sector:
            raise UsageError(f"Sector mismatch: {self.sector} vs {other.sector}")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.sector, self.coeffs + other.coeffs)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.sector, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "GridFunction":
        return GridFunction(self.sector, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.sector, -self.coeffs)


@dataclass(frozen=True, eq=False)
class MacroBasis:
    """chi0, chi1, chi4 live in sector 0; chi2 and chi3 share the sector 1 profile
    (cos and sin components of v2 sqrt(M), v3 sqrt(M))."""

    chi0: GridFunction
    chi1: GridFunction
    chi2: GridFunction
    chi3: GridFunction
    chi4: GridFunction
    grid: VelocityGrid = field(repr=False)

    def member(self, j: int) -> GridFunction:
        return (self.chi0, self.chi1, self.chi2, self.chi3, self.chi4)[j]

    def sector_members(self, sector: int) -> tuple[GridFunction, ...]:
        if sector == 0:
            return (self.chi0, self.chi1, self.chi4)
        return (self.chi2,)


def build_grid(R: float = 8.0, n_v1: int = 30, n_r: int = 16) -> VelocityGrid:
    """Builds the (v1, r) node set covering the ball |v| <= R."""
    if R <= 0:
        raise ConfigurationError(f"Cutoff R must be positive, got {R}")
    if n_v1 < MIN_NODES or n_r < MIN_NODES:
        raise ConfigurationError(f"Need at least {MIN_NODES} nodes per direction, got n_v1={n_v1}, n_r={n_r}")
    if R < MIN_CUTOFF:
        raise ConfigurationError(f"Cutoff R={R} leaves a Maxwellian tail above 1e-8; need R >= {MIN_CUTOFF}")

    x, w = leggauss(n_v1)
    # exact mirror symmetry of the v1 column
    v1_nodes = 0.5 * R * (x - x[::-1])
    v1_weights = 0.5 * R * (w + w[::-1])

    y, wy = leggauss(n_r)
    rho = np.sqrt(np.maximum(R**2 - v1_nodes**2, 0.0))
    r = 0.5 * rho[:, None] * (y[None, :] + 1.0)
    r_weights = 0.5 * rho[:, None] * wy[None, :]

    v1 = np.repeat(v1_nodes, n_r)
    base = (v1_weights[:, None] * r_weights).ravel()
    column = np.repeat(np.arange(n_v1), n_r)
    mirror = ((n_v1 - 1 - column) * n_r + np.tile(np.arange(n_r), n_v1)).astype(int)

    LOGGER.debug("Built velocity grid R=%s, %d x %d nodes", R, n_v1, n_r)
    return VelocityGrid(
        R=float(R),
        n_v1=n_v1,
        n_r=n_r,
        v1=v1,
        r=r.ravel(),
        base_weights=base,
        column=column,
        mirror=mirror,
    )


def maxwellian(grid: VelocityGrid) -> np.ndarray:
    return MAXWELLIAN_NORM * np.exp(-0.5 * grid.speed_squared)


def moment_functions(grid: VelocityGrid) -> dict[str, np.ndarray]:
    """Raw (not orthonormalized) node profiles of sqrt(M) times 1, v1, r and |v|^2."""
    root = np.sqrt(maxwellian(grid))
    return {
        "sqrtM": root,
        "v1": grid.v1 * root,
        "r": grid.r * root,
        "v2": grid.speed_squared * root,
    }


def inner_product(f: GridFunction, g: GridFunction, grid: VelocityGrid) -> complex:
    """(f, g) = sum of w f conj(g) over the sector quadrature."""
    if f.sector != g.sector:
        raise UsageError(f"Inner product across sectors {f.sector} and {g.sector}")
    return complex(np.sum(grid.weights(f.sector) * f.coeffs * np.conj(g.coeffs)))


def norm(f: GridFunction, grid: VelocityGrid) -> float:
    return float(np.sqrt(max(inner_product(f, f, grid).real, 0.0)))


def reflect(f: GridFunction, grid: VelocityGrid) -> GridFunction:
    """The reflection v1 -> -v1."""
    return GridFunction(f.sector, f.coeffs[grid.mirror])


def build_basis(grid: VelocityGrid) -> MacroBasis:
    """Orthonormal macroscopic basis in the discrete inner product.

    chi0 = sqrt(M), chi1 = v1 sqrt(M), chi4 = (|v|^2 - 3) sqrt(M) / sqrt(6) are
    Gram-Schmidt orthonormalized in that order; chi2 = chi3 = r sqrt(M) normalized.
    """
    raw = moment_functions(grid)
    w0 = grid.weights(0)

    def normalize(values, weights):
        return values / np.sqrt(np.sum(weights * values**2))

    chi0 = normalize(raw["sqrtM"], w0)
    chi1 = raw["v1"] - np.sum(w0 * raw["v1"] * chi0) * chi0
    chi1 = normalize(chi1, w0)
    chi4 = (raw["v2"] - 3.0 * raw["sqrtM"]) / np.sqrt(6.0)
    for previous in (chi0, chi1):
        chi4 = chi4 - np.sum(w0 * chi4 * previous) * previous
    chi4 = normalize(chi4, w0)
    chi2 = normalize(raw["r"], grid.weights(1))

    return MacroBasis(
        chi0=GridFunction(0, chi0),
        chi1=GridFunction(0, chi1),
        chi2=GridFunction(1, chi2),
        chi3=GridFunction(1, chi2.copy()),
        chi4=GridFunction(0, chi4),
        grid=grid,
    )


def field_couplings(basis: MacroBasis) -> tuple[np.ndarray, np.ndarray]:
    """Node profiles of v1 chi0 (sector 0) and of the cos coefficient of v2 chi0 (sector 1).

    These are the source terms through which E drives f; using chi0 itself keeps the
    discrete Gauss law (f, chi0) = i xi E1 invariant under the mode generators.
    """
    chi0 = basis.chi0.coeffs.real
    return basis.grid.v1 * chi0, basis.grid.r * chi0


def project(f: GridFunction, which: Projection, basis: MacroBasis) -> GridFunction:
    """P0/P1 split against the five-dimensional null space, Pd/Pr against chi0."""
    grid = basis.grid
    if f.coeffs.size != grid.size:
        raise UsageError("GridFunction does not belong to the basis grid")

    if which in ("Pd", "Pr"):
        members = (basis.chi0,) if f.sector == 0 else ()
    elif which in ("P0", "P1"):
        members = basis.sector_members(f.sector)
    else:
        raise UsageError(f"Unknown projection {which!r}")

    macro = np.zeros_like(f.coeffs)
    for chi in members:
        macro = macro + inner_product(f, chi, grid) * chi.coeffs

    if which in ("P0", "Pd"):
        return GridFunction(f.sector, macro)
    return GridFunction(f.sector, f.coeffs - macro)
