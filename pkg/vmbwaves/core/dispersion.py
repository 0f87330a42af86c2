# vmbwaves/core/dispersion.py
# Dispersion relations, eigenvalue branches and normalized eigenvectors.
"""
Scalar dispersion functions of the per-mode generators.

In the sector 1 (transverse) block the fluid eigenvalues solve

    D(lambda, xi) = lambda^2 - m(lambda, xi) lambda + xi^2,   m = ((L1 - i v1 xi - lambda)^{-1} r chi0, r chi0)

at low frequency (lambda near 0) and at high frequency (lambda near -+ i xi). The sector 0
(longitudinal) block gives D0 = lambda - (1 + xi^2)(R v1 chi0, v1 chi0) with R the resolvent on the
complement of chi0. The couplings v chi0 are the field source terms of the mode generators.
The Boltzmann branches come from dense eigensolves of L - i v1 xi.

All sector operators are handled in symmetrized coordinates W^{1/2} f, where they are complex
symmetric; the bilinear pairing x^T y then plays the role of the (unconjugated) inner product.
"""
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg as la

from vmbwaves.core.coefficients import compute_a1, energy_modes
from vmbwaves.core.collision import CollisionMatrices
from vmbwaves.core.velocity import field_couplings
from vmbwaves.exceptions import (
    ConvergenceError,
    DegenerateNormalizationError,
    NonContractionError,
    SpectralCollisionError,
    UsageError,
)

LOGGER = logging.getLogger(__name__)

Regime = Literal["low", "high", "boltzmann"]

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-14
HOMOTOPY_DEPTH = 8
FIXED_POINT_MAX_ITER = 100
FIXED_POINT_TOL = 1e-13
CONTRACTION_RATIO = 0.9
RESIDUAL_TOL = 1e-10
ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass
class BranchSample:
    xi: float
    value: complex
    iterations: int = 0
    residual: float = 0.0
    ratio: float = 0.0


@dataclass
class DispersionBranch:
    regime: Regime
    label: int
    samples: list[BranchSample] = field(default_factory=list)

    @property
    def xis(self) -> np.ndarray:
        return np.array([sample.xi for sample in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([sample.value for sample in self.samples])

    def to_rows(self) -> list[dict]:
        return [
            {
                "xi": sample.xi,
                "re": sample.value.real,
                "im": sample.value.imag,
                "residual": sample.residual,
                "iterations": sample.iterations,
            }
            for sample in self.samples
        ]


@dataclass
class EigenPair:
    """Eigenvalue and eigenvector split into kinetic (f0, fc, fs) and field (E1..E3, B2, B3) parts.

    f0 lives in sector 0; fc and fs are the cos and sin components in sector 1.
    """

    value: complex
    xi: float
    label: int
    f0: np.ndarray
    fc: np.ndarray
    fs: np.ndarray
    E: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=complex))
    B: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=complex))
    normalization: complex = 1.0

    def stacked(self, fields: bool = True) -> np.ndarray:
        parts = [self.f0, self.fc, self.fs]
        if fields:
            parts += [self.E, self.B]
        return np.concatenate([np.asarray(part, dtype=complex) for part in parts])


class SectorResolvent:
    """(L1 - i v1 xi - lambda)^{-1} restricted to the microscopic range of L1 on one sector."""

    def __init__(self, matrices: CollisionMatrices, sector: int, xi: float):
        grid = matrices.grid
        self.sector = sector
        self.xi = xi
        self.root = np.sqrt(matrices.weights(sector))
        self.basis = matrices.complement("L1", sector)
        sym = matrices.symmetrized("L1", sector) - 1j * xi * np.diag(grid.v1)
        if self.basis is not None:
            sym = self.basis.T @ sym @ self.basis
        self.sym = sym

    def reduce(self, coeffs: np.ndarray) -> np.ndarray:
        """Node coefficients -> reduced symmetrized coordinates."""
        scaled = self.root * coeffs
        return scaled if self.basis is None else self.basis.T @ scaled

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        scaled = reduced if self.basis is None else self.basis @ reduced
        return scaled / self.root

    def solve(self, lam: complex, rhs: np.ndarray) -> np.ndarray:
        """Solves (B - lambda) x = rhs with rhs and x in reduced coordinates."""
        system = self.sym - lam * np.eye(self.sym.shape[0])
        try:
            solution = la.solve(system, rhs, assume_a="sym")
        except la.LinAlgError as e:
            raise SpectralCollisionError(f"Resolvent is singular at lambda={lam}, xi={self.xi}") from e
        if not np.all(np.isfinite(solution)):
            raise SpectralCollisionError(f"Resolvent is not finite at lambda={lam}, xi={self.xi}")
        return solution

    def moment(self, lam: complex, profile: np.ndarray) -> tuple[complex, complex, np.ndarray]:
        """(R profile, profile), its lambda-derivative (R^2 profile, profile) and R profile."""
        rhs = self.reduce(profile)
        x = self.solve(lam, rhs)
        return complex(rhs @ x), complex(x @ x), x


def _transverse(matrices: CollisionMatrices, xi: float) -> SectorResolvent:
    key = ("transverse", float(abs(xi)))
    cache = matrices._cache
    if key not in cache:
        # D is even in xi: the v1 reflection maps the xi and -xi operators into each other
        cache[key] = SectorResolvent(matrices, 1, abs(xi))
    return cache[key]


def clear_resolvent_cache(matrices: CollisionMatrices, xi: float | None = None) -> int:
    """Drops the cached transverse resolvents (all of them, or the one at |xi|); returns the count."""
    keys = [key for key in matrices._cache if key[0] == "transverse" and (xi is None or key[1] == float(abs(xi)))]
    for key in keys:
        del matrices._cache[key]
    return len(keys)


def _transverse_terms(lam: complex, xi: float, matrices: CollisionMatrices):
    resolvent = _transverse(matrices, xi)
    m, dm, _ = resolvent.moment(lam, field_couplings(matrices.basis)[1])
    value = lam**2 - m * lam + xi**2
    derivative = 2.0 * lam - m - dm * lam
    return value, derivative, m


def dispersion_D1(lam: complex, xi: float, matrices: CollisionMatrices) -> complex:
    """Low-frequency transverse dispersion function D1(lambda, xi)."""
    return complex(_transverse_terms(lam, xi, matrices)[0])


def dispersion_D(lam: complex, xi: float, matrices: CollisionMatrices) -> complex:
    """High-frequency dispersion function; the (i v1 / xi) Pd term vanishes on the transverse sector."""
    if xi == 0:
        raise UsageError("The high-frequency dispersion function needs xi != 0")
    return complex(_transverse_terms(lam, xi, matrices)[0])


def dispersion_D0(lam: complex, xi: float, matrices: CollisionMatrices) -> complex:
    """Longitudinal dispersion function D0 = lambda - (1 + xi^2)(R v1 chi0, v1 chi0)."""
    resolvent = SectorResolvent(matrices, 0, xi)
    m, _, _ = resolvent.moment(lam, field_couplings(matrices.basis)[0])
    return complex(lam - (1.0 + xi**2) * m)


def low_frequency_margin(matrices: CollisionMatrices, xi: float, *, b0: float | None = None,
                         re_max: float = 1.0, im_max: float = 2.0, n: int = 9) -> float:
    """Minimum of |D0| over the box -b0 <= Re lambda <= re_max, |Im lambda| <= im_max."""
    b0 = 0.1 * matrices.mu if b0 is None else b0
    resolvent = SectorResolvent(matrices, 0, xi)
    profile = field_couplings(matrices.basis)[0]
    smallest = np.inf
    for re in np.linspace(-b0, re_max, n):
        for im in np.linspace(-im_max, im_max, 2 * n - 1):
            lam = complex(re, im)
            m, _, _ = resolvent.moment(lam, profile)
            smallest = min(smallest, abs(lam - (1.0 + xi**2) * m))
    return float(smallest)


def _newton(lam: complex, xi: float, matrices: CollisionMatrices) -> BranchSample:
    for iteration in range(1, NEWTON_MAX_ITER + 1):
        value, derivative, _ = _transverse_terms(lam, xi, matrices)
        if derivative == 0:
            break
        step = value / derivative
        lam = lam - step
        if abs(step) <= NEWTON_TOL * (1.0 + abs(lam)):
            residual = abs(_transverse_terms(lam, xi, matrices)[0])
            return BranchSample(xi=xi, value=complex(lam), iterations=iteration, residual=float(residual))
    raise ConvergenceError(f"Newton did not converge at xi={xi} (last lambda={lam})")


def _accept(sample: BranchSample) -> bool:
    return sample.residual <= RESIDUAL_TOL * (1.0 + sample.xi**2) and sample.value.real <= 1e-12


def _continue_low(xi: float, xi_prev: float, lam_prev: complex, matrices: CollisionMatrices, depth: int = 0) -> BranchSample:
    """Newton from the previous root; on failure bisects the xi step (homotopy in xi)."""
    try:
        sample = _newton(lam_prev, xi, matrices)
        if _accept(sample):
            return sample
    except (ConvergenceError, SpectralCollisionError):
        pass
    if depth >= HOMOTOPY_DEPTH:
        raise ConvergenceError(f"Low branch continuation failed at xi={xi} after {depth} bisections")
    middle = 0.5 * (xi + xi_prev)
    LOGGER.debug("Bisecting low branch continuation at xi=%.6g (depth %d)", middle, depth + 1)
    half = _continue_low(middle, xi_prev, lam_prev, matrices, depth + 1)
    return _continue_low(xi, middle, half.value, matrices, depth + 1)


def solve_low_branch(xi_samples, matrices: CollisionMatrices) -> DispersionBranch:
    """Double transverse root lambda_1 = lambda_2 near 0, continued in |xi| from lambda(0) = 0."""
    xi_samples = [float(xi) for xi in np.atleast_1d(xi_samples)]
    a1 = compute_a1(matrices)
    solved: dict[float, BranchSample] = {0.0: BranchSample(xi=0.0, value=0j)}
    xi_prev, lam_prev = 0.0, 0j
    for magnitude in sorted({abs(xi) for xi in xi_samples} - {0.0}):
        seed = lam_prev if xi_prev > 0 else complex(-a1 * magnitude**2)
        sample = _continue_low(magnitude, xi_prev, seed, matrices)
        solved[magnitude] = sample
        xi_prev, lam_prev = magnitude, sample.value

    branch = DispersionBranch(regime="low", label=1)
    for xi in xi_samples:
        base = solved[abs(xi)]
        branch.samples.append(BranchSample(xi=xi, value=base.value, iterations=base.iterations, residual=base.residual))
    return branch


def _high_root_factor(B: complex, xi: float) -> complex:
    """2 i xi sqrt(1 - B^2 / (4 xi^2)): the root of B^2 - 4 xi^2 near 2 i xi, away from the cut."""
    return 2j * xi * np.sqrt(1.0 - B**2 / (4.0 * xi**2))


def _high_fixed_point(xi: float, j: int, matrices: CollisionMatrices) -> BranchSample:
    resolvent = _transverse(matrices, xi)
    profile = field_couplings(matrices.basis)[1]
    beta = 0j
    previous_step = None
    ratio = 0.0
    for iteration in range(1, FIXED_POINT_MAX_ITER + 1):
        B, _, _ = resolvent.moment(j * 1j * xi + beta, profile)
        updated = 0.5 * (B + j * B**2 / (_high_root_factor(B, xi) + 2j * xi))
        step = abs(updated - beta)
        if previous_step:
            ratio = max(ratio, step / previous_step)
        beta = updated
        if not np.isfinite(beta) or abs(beta) > abs(xi):
            raise NonContractionError(f"Fixed-point iterate escaped the contraction ball at xi={xi}", xi)
        if step <= FIXED_POINT_TOL * (1.0 + abs(beta)):
            return BranchSample(xi=xi, value=j * 1j * xi + beta, iterations=iteration, ratio=ratio)
        if iteration > 3 and ratio >= 1.0:
            break
        previous_step = step
    raise NonContractionError(f"High-frequency fixed point did not contract at xi={xi} (ratio {ratio:.3f})", xi)


def solve_high_branch(xi_samples, j: int, matrices: CollisionMatrices) -> DispersionBranch:
    """lambda = j i xi + beta_j(xi) by the contraction map, polished by Newton on D."""
    if j not in (-1, 1):
        raise UsageError(f"High branch sign must be -1 or 1, got {j}")
    branch = DispersionBranch(regime="high", label=j)
    for xi in np.atleast_1d(xi_samples):
        xi = float(xi)
        if xi == 0:
            raise UsageError("The high-frequency branch needs xi != 0")
        sample = _high_fixed_point(xi, j, matrices)
        polished = _newton(sample.value, xi, matrices)
        polished.iterations += sample.iterations
        polished.ratio = sample.ratio
        branch.samples.append(polished)
    return branch


def _boltzmann_sector(matrices: CollisionMatrices, sector: int, xi: float):
    grid = matrices.grid
    sym = matrices.symmetrized("L", sector) - 1j * xi * np.diag(grid.v1)
    values, vectors = la.eig(sym)
    return values, vectors


def _bilinear_normalize(vector: np.ndarray) -> np.ndarray:
    pairing = vector @ vector
    if abs(pairing) < 1e-14 or not np.isfinite(pairing):
        raise DegenerateNormalizationError(f"Bilinear self-pairing {pairing} cannot be normalized")
    vector = vector / np.sqrt(pairing)
    # fix the overall sign so the largest entry has positive real part
    pivot = vector[np.argmax(np.abs(vector))]
    return vector if pivot.real >= 0 else -vector


# labels of the longitudinal branches sorted by sign(xi) Im eta: the eta_{+1} branch (Im > 0 for
# xi > 0) is the one leaving the acoustic mode E_{-1}
ZERO_LIMIT = {-1: 1, 0: 0, 1: -1}


def boltzmann_eigenpairs(xi: float, matrices: CollisionMatrices) -> dict[int, EigenPair]:
    """The five Boltzmann fluid eigenpairs at xi; vectors normalized by f^T W f = 1."""
    n = matrices.grid.size
    zeros = np.zeros(n, dtype=complex)
    pairs: dict[int, EigenPair] = {}
    if xi == 0:
        modes = energy_modes(matrices.basis)
        for label in (-1, 0, 1):
            f0 = modes[ZERO_LIMIT[label]].coeffs
            pairs[label] = EigenPair(value=0j, xi=0.0, label=label, f0=f0, fc=zeros, fs=zeros)
        chi2 = matrices.basis.chi2.coeffs
        pairs[2] = EigenPair(value=0j, xi=0.0, label=2, f0=zeros, fc=chi2, fs=zeros)
        pairs[3] = EigenPair(value=0j, xi=0.0, label=3, f0=zeros, fc=zeros, fs=chi2)
        return pairs

    root0 = np.sqrt(matrices.weights(0))
    values, vectors = _boltzmann_sector(matrices, 0, xi)
    top = np.argsort(values.real)[-3:]
    orientation = 1.0 if xi > 0 else -1.0
    ordered = top[np.argsort(orientation * values[top].imag)]
    for label, index in zip((-1, 0, 1), ordered):
        vector = _bilinear_normalize(vectors[:, index]) / root0
        pairs[label] = EigenPair(value=complex(values[index]), xi=xi, label=label, f0=vector, fc=zeros, fs=zeros)

    root1 = np.sqrt(matrices.weights(1))
    values, vectors = _boltzmann_sector(matrices, 1, xi)
    index = int(np.argmax(values.real))
    vector = _bilinear_normalize(vectors[:, index]) / root1
    pairs[2] = EigenPair(value=complex(values[index]), xi=xi, label=2, f0=zeros, fc=vector, fs=zeros)
    pairs[3] = EigenPair(value=complex(values[index]), xi=xi, label=3, f0=zeros, fc=zeros, fs=vector)
    return pairs


def boltzmann_branches(xi_samples, matrices: CollisionMatrices) -> list[DispersionBranch]:
    """Five branches eta_j, j = -1..3, of the Boltzmann generator L - i v1 xi nearest 0."""
    branches = {label: DispersionBranch(regime="boltzmann", label=label) for label in (-1, 0, 1, 2, 3)}
    for xi in np.atleast_1d(xi_samples):
        xi = float(xi)
        pairs = boltzmann_eigenpairs(xi, matrices)
        for label, pair in pairs.items():
            residual = _boltzmann_residual(pair, matrices)
            branches[label].samples.append(BranchSample(xi=xi, value=pair.value, residual=residual))
    return [branches[label] for label in (-1, 0, 1, 2, 3)]


def _boltzmann_residual(pair: EigenPair, matrices: CollisionMatrices) -> float:
    grid = matrices.grid
    if np.any(pair.f0):
        sector, vector = 0, pair.f0
    else:
        sector, vector = 1, pair.fc if np.any(pair.fc) else pair.fs
    applied = matrices.L[sector] @ vector - 1j * pair.xi * grid.v1 * vector
    return float(np.max(np.abs(applied - pair.value * vector)))


def _field_pairing(h: np.ndarray, E: np.ndarray, B: np.ndarray, weights: np.ndarray) -> complex:
    """Bilinear pairing of a transverse eigenvector with its adjoint: h^T W h - E^T E - B^T B."""
    return complex(np.sum(weights * h * h) - E @ E - B @ B)


def _transverse_vector(lam: complex, xi: float, matrices: CollisionMatrices, direction: np.ndarray):
    """Unnormalized eigenvector (h, E_r, B_r) with E_r = direction."""
    resolvent = _transverse(matrices, xi)
    _, _, x = resolvent.moment(lam, field_couplings(matrices.basis)[1])
    profile = -resolvent.expand(x)
    if xi < 0:
        profile = profile[matrices.grid.mirror]
    E = np.asarray(direction, dtype=complex)
    B = -1j * xi / lam * (ROTATION @ E)
    return profile, E, B


def _assemble_pair(lam, xi, label, profile, E_r, B_r, scale, n) -> EigenPair:
    zeros = np.zeros(n, dtype=complex)
    cosine = abs(E_r[0]) >= abs(E_r[1])
    return EigenPair(
        value=complex(lam),
        xi=xi,
        label=label,
        f0=zeros,
        fc=scale * profile if cosine else zeros,
        fs=zeros if cosine else scale * profile,
        E=np.concatenate([[0j], scale * E_r]),
        B=scale * B_r,
        normalization=complex(scale),
    )


def eigenvector_low(xi: float, j: int, matrices: CollisionMatrices, lam: complex | None = None) -> EigenPair:
    """Low-frequency eigenvector Psi_j (j = 1 cos/E2, j = 2 sin/E3) scaled by b1(xi)."""
    if j not in (1, 2):
        raise UsageError(f"Low-frequency eigenvector index must be 1 or 2, got {j}")
    n = matrices.grid.size
    direction = np.array([1.0, 0.0]) if j == 1 else np.array([0.0, 1.0])
    if xi == 0:
        # pure magnetic mode: the limit of b1 (0, e_j, -i xi / lambda O e_j)
        B = 1j * (ROTATION @ direction)
        return _assemble_pair(0j, 0.0, j, np.zeros(n), np.zeros(2), B, 1.0, n)

    if lam is None:
        lam = solve_low_branch([xi], matrices).samples[0].value
    profile, E_r, B_r = _transverse_vector(lam, xi, matrices, direction)
    pairing = _field_pairing(profile, E_r, B_r, matrices.weights(1))
    if abs(pairing) < 1e-14 or not np.isfinite(pairing):
        raise DegenerateNormalizationError(f"Low-frequency pairing {pairing} at xi={xi}")
    b1 = np.sign(xi) / np.sqrt(pairing)
    return _assemble_pair(lam, xi, j, profile, E_r, B_r, b1, n)


HIGH_DIRECTIONS = {
    1: (-1, np.array([np.sqrt(0.5), 0.0])),
    2: (-1, np.array([0.0, np.sqrt(0.5)])),
    3: (1, np.array([np.sqrt(0.5), 0.0])),
    4: (1, np.array([0.0, np.sqrt(0.5)])),
}


def eigenvector_high(xi: float, j: int, matrices: CollisionMatrices, lam: complex | None = None) -> EigenPair:
    """High-frequency eigenvector Phi_j, j = 1..4, scaled by c_j(xi) (the root nearest i)."""
    if j not in HIGH_DIRECTIONS:
        raise UsageError(f"High-frequency eigenvector index must be 1..4, got {j}")
    if xi == 0:
        raise UsageError("High-frequency eigenvectors need xi != 0")
    sign, direction = HIGH_DIRECTIONS[j]
    if lam is None:
        lam = solve_high_branch([xi], sign, matrices).samples[0].value
    profile, E_r, B_r = _transverse_vector(lam, xi, matrices, direction)
    pairing = _field_pairing(profile, E_r, B_r, matrices.weights(1))
    if abs(pairing) < 1e-14 or not np.isfinite(pairing):
        raise DegenerateNormalizationError(f"High-frequency pairing {pairing} at xi={xi}")
    c = 1.0 / np.sqrt(pairing)
    if abs(-c - 1j) < abs(c - 1j):
        c = -c
    return _assemble_pair(lam, xi, j, profile, E_r, B_r, c, matrices.grid.size)


def eigenpair_pairing(left: EigenPair, right: EigenPair, matrices: CollisionMatrices) -> complex:
    """Bilinear pairing (left, right*) of two fluid eigenvectors: kinetic part minus field part."""
    kinetic = (
        np.sum(matrices.weights(0) * left.f0 * right.f0)
        + np.sum(matrices.weights(1) * (left.fc * right.fc + left.fs * right.fs))
    )
    return complex(kinetic - left.E @ right.E - left.B @ right.B)


@dataclass
class RegimeBounds:
    r0: float
    r1: float
    boltzmann_r0: float
    low_margin: float = 0.0
    contraction_ratio: float = 0.0


def estimate_regime_bounds(matrices: CollisionMatrices, scan, *, fallback: RegimeBounds | None = None) -> RegimeBounds:
    """Measured r0 (largest xi where Newton from -a1 xi^2 lands on the double root) and r1
    (smallest xi where the high-frequency map contracts with ratio < 0.9)."""
    scan = sorted(float(xi) for xi in scan if xi > 0)
    fallback = fallback or RegimeBounds(r0=0.5, r1=10.0, boltzmann_r0=1.0)
    a1 = compute_a1(matrices)

    r0 = None
    for xi in scan:
        try:
            sample = _newton(complex(-a1 * xi**2), xi, matrices)
        except (ConvergenceError, SpectralCollisionError):
            break
        if not _accept(sample) or abs(sample.value + a1 * xi**2) > 0.5 * a1 * xi**2:
            break
        r0 = xi

    r1, ratio = None, 0.0
    for xi in scan:
        try:
            sample = _high_fixed_point(xi, -1, matrices)
        except (NonContractionError, SpectralCollisionError):
            continue
        if sample.ratio < CONTRACTION_RATIO:
            r1, ratio = xi, sample.ratio
            break

    bounds = RegimeBounds(
        r0=r0 if r0 is not None else fallback.r0,
        r1=r1 if r1 is not None else fallback.r1,
        boltzmann_r0=fallback.boltzmann_r0,
        contraction_ratio=ratio,
    )
    bounds.low_margin = low_frequency_margin(matrices, 0.5 * bounds.r0)
    LOGGER.info("Regime bounds: r0=%.4g, r1=%.4g (contraction ratio %.3f)", bounds.r0, bounds.r1, ratio)
    return bounds
