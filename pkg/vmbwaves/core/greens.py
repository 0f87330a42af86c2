# vmbwaves/core/greens.py
# Green's function kernels in (t, x) by Fourier synthesis of the per-mode parts.
"""
Physical-space kernels are G(t, x) = (1 / 2 pi) int exp(i x xi) G^(t, xi) dxi over a frequency band,
measured on a fixed probe set: every operator is reduced to the block P^T W G P, with P the probe
columns and W the state weights, and reported through the largest singular value of a group block.

VMB probes are chi0..chi4 in the kinetic slots and E1, E2, E3, B2, B3; the groups f, E, B number
the blocks G^{ij} (1 = f, 2 = E, 3 = B). Boltzmann probes are chi0..chi4 plus two microscopic
profiles, so that P1 G P1 can be read off.

Symbols satisfy G^(t, -xi) = conj G^(t, xi), so only nonnegative frequencies are evaluated.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gamma as gamma_function

from vmbwaves.backends import PropagatorBackend
from vmbwaves.core.coefficients import transverse_samples
from vmbwaves.core.collision import CollisionMatrices
from vmbwaves.core.dispersion import (
    HIGH_DIRECTIONS,
    boltzmann_eigenpairs,
    clear_resolvent_cache,
    eigenvector_high,
    eigenvector_low,
    solve_high_branch,
    solve_low_branch,
)
from vmbwaves.core.fitting import decay_fit
from vmbwaves.core.kinetic import oscillatory_profiles
from vmbwaves.core.modes import (
    ModeState,
    admissible_embedding,
    admissible_norm,
    assemble,
    decompose_semigroup,
    free_maxwell_modes,
    layout_for,
    propagator,
)
from vmbwaves.core.quadrature import OSCILLATION_LIMIT, inverse_fourier, panel_grid
from vmbwaves.core.velocity import GridFunction, moment_functions, project
from vmbwaves.exceptions import ResolutionError, UsageError

LOGGER = logging.getLogger(__name__)

MIN_PANELS = 8
VMB_PROBES = ("chi0", "chi1", "chi2", "chi3", "chi4", "E1", "E2", "E3", "B2", "B3")
VMB_GROUPS = {"f": slice(0, 5), "E": slice(5, 8), "B": slice(8, 10)}
BOLTZMANN_PROBES = ("chi0", "chi1", "chi2", "chi3", "chi4", "P1_v1v1", "P1_v1v2")
BOLTZMANN_GROUPS = {"fluid": slice(0, 5), "micro": slice(5, 7)}
BLOCK_GROUPS = {"1": "f", "2": "E", "3": "B"}
PARTS = ("L0", "L1", "M", "H0", "H1")
# kinetic slot of each macroscopic probe: 0 = f0, 1 = fc, 2 = fs
PROBE_SLOTS = {"chi0": 0, "chi1": 0, "chi2": 1, "chi3": 2, "chi4": 0}


@dataclass(frozen=True, eq=False)
class ProbeSet:
    labels: tuple[str, ...]
    vectors: np.ndarray
    weights: np.ndarray
    groups: dict[str, slice]

    @property
    def size(self) -> int:
        return len(self.labels)

    def measure(self, state: np.ndarray) -> np.ndarray:
        """(state, probe) for every probe."""
        return self.vectors.T @ (self.weights * state)

    def pair(self, left: np.ndarray) -> np.ndarray:
        """<left | probe> for every probe."""
        return self.vectors.T @ left

    def reduce(self, operator: np.ndarray) -> np.ndarray:
        return self.vectors.T @ (self.weights[:, None] * operator) @ self.vectors

    def group(self, name: str | None) -> slice:
        if name is None:
            return slice(None)
        try:
            return self.groups[name]
        except KeyError:
            raise UsageError(f"Unknown probe group {name!r}; choose from {', '.join(self.groups)}") from None


def block_groups(block: str) -> tuple[str, str]:
    """'33' -> ('B', 'B'): the G^{ij} numbering of the VMB groups."""
    if len(block) != 2 or any(digit not in BLOCK_GROUPS for digit in block):
        raise UsageError(f"Block must be two digits from 1..3, got {block!r}")
    return BLOCK_GROUPS[block[0]], BLOCK_GROUPS[block[1]]


def _kinetic_probe(n: int, slot: int, profile: np.ndarray, size: int) -> np.ndarray:
    column = np.zeros(size)
    column[slot * n:(slot + 1) * n] = profile
    return column


def vmb_probes(matrices: CollisionMatrices) -> ProbeSet:
    layout = layout_for("A0", matrices)
    n = layout.n
    basis = matrices.basis
    columns = [
        _kinetic_probe(n, PROBE_SLOTS[label], basis.member(j).coeffs.real, layout.size)
        for j, label in enumerate(VMB_PROBES[:5])
    ]
    for name in VMB_PROBES[5:]:
        column = np.zeros(layout.size)
        column[layout.index(name)] = 1.0
        columns.append(column)
    return ProbeSet(VMB_PROBES, np.column_stack(columns), layout.weights(matrices), VMB_GROUPS)


def _normalized(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return values / np.sqrt(np.sum(weights * values**2))


def boltzmann_probes(matrices: CollisionMatrices) -> ProbeSet:
    layout = layout_for("B0", matrices)
    n = layout.n
    grid = matrices.grid
    basis = matrices.basis
    raw = moment_functions(grid)
    columns = [
        _kinetic_probe(n, PROBE_SLOTS[label], basis.member(j).coeffs.real, layout.size)
        for j, label in enumerate(BOLTZMANN_PROBES[:5])
    ]
    # P1(v1^2 sqrt(M)) in sector 0 and the cos coefficient of P1(v1 v2 sqrt(M)) in sector 1
    longitudinal = project(GridFunction(0, grid.v1**2 * raw["sqrtM"]), "P1", basis).coeffs.real
    shear = project(GridFunction(1, grid.v1 * raw["r"]), "P1", basis).coeffs.real
    columns.append(_kinetic_probe(n, 0, _normalized(longitudinal, grid.weights(0)), layout.size))
    columns.append(_kinetic_probe(n, 1, _normalized(shear, grid.weights(1)), layout.size))
    return ProbeSet(BOLTZMANN_PROBES, np.column_stack(columns), layout.weights(matrices), BOLTZMANN_GROUPS)


@dataclass
class ReducedKernel:
    t: float
    x: float
    block: np.ndarray

    @property
    def norm(self) -> float:
        """Largest singular value of the probe block."""
        return float(np.linalg.norm(self.block, 2))


@dataclass(eq=False)
class SpaceTimeField:
    """Probe blocks of a kernel on a (t, x) grid: blocks[i, k] is the block at (times[i], positions[k])."""

    times: np.ndarray
    positions: np.ndarray
    blocks: np.ndarray
    probes: ProbeSet = field(repr=False)
    label: str = ""

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        self.positions = np.atleast_1d(np.asarray(self.positions, dtype=float))
        for name, grid in (("times", self.times), ("positions", self.positions)):
            if grid.size > 1 and np.any(np.diff(grid) <= 0):
                raise UsageError(f"{name} must be strictly increasing")
        expected = (self.times.size, self.positions.size, self.probes.size, self.probes.size)
        if self.blocks.shape != expected:
            raise UsageError(f"Kernel blocks have shape {self.blocks.shape}, expected {expected}")

    def kernel(self, i: int, k: int) -> ReducedKernel:
        return ReducedKernel(float(self.times[i]), float(self.positions[k]), self.blocks[i, k])

    def norms(self, rows: str | None = None, cols: str | None = None) -> np.ndarray:
        """Largest singular value of the selected group block at every (t, x)."""
        sub = self.blocks[..., self.probes.group(rows), self.probes.group(cols)]
        return np.linalg.norm(sub, ord=2, axis=(-2, -1))

    def block_norms(self, block: str) -> np.ndarray:
        return self.norms(*block_groups(block))

    def sup_norms(self, rows: str | None = None, cols: str | None = None) -> np.ndarray:
        return self.norms(rows, cols).max(axis=1)

    def entry(self, row: str, col: str) -> np.ndarray:
        labels = self.probes.labels
        return self.blocks[:, :, labels.index(row), labels.index(col)]

    @property
    def imaginary_residue(self) -> float:
        scale = float(np.max(np.abs(self.blocks)))
        return 0.0 if scale == 0 else float(np.max(np.abs(self.blocks.imag))) / scale

    def to_rows(self, rows: str | None = None, cols: str | None = None) -> list[dict]:
        norms = self.norms(rows, cols)
        sub = self.blocks[..., self.probes.group(rows), self.probes.group(cols)]
        labels_r = self.probes.labels[self.probes.group(rows)]
        labels_c = self.probes.labels[self.probes.group(cols)]
        out = []
        for i, t in enumerate(self.times):
            for k, x in enumerate(self.positions):
                row = {"t": float(t), "x": float(x), "norm": float(norms[i, k])}
                for a, name_r in enumerate(labels_r):
                    for b, name_c in enumerate(labels_c):
                        row[f"{name_r}|{name_c}"] = float(sub[i, k, a, b].real)
                out.append(row)
        return out


@dataclass(eq=False)
class ModalSymbol:
    """Sum_m exp(rate_m t) left_m right_m^T on a frequency grid, stored in probe coordinates.

    left: (n_xi, p, m), right: (n_xi, m, p), rates: (n_xi, m).
    """

    nodes: np.ndarray
    rates: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def at(self, t: float) -> np.ndarray:
        return np.einsum("kpm,km,kmq->kpq", self.left, np.exp(self.rates * t), self.right)


def panels_for(width: float, reach: float, limit: float = OSCILLATION_LIMIT, minimum: int = MIN_PANELS) -> int:
    """Smallest panel count on a band of the given width resolving exp(i x xi) for |x| <= reach."""
    return max(minimum, math.ceil(width * reach / (2.0 * limit)) + 1)


def _reach(x) -> float:
    return float(np.max(np.abs(np.atleast_1d(x))))


def _mirror(nodes: np.ndarray, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nonnegative nodes starting at 0 -> the symmetric grid, using S(-xi) = conj S(xi)."""
    full_nodes = np.concatenate([-nodes[:0:-1], nodes])
    full = np.concatenate([np.conj(samples[:0:-1]), samples])
    return full_nodes, full


def _synthesize_centred(nodes, samples, x, limit) -> np.ndarray:
    full_nodes, full = _mirror(nodes, samples)
    return inverse_fourier(full, full_nodes, x, limit=limit)


def _synthesize_bands(nodes, samples, x, limit) -> np.ndarray:
    """Band [a, b] plus its mirror [-b, -a]."""
    positive = inverse_fourier(samples, nodes, x, limit=limit)
    negative = inverse_fourier(np.conj(samples[::-1]), -nodes[::-1], x, limit=limit)
    return positive + negative


def _projector_factors(state: np.ndarray, left: np.ndarray, probes: ProbeSet) -> tuple[np.ndarray, np.ndarray]:
    return probes.measure(state), probes.pair(left)


def _stack(nodes, rates, factors) -> ModalSymbol:
    left = np.array([[f[0] for f in row] for row in factors]).transpose(0, 2, 1)
    right = np.array([[f[1] for f in row] for row in factors])
    return ModalSymbol(np.asarray(nodes, dtype=float), np.asarray(rates, dtype=complex), left, right)


def low_symbol(matrices: CollisionMatrices, probes: ProbeSet, upper: float, panels: int) -> ModalSymbol:
    """Low-frequency fluid part sum_{j=1,2} exp(lambda_j t) Psi_j <Psi_j| on [0, upper]."""
    nodes = panel_grid(0.0, upper, panels)
    branch = solve_low_branch(nodes, matrices)
    clear_resolvent_cache(matrices)
    layout = layout_for("A0", matrices)
    signs = layout.field_signs() * layout.weights(matrices)
    rates, factors = [], []
    for sample in branch.samples:
        row = []
        for j in (1, 2):
            pair = eigenvector_low(sample.xi, j, matrices, lam=sample.value)
            state = ModeState.from_eigenpair(pair).vector(layout)
            row.append(_projector_factors(state, signs * state, probes))
        clear_resolvent_cache(matrices, sample.xi)
        rates.append([sample.value, sample.value])
        factors.append(row)
    return _stack(nodes, rates, factors)


def high_symbol(matrices: CollisionMatrices, probes: ProbeSet, lower: float, upper: float, panels: int) -> ModalSymbol:
    """High-frequency fluid part sum_{j=1..4} exp(beta_j t) Phi_j <Phi_j| on [lower, upper]."""
    nodes = panel_grid(lower, upper, panels)
    layout = layout_for("A0", matrices)
    signs = layout.field_signs() * layout.weights(matrices)
    rates, factors = [], []
    for xi in nodes:
        roots = {sign: solve_high_branch([xi], sign, matrices).samples[0].value for sign in (-1, 1)}
        row, values = [], []
        for j in (1, 2, 3, 4):
            lam = roots[HIGH_DIRECTIONS[j][0]]
            state = ModeState.from_eigenpair(eigenvector_high(float(xi), j, matrices, lam=lam)).vector(layout)
            row.append(_projector_factors(state, signs * state, probes))
            values.append(lam)
        clear_resolvent_cache(matrices, xi)
        rates.append(values)
        factors.append(row)
    LOGGER.debug("High-frequency symbol on %d nodes in [%.4g, %.4g]", nodes.size, lower, upper)
    return _stack(nodes, rates, factors)


def short_wave_symbol(matrices: CollisionMatrices, probes: ProbeSet, nodes: np.ndarray, *,
                      delta_only: bool = False) -> ModalSymbol:
    """The singular short wave G2^ = sum_j exp((alpha_j + gamma_j) t) [-Psi_j <Psi_j| + d_j X_j X_j^T].

    Psi_j = (u0_j, X_j) in the A0 layout; with delta_only the symbol is sum_j exp(alpha_j t) X_j X_j^T,
    whose inverse transform is the pair of delta waves at x = +-t.
    """
    layout = layout_for("A0", matrices)
    n3 = 3 * layout.n
    signs = layout.field_signs() * layout.weights(matrices)
    fields = slice(layout.index("E2"), layout.size)
    coefficients = {j: transverse_samples(nodes, j, matrices) for j in (1, 2, 3, 4)}
    rates, factors = [], []
    for k, xi in enumerate(nodes):
        row, values = [], []
        for j, (alpha, X, u0) in enumerate(oscillatory_profiles(float(xi), matrices), start=1):
            gamma, d = coefficients[j][0][k], coefficients[j][1][k]
            wave = np.zeros(layout.size, dtype=complex)
            wave[fields] = X
            if delta_only:
                row.append(_projector_factors(wave, wave, probes))
                values.append(alpha)
                continue
            psi = wave.copy()
            psi[:n3] = u0
            row.append(_projector_factors(psi, -signs * psi, probes))
            row.append(_projector_factors(wave, d * wave, probes))
            values.extend([alpha + gamma, alpha + gamma])
        rates.append(values)
        factors.append(row)
    return _stack(nodes, rates, factors)


def fluid_low_kernel(times, x, matrices: CollisionMatrices, *, r0: float, panels: int | None = None,
                     limit: float = OSCILLATION_LIMIT) -> SpaceTimeField:
    """G_{L,0}(t, x): the low-frequency fluid part on |xi| <= r0 / 2."""
    probes = vmb_probes(matrices)
    upper = 0.5 * r0
    panels = panels or panels_for(upper, _reach(x), limit)
    symbol = low_symbol(matrices, probes, upper, panels)
    blocks = np.array([_synthesize_centred(symbol.nodes, symbol.at(t), x, limit) for t in np.atleast_1d(times)])
    return SpaceTimeField(times, x, blocks, probes, label="G_L0")


def _check_bandwidth(x, lower: float, xi_max: float) -> None:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    step = float(np.min(np.diff(x))) if x.size > 1 else np.inf
    needed = max(lower, np.pi / (2.0 * step)) if np.isfinite(step) else lower
    if xi_max <= needed:
        raise ResolutionError(
            f"xi_max={xi_max:.4g} is too small for the x step {step:.3g}; use xi_max > {needed:.4g}"
        )


def _mollifier(nodes: np.ndarray, alpha: float, nu0: float) -> np.ndarray:
    """Symbol (nu0 + i xi)^{-alpha} of (nu0 + d/dx)^{-alpha}."""
    return (nu0 + 1j * nodes) ** (-alpha)


def F_alpha(times, x, alpha: float, matrices: CollisionMatrices, *, r1: float, xi_max: float,
            panels: int | None = None, limit: float = OSCILLATION_LIMIT) -> SpaceTimeField:
    """d_x^{-alpha} [G_{H,0} - G_{2,2}] with both symbols restricted to r1 <= |xi| <= xi_max."""
    if alpha < 0:
        raise UsageError(f"alpha must be nonnegative, got {alpha}")
    _check_bandwidth(x, r1, xi_max)
    probes = vmb_probes(matrices)
    panels = panels or panels_for(xi_max - r1, _reach(x), limit)
    high = high_symbol(matrices, probes, r1, xi_max, panels)
    wave = short_wave_symbol(matrices, probes, high.nodes)
    weight = (1j * high.nodes) ** (-alpha)
    blocks = []
    for t in np.atleast_1d(times):
        samples = weight[:, None, None] * (high.at(t) - wave.at(t))
        blocks.append(_synthesize_bands(high.nodes, samples, x, limit))
    return SpaceTimeField(times, x, np.array(blocks), probes, label=f"F_{alpha:g}")


def high_fluid_kernel(times, x, matrices: CollisionMatrices, *, r1: float, xi_max: float,
                      panels: int | None = None, limit: float = OSCILLATION_LIMIT) -> SpaceTimeField:
    """G_{H,0}(t, x) on r1 <= |xi| <= xi_max."""
    _check_bandwidth(x, r1, xi_max)
    probes = vmb_probes(matrices)
    panels = panels or panels_for(xi_max - r1, _reach(x), limit)
    high = high_symbol(matrices, probes, r1, xi_max, panels)
    blocks = np.array([_synthesize_bands(high.nodes, high.at(t), x, limit) for t in np.atleast_1d(times)])
    return SpaceTimeField(times, x, blocks, probes, label="G_H0")


@dataclass(eq=False)
class SingularShortWave:
    """G2 at one time: delta weights at x = t and x = -t plus sampled parts.

    For alpha = 0 the deltas are kept as weights and `regular` is the rest; for alpha > 0 the
    mollified deltas are sampled in closed form into `mollified`.
    """

    t: float
    alpha: float
    positions: np.ndarray
    weights: np.ndarray
    mollified: np.ndarray
    regular: np.ndarray
    probes: ProbeSet = field(repr=False)

    @property
    def centres(self) -> tuple[float, float]:
        return self.t, -self.t

    @property
    def total(self) -> np.ndarray:
        return self.mollified + self.regular

    def as_field(self, part: str = "total") -> SpaceTimeField:
        values = {"total": self.total, "regular": self.regular, "mollified": self.mollified}[part]
        return SpaceTimeField([self.t], self.positions, values[None], self.probes, label=f"G2_{part}")


def mollified_delta(y, alpha: float, nu0: float) -> np.ndarray:
    """(nu0 + d/dx)^{-alpha} delta at offset y: y_+^{alpha-1} exp(-nu0 y) / Gamma(alpha)."""
    y = np.asarray(y, dtype=float)
    positive = y > 0
    safe = np.where(positive, y, 1.0)
    return np.where(positive, safe ** (alpha - 1.0) * np.exp(-nu0 * safe) / gamma_function(alpha), 0.0)


def singular_short_wave(t: float, x, alpha: float, matrices: CollisionMatrices, *, r1: float, xi_max: float,
                        panels: int | None = None, limit: float = OSCILLATION_LIMIT) -> SingularShortWave:
    """(nu0 + d/dx)^{-alpha} G2(t, x), G2 the short wave restricted to |xi| >= r1."""
    if not 0 <= alpha <= 2:
        raise UsageError(f"alpha must lie in [0, 2], got {alpha}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_bandwidth(x, r1, xi_max)
    probes = vmb_probes(matrices)
    nu0 = matrices.nu0
    reach = _reach(x)

    delta_weights = np.zeros((2, probes.size, probes.size))
    layout = layout_for("A0", matrices)
    for j, (_, X) in enumerate(free_maxwell_modes(1.0), start=1):
        wave = np.zeros(layout.size)
        wave[layout.index("E2"):] = X
        delta_weights[0 if j <= 2 else 1] += np.outer(probes.measure(wave), probes.pair(wave)).real

    band_panels = panels or panels_for(xi_max - r1, reach, limit)
    band = panel_grid(r1, xi_max, band_panels)
    full = short_wave_symbol(matrices, probes, band)
    delta = short_wave_symbol(matrices, probes, band, delta_only=True)
    samples = _mollifier(band, alpha, nu0)[:, None, None] * (full.at(t) - delta.at(t))
    regular = _synthesize_bands(band, samples, x, limit)

    inner_panels = panels or panels_for(r1, reach, limit)
    inner = panel_grid(0.0, r1, inner_panels)
    inner_delta = short_wave_symbol(matrices, probes, inner, delta_only=True)
    regular -= _synthesize_centred(inner, _mollifier(inner, alpha, nu0)[:, None, None] * inner_delta.at(t), x, limit)

    mollified = np.zeros_like(regular)
    if alpha > 0:
        for weight, centre in zip(delta_weights, (t, -t)):
            mollified += mollified_delta(x - centre, alpha, nu0)[:, None, None] * weight
    elif np.any(np.isclose(np.abs(x), t)):
        LOGGER.warning("Regular part of G2 sampled on x = +-t (t=%.4g): logarithmically singular sample", t)
    return SingularShortWave(t, alpha, x, delta_weights, mollified, regular, probes)


def window_mass(t: float, w: float, matrices: CollisionMatrices, *, xi_max: float, panels: int | None = None
                ) -> np.ndarray:
    """int_{|x - t| <= w} of the field block of G2 (all frequencies up to xi_max), as a 4x4 matrix.

    Each wave j contributes (1 / pi) int (1 + d_j) exp(gamma_j t) exp(i xi (t - s_j t)) sin(w xi) / xi dxi
    with s_j = +1 for the right-moving waves and -1 for the left-moving ones.
    """
    if w <= 0 or t < 0:
        raise UsageError(f"window_mass needs w > 0 and t >= 0 (got w={w}, t={t})")
    shift = 2.0 * t
    # the sin(w xi) / xi factor is interpolated, not integrated exactly: resolve it like a phase
    panels = panels or panels_for(xi_max, shift + 4.0 * w, OSCILLATION_LIMIT)
    nodes = panel_grid(0.0, xi_max, panels)
    kernel = w * np.sinc(w * nodes / np.pi)
    mass = np.zeros((4, 4))
    for j, (_, X) in enumerate(free_maxwell_modes(1.0), start=1):
        gammas, ds = transverse_samples(nodes, j, matrices)
        profile = (1.0 + ds) * np.exp(gammas * t) * kernel
        # 2 pi (1 / 2 pi) int: the inverse transform at x = 0 (j = 1, 2) or x = 2t (j = 3, 4)
        offset = 0.0 if j <= 2 else shift
        value = 2.0 * np.pi * _synthesize_centred(nodes, profile[:, None], [offset], OSCILLATION_LIMIT)[0, 0]
        mass += value.real / np.pi * np.outer(X, X)
    return mass


def boltzmann_fluid_kernel(times, x, matrices: CollisionMatrices, *, r0: float, panels: int | None = None,
                           limit: float = OSCILLATION_LIMIT) -> SpaceTimeField:
    """G_{b,0}(t, x) = sum_{j=-1..3} exp(eta_j t) psi_j <psi_j| synthesized on |xi| <= r0."""
    probes = boltzmann_probes(matrices)
    layout = layout_for("B0", matrices)
    weights = layout.weights(matrices)
    panels = panels or panels_for(r0, _reach(x), limit)
    nodes = panel_grid(0.0, r0, panels)
    rates, factors = [], []
    for xi in nodes:
        pairs = boltzmann_eigenpairs(float(xi), matrices)
        rates.append([pairs[label].value for label in sorted(pairs)])
        factors.append([
            _projector_factors(pairs[label].stacked(fields=False), weights * pairs[label].stacked(fields=False), probes)
            for label in sorted(pairs)
        ])
    symbol = _stack(nodes, rates, factors)
    blocks = np.array([_synthesize_centred(symbol.nodes, symbol.at(t), x, limit) for t in np.atleast_1d(times)])
    return SpaceTimeField(times, x, blocks, probes, label="G_b0")


def _restriction(matrices: CollisionMatrices) -> np.ndarray:
    """A0 layout -> A1 layout: drops E1."""
    full = layout_for("A0", matrices)
    reduced = layout_for("A1", matrices)
    restriction = np.zeros((reduced.size, full.size))
    restriction[: 3 * full.n, : 3 * full.n] = np.eye(3 * full.n)
    for name in reduced.fields:
        restriction[reduced.index(name), full.index(name)] = 1.0
    return restriction


def initial_operator(xi: float, matrices: CollisionMatrices) -> np.ndarray:
    """G0^(xi): drop E1, then refill it from the Gauss law; the identity on admissible states."""
    return admissible_embedding(xi, matrices) @ _restriction(matrices)


def full_mode_green(t: float, xi: float, matrices: CollisionMatrices,
                    backend: PropagatorBackend | None = None) -> np.ndarray:
    """G^(t, xi) = exp(t A0) G0^(xi) on the A0 layout."""
    return propagator(assemble("A0", xi, matrices), t, backend) @ initial_operator(xi, matrices)


def green_parts(t: float, xi: float, matrices: CollisionMatrices, *, r0: float, r1: float,
                backend: PropagatorBackend | None = None) -> dict[str, np.ndarray]:
    """G^ = G_{L,0} + G_{L,1} + G_M + G_{H,0} + G_{H,1} at one (t, xi); all but the active parts are zero."""
    parts = decompose_semigroup(xi, t, matrices, r0=0.5 * r0, r1=r1, backend=backend)
    embedding = admissible_embedding(xi, matrices)
    restriction = _restriction(matrices)

    def lifted(op):
        return embedding @ op @ restriction

    size = embedding.shape[0]
    zero = np.zeros((size, size), dtype=complex)
    out = {name: zero for name in PARTS}
    if parts.regime == "low":
        out.update(L0=lifted(parts.S1), L1=lifted(parts.S3))
    elif parts.regime == "high":
        out.update(H0=lifted(parts.S2), H1=lifted(parts.S3))
    else:
        out["M"] = lifted(parts.S)
    return out


def remainder_norms(ts, xis, matrices: CollisionMatrices, *, r0: float, r1: float,
                    backend: PropagatorBackend | None = None) -> np.ndarray:
    """||G_{L,1} + G_M + G_{H,1}|| (admissible norm) over a (t, xi) grid; rows follow ts."""
    norms = np.zeros((len(ts), len(xis)))
    for b, xi in enumerate(xis):
        for a, t in enumerate(ts):
            parts = green_parts(float(t), float(xi), matrices, r0=r0, r1=r1, backend=backend)
            norms[a, b] = admissible_norm(parts["L1"] + parts["M"] + parts["H1"], float(xi), matrices)
        clear_resolvent_cache(matrices, xi)
    return norms


def remainder_decay(ts, xis, matrices: CollisionMatrices, *, r0: float, r1: float,
                    backend: PropagatorBackend | None = None) -> tuple[float, float]:
    """One (C, kappa0) with ||remainder(t, xi)|| <= C exp(-kappa0 t) over every sampled xi."""
    norms = remainder_norms(ts, xis, matrices, r0=r0, r1=r1, backend=backend)
    return decay_fit(np.asarray(ts, dtype=float), norms.max(axis=1))


def middle_green(times, x, matrices: CollisionMatrices, *, r0: float, r1: float, panels: int | None = None,
                 backend: PropagatorBackend | None = None, limit: float = OSCILLATION_LIMIT) -> SpaceTimeField:
    """G_M(t, x): the full mode Green's function synthesized on r0 / 2 <= |xi| <= r1."""
    probes = vmb_probes(matrices)
    lower = 0.5 * r0
    panels = panels or panels_for(r1 - lower, _reach(x), limit)
    nodes = panel_grid(lower, r1, panels)
    blocks = []
    for t in np.atleast_1d(times):
        samples = np.array([probes.reduce(full_mode_green(float(t), float(xi), matrices, backend)) for xi in nodes])
        blocks.append(_synthesize_bands(nodes, samples, x, limit))
    return SpaceTimeField(times, x, np.array(blocks), probes, label="G_M")


def heat_second_moment(x, profile) -> float:
    """int x^2 p dx / int p dx for a sampled profile."""
    x = np.asarray(x, dtype=float)
    profile = np.asarray(profile, dtype=float)
    return float(trapezoid(x**2 * profile, x) / trapezoid(profile, x))
