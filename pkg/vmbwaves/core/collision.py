# vmbwaves/core/collision.py
# Hard-sphere collision frequency, kernels and their sector matrices.
"""
Linearized hard-sphere collision operator L = K - nu and its companion
L1 = K1 - nu (the part that survives when only mass is conserved).

With M = (2 pi)^{-3/2} e^{-|v|^2/2}:

    nu(v)    = E|v - Z|, Z ~ M
    k1(v, u) = exp(-(|v|^2 - |u|^2)^2 / (8|v-u|^2) - |v-u|^2 / 8) / (pi sqrt(2 pi) |v-u|)
    l(v, u)  = |v - u| sqrt(M(v)) sqrt(M(u))
    k        = 2 k1 - l

so that K1 sqrt(M) = nu sqrt(M) and K annihilates (K - nu) on 1, v, |v|^2 times sqrt(M).

Sector matrices act on node coefficients: (A f)_i = sum_j K_m(i, j) s_j w_j f_j with
K_m(i, j) = int_0^{2 pi} k(v_i, u_j(theta)) cos(m theta) d theta. The theta integral
is split at pi/2; near theta = 0 the substitution sin(theta/2) = d sinh(tau) / (2 sqrt(r s))
absorbs the 1/|v - u| singularity.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.linalg as la
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.special import erf

from vmbwaves.core.velocity import (
    GridFunction,
    MacroBasis,
    VelocityGrid,
    build_basis,
    inner_product,
    maxwellian,
)
from vmbwaves.exceptions import AssemblyError, DiscretizationError, ProjectionError, SingularPointError, UsageError

LOGGER = logging.getLogger(__name__)

NU_PREFACTOR = 2.0 / np.sqrt(2.0 * np.pi)
K1_PREFACTOR = 1.0 / (np.pi * np.sqrt(2.0 * np.pi))
LOSS_PREFACTOR = (2.0 * np.pi) ** -1.5
SMALL_SPEED = 1e-4
BLOCK_ENTRIES = 400_000
HERMITE_NODES = 16

Kernel = Literal["k", "k1"]
Operator = Literal["L1", "L"]


def collision_frequency_speed(rho) -> np.ndarray:
    """nu as a function of |v|; the |v| -> 0 limit uses its Taylor expansion."""
    rho = np.abs(np.asarray(rho, dtype=float))
    small = rho < SMALL_SPEED
    safe = np.where(small, 1.0, rho)
    value = NU_PREFACTOR * (
        np.exp(-0.5 * safe**2) + (safe + 1.0 / safe) * np.sqrt(np.pi / 2.0) * erf(safe / np.sqrt(2.0))
    )
    series = NU_PREFACTOR * (2.0 + rho**2 / 3.0)
    return np.where(small, series, value)


def collision_frequency(v) -> float | np.ndarray:
    """nu(v) for a 3-vector (or an array of them along the last axis)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise UsageError(f"Expected 3-vectors, got shape {v.shape}")
    value = collision_frequency_speed(np.linalg.norm(v, axis=-1))
    return float(value) if value.ndim == 0 else value


def _k1_geometry(vv, uu, d2):
    return K1_PREFACTOR * np.exp(-((vv - uu) ** 2) / (8.0 * d2) - d2 / 8.0) / np.sqrt(d2)


def _loss_geometry(vv, uu, d2):
    return LOSS_PREFACTOR * np.sqrt(d2) * np.exp(-0.25 * (vv + uu))


def _pair_geometry(v, u):
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    d2 = np.sum((v - u) ** 2, axis=-1)
    if np.any(d2 == 0.0):
        raise SingularPointError("Kernel evaluated at v = u")
    return np.sum(v**2, axis=-1), np.sum(u**2, axis=-1), d2


def kernel_k1(v, u):
    return _k1_geometry(*_pair_geometry(v, u))


def kernel_loss(v, u):
    return _loss_geometry(*_pair_geometry(v, u))


def kernel_k(v, u):
    vv, uu, d2 = _pair_geometry(v, u)
    return 2.0 * _k1_geometry(vv, uu, d2) - _loss_geometry(vv, uu, d2)


KERNELS: dict[str, Callable] = {"k": kernel_k, "k1": kernel_k1, "loss": kernel_loss}


def full3d_apply(kernel: Kernel | Literal["loss"], v, g: Callable, *, radius: float | None = None,
                 n_rho: int = 48, n_mu: int = 32, n_phi: int = 32) -> float:
    """Slow cross-check of (K g)(v): spherical quadrature centred at v.

    Centring at v turns the 1/|v - u| singularity into a bounded integrand.
    """
    v = np.asarray(v, dtype=float)
    radius = radius if radius is not None else 12.0 + float(np.linalg.norm(v))
    x, w = leggauss(n_rho)
    rho, w_rho = 0.5 * radius * (x + 1.0), 0.5 * radius * w
    mu, w_mu = leggauss(n_mu)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_t = np.sqrt(1.0 - mu**2)

    omega = np.stack(
        [
            sin_t[:, None] * np.cos(phi)[None, :],
            sin_t[:, None] * np.sin(phi)[None, :],
            np.broadcast_to(mu[:, None], (n_mu, n_phi)),
        ],
        axis=-1,
    )
    u = v + rho[:, None, None, None] * omega[None, :, :, :]
    values = KERNELS[kernel](np.broadcast_to(v, u.shape), u) * g(u)
    weights = (w_rho * rho**2)[:, None, None] * w_mu[None, :, None] * (2.0 * np.pi / n_phi)
    return float(np.sum(values * weights))


def _root_maxwellian(u) -> np.ndarray:
    return (2.0 * np.pi) ** -0.75 * np.exp(-0.25 * np.sum(np.asarray(u) ** 2, axis=-1))


def tensor_apply(kernel: Kernel | Literal["loss"], v, g: Callable, *, n: int = HERMITE_NODES, n_mu: int = 8,
                 n_phi: int = 16) -> float:
    """Slow cross-check of (K g)(v) from the collision integral rather than the kernel formulas.

    u runs over an n^3 Gauss-Hermite tensor grid and omega over a sphere rule whose pole is v - u,
    split at the plane where |(v - u) . omega| has its kink:

        (K1 g)(v)   = 1/(4 pi) int int |(v-u).omega| sqrt(M(u)) [sqrt(M(v')) g(u') + sqrt(M(u')) g(v')] domega du
        (loss g)(v) = sqrt(M(v)) int |v - u| sqrt(M(u)) g(u) du

    with v' = v - ((v-u).omega) omega and u' = u + ((v-u).omega) omega.
    """
    v = np.asarray(v, dtype=float)
    x, w = hermgauss(n)
    line = np.sqrt(2.0) * w * np.exp(x**2)
    weights = (line[:, None, None] * line[None, :, None] * line[None, None, :]).ravel()
    u = np.sqrt(2.0) * np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)

    d = v - u
    dist = np.linalg.norm(d, axis=-1)
    root_u = _root_maxwellian(u)
    loss = float(_root_maxwellian(v) * np.sum(weights * dist * root_u * np.asarray(g(u), dtype=float)))
    if kernel == "loss":
        return loss

    y, wy = leggauss(n_mu)
    mu = np.concatenate([0.5 * (y - 1.0), 0.5 * (y + 1.0)])
    w_mu = np.concatenate([0.5 * wy, 0.5 * wy])
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_mu = np.sqrt(1.0 - mu**2)

    axis = d / np.where(dist == 0.0, 1.0, dist)[:, None]
    axis[dist == 0.0] = (0.0, 0.0, 1.0)
    helper = np.where(np.abs(axis[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = helper - np.sum(helper * axis, axis=-1, keepdims=True) * axis
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(axis, e1)

    ring = (np.cos(phi)[None, None, :, None] * e1[:, None, None, :]
            + np.sin(phi)[None, None, :, None] * e2[:, None, None, :])
    omega = mu[None, :, None, None] * axis[:, None, None, :] + sin_mu[None, :, None, None] * ring
    proj = dist[:, None, None] * mu[None, :, None]
    v_post = v - proj[..., None] * omega
    u_post = u[:, None, None, :] + proj[..., None] * omega
    gain = np.abs(proj) * (
        _root_maxwellian(v_post) * np.asarray(g(u_post), dtype=float)
        + _root_maxwellian(u_post) * np.asarray(g(v_post), dtype=float)
    )
    sphere = np.sum(gain * w_mu[None, :, None], axis=(1, 2)) * (2.0 * np.pi / n_phi)
    k1 = float(np.sum(weights * root_u * sphere)) / (4.0 * np.pi)
    return k1 if kernel == "k1" else 2.0 * k1 - loss


def kernel_identity_defect(kernel: Kernel, points) -> float:
    """max |(K sqrt(M))(v) - nu(v) sqrt(M(v))| / (nu(v) sqrt(M(v))) over the points, by full3d_apply."""
    worst = 0.0
    for v in np.atleast_2d(np.asarray(points, dtype=float)):
        target = collision_frequency(v) * _root_maxwellian(v)
        worst = max(worst, abs(full3d_apply(kernel, v, _root_maxwellian) - target) / target)
    return float(worst)


@dataclass(frozen=True)
class AzimuthalRule:
    """Gauss-Legendre orders for the tau-mapped [0, pi/2] and plain [pi/2, pi] pieces."""

    n_tau: int = 24
    n_theta: int = 16

    def nodes(self):
        return leggauss(self.n_tau), leggauss(self.n_theta)


def _sector_rows(grid: VelocityGrid, rows: np.ndarray, m: int, rule: AzimuthalRule):
    """Raw K1_m and loss_m kernel values for a block of rows (self entries of K1 are 0)."""
    (xt, wt), (xb, wb) = rule.nodes()
    v1 = grid.v1[rows][:, None]
    r = grid.r[rows][:, None]
    u1 = grid.v1[None, :]
    s = grid.r[None, :]
    vv = (v1**2 + r**2)[..., None]
    uu = (u1**2 + s**2)[..., None]
    rs = r * s
    dp2 = (v1 - u1) ** 2 + (r - s) ** 2
    self_mask = dp2 == 0.0
    dp = np.sqrt(np.where(self_mask, 1.0, dp2))
    root_rs = np.sqrt(rs)

    # tau-mapped piece: d^2(theta) = dp^2 cosh^2(tau)
    tau_max = np.arcsinh(np.sqrt(2.0) * root_rs / dp)[..., None]
    tau = 0.5 * tau_max * (xt + 1.0)
    half_sin = np.clip(dp[..., None] * np.sinh(tau) / (2.0 * root_rs[..., None]), 0.0, 1.0)
    theta_a = 2.0 * np.arcsin(half_sin)
    d2_a = (dp[..., None] * np.cosh(tau)) ** 2
    w_a = 0.5 * tau_max * wt * dp[..., None] * np.cosh(tau) / (root_rs[..., None] * np.cos(0.5 * theta_a))

    theta_b = np.broadcast_to(0.5 * np.pi + 0.25 * np.pi * (xb + 1.0), dp2.shape + (rule.n_theta,))
    d2_b = dp2[..., None] + 4.0 * rs[..., None] * np.sin(0.5 * theta_b) ** 2
    w_b = np.broadcast_to(0.25 * np.pi * wb, theta_b.shape)

    theta = np.concatenate([theta_a, theta_b], axis=-1)
    d2 = np.concatenate([d2_a, d2_b], axis=-1)
    weights = np.concatenate([w_a, w_b], axis=-1) * np.cos(m * theta)

    k1 = 2.0 * np.sum(weights * _k1_geometry(vv, uu, d2), axis=-1)
    loss = 2.0 * np.sum(weights * _loss_geometry(vv, uu, d2), axis=-1)
    k1[self_mask] = 0.0

    if np.any(self_mask):
        # the loss kernel is bounded at coincidence: plain rule on [0, pi]
        x_all, w_all = leggauss(rule.n_tau + rule.n_theta)
        theta_s = 0.5 * np.pi * (x_all + 1.0)
        w_s = 0.5 * np.pi * w_all * np.cos(m * theta_s)
        i_rows, j_cols = np.nonzero(self_mask)
        r_self = grid.r[rows][i_rows]
        vv_self = grid.speed_squared[rows][i_rows]
        d2_self = 4.0 * r_self[:, None] ** 2 * np.sin(0.5 * theta_s) ** 2
        loss[i_rows, j_cols] = 2.0 * np.sum(
            w_s * _loss_geometry(vv_self[:, None], vv_self[:, None], d2_self), axis=-1
        )
    return k1, loss


def sector_kernels(grid: VelocityGrid, m: int, rule: AzimuthalRule = AzimuthalRule(), threads: int = 1):
    """Raw azimuthal kernels (K1_m, loss_m) as N x N arrays, assembled in row blocks."""
    n = grid.size
    block = max(1, BLOCK_ENTRIES // (n * (rule.n_tau + rule.n_theta)))
    chunks = [np.arange(start, min(start + block, n)) for start in range(0, n, block)]
    k1 = np.empty((n, n))
    loss = np.empty((n, n))

    def work(rows):
        return rows, _sector_rows(grid, rows, m, rule)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for rows, (k1_rows, loss_rows) in pool.map(work, chunks):
            k1[rows] = k1_rows
            loss[rows] = loss_rows

    if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(loss))):
        bad = np.argwhere(~np.isfinite(k1) | ~np.isfinite(loss))[0]
        raise AssemblyError(
            f"Non-finite sector-{m} kernel at node pair {tuple(bad)} "
            f"(v1={grid.v1[bad[0]]:.4g}, r={grid.r[bad[0]]:.4g}); raise n_tau/n_theta"
        )
    return k1, loss


def _to_action(kernel_values: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    return kernel_values * (grid.r * grid.base_weights)[None, :]


def _fill_diagonal(action: np.ndarray, target: np.ndarray, profile: np.ndarray) -> np.ndarray:
    """Sets the self entries so that action @ profile == target."""
    action = action.copy()
    np.fill_diagonal(action, 0.0)
    np.fill_diagonal(action, (target - action @ profile) / profile)
    return action


def _null_correction(action: np.ndarray, weights: np.ndarray, nu: np.ndarray, members) -> np.ndarray:
    """Symmetric low-rank correction enforcing action chi = nu chi on the given members."""
    root = np.sqrt(weights)
    sym = root[:, None] * action / root[None, :]
    q = np.column_stack([root * chi.coeffs.real for chi in members])
    q, _ = np.linalg.qr(q)
    t = nu[:, None] * q
    p = np.eye(action.shape[0]) - q @ q.T
    sym = p @ sym @ p + t @ q.T + q @ t.T - q @ (q.T @ t) @ q.T
    sym = 0.5 * (sym + sym.T)
    return sym / root[:, None] * root[None, :]


def assemble_sector(kernel: Kernel, m: int, grid: VelocityGrid, basis: MacroBasis | None = None, *,
                    rule: AzimuthalRule = AzimuthalRule(), threads: int = 1, raw=None) -> np.ndarray:
    """Matrix of K (kernel='k') or K1 (kernel='k1') on sector m acting on node coefficients."""
    if m not in (0, 1):
        raise UsageError(f"Sector must be 0 or 1, got {m}")
    if kernel not in ("k", "k1"):
        raise UsageError(f"Unknown kernel {kernel!r}")
    basis = basis or build_basis(grid)
    nu = collision_frequency_speed(grid.speed)
    k1_raw, loss_raw = raw if raw is not None else sector_kernels(grid, m, rule, threads)
    loss = _to_action(loss_raw, grid)

    if m == 0:
        chi = basis.chi0.coeffs.real
        k1 = _fill_diagonal(_to_action(k1_raw, grid), nu * chi, chi)
    else:
        chi = basis.chi2.coeffs.real
        k1 = _fill_diagonal(_to_action(k1_raw, grid), 0.5 * (nu * chi + loss @ chi), chi)

    if kernel == "k1":
        return k1
    full = 2.0 * k1 - loss
    return _null_correction(full, grid.weights(m), nu, basis.sector_members(m))


@dataclass(eq=False)
class CollisionMatrices:
    grid: VelocityGrid
    basis: MacroBasis
    nu: np.ndarray
    K: dict[int, np.ndarray]
    K1: dict[int, np.ndarray]
    L: dict[int, np.ndarray]
    L1: dict[int, np.ndarray]
    mu: float = 0.0
    nu0: float = 0.0
    nu1: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    def weights(self, sector: int) -> np.ndarray:
        return self.grid.weights(sector)

    def operator(self, name: str, sector: int) -> np.ndarray:
        return getattr(self, name)[sector]

    def symmetrized(self, name: str, sector: int) -> np.ndarray:
        """W^{1/2} A W^{-1/2}: a real symmetric matrix."""
        key = ("sym", name, sector)
        if key not in self._cache:
            root = np.sqrt(self.weights(sector))
            sym = root[:, None] * self.operator(name, sector) / root[None, :]
            self._cache[key] = 0.5 * (sym + sym.T)
        return self._cache[key]

    def null_members(self, op: Operator, sector: int) -> tuple[GridFunction, ...]:
        if op == "L1":
            return (self.basis.chi0,) if sector == 0 else ()
        return self.basis.sector_members(sector)

    def complement(self, op: Operator, sector: int) -> np.ndarray | None:
        """Orthonormal basis (symmetrized coordinates) of the microscopic range, or None if full."""
        key = ("complement", op, sector)
        if key not in self._cache:
            members = self.null_members(op, sector)
            if not members:
                self._cache[key] = None
            else:
                root = np.sqrt(self.weights(sector))
                q = np.column_stack([root * chi.coeffs.real for chi in members])
                self._cache[key] = la.null_space(q.T)
        return self._cache[key]


def fit_nu_bounds(grid: VelocityGrid) -> tuple[float, float]:
    ratio = collision_frequency_speed(grid.speed) / (1.0 + grid.speed)
    ratio = np.append(ratio, collision_frequency_speed(0.0))
    return float(ratio.min()), float(ratio.max())


def assemble_collision(grid: VelocityGrid, *, rule: AzimuthalRule = AzimuthalRule(), threads: int = 1,
                       basis: MacroBasis | None = None) -> CollisionMatrices:
    """Assembles K, K1, L, L1 on both sectors and measures the spectral gap."""
    basis = basis or build_basis(grid)
    nu = collision_frequency_speed(grid.speed)
    K, K1 = {}, {}
    for m in (0, 1):
        LOGGER.info("Assembling sector %d kernels on %d nodes", m, grid.size)
        raw = sector_kernels(grid, m, rule, threads)
        K1[m] = assemble_sector("k1", m, grid, basis, raw=raw)
        K[m] = assemble_sector("k", m, grid, basis, raw=raw)
    diag = np.diag(nu)
    nu0, nu1 = fit_nu_bounds(grid)
    matrices = CollisionMatrices(
        grid=grid,
        basis=basis,
        nu=nu,
        K=K,
        K1=K1,
        L={m: K[m] - diag for m in (0, 1)},
        L1={m: K1[m] - diag for m in (0, 1)},
        nu0=nu0,
        nu1=nu1,
    )
    matrices.mu = spectral_gap(matrices)
    LOGGER.info("Spectral gap mu=%.6g, nu0=%.4g, nu1=%.4g", matrices.mu, nu0, nu1)
    return matrices


def restricted_spectrum(matrices: CollisionMatrices, op: Operator, sector: int) -> np.ndarray:
    sym = matrices.symmetrized(op, sector)
    basis = matrices.complement(op, sector)
    if basis is not None:
        sym = basis.T @ sym @ basis
    return la.eigvalsh(sym)


def spectral_gap(matrices: CollisionMatrices, op: Operator = "L1") -> float:
    """mu = -(largest eigenvalue on the microscopic range), minimized over sectors."""
    top = max(restricted_spectrum(matrices, op, sector)[-1] for sector in (0, 1))
    if top >= 0:
        grid = matrices.grid
        raise DiscretizationError(
            f"{op} has a nonnegative eigenvalue {top:.3e} on the microscopic range "
            f"(grid R={grid.R}, n_v1={grid.n_v1}, n_r={grid.n_r}); refine the grid or the azimuthal rule"
        )
    return float(-top)


def solve_microscopic(matrices: CollisionMatrices, op: Operator, rhs: GridFunction, *,
                      tol: float = 1e-6) -> GridFunction:
    """Solves op g = rhs with g in the microscopic range of op."""
    sector = rhs.sector
    weights = matrices.weights(sector)
    root = np.sqrt(weights)
    scale = max(1.0, float(np.sqrt(np.sum(weights * np.abs(rhs.coeffs) ** 2))))
    for chi in matrices.null_members(op, sector):
        component = abs(inner_product(rhs, chi, matrices.grid))
        if component > tol * scale:
            raise ProjectionError(
                f"Right-hand side has a null-space component {component:.3e} for {op} in sector {sector}"
            )
    if not np.any(rhs.coeffs):
        return GridFunction(sector, np.zeros_like(rhs.coeffs))

    sym = matrices.symmetrized(op, sector)
    basis = matrices.complement(op, sector)
    b = root * rhs.coeffs
    if basis is None:
        solution = la.solve(sym, b, assume_a="sym")
    else:
        solution = basis @ la.solve(basis.T @ sym @ basis, basis.T @ b, assume_a="sym")
    return GridFunction(sector, solution / root)


def cross_validate_sector(matrices: CollisionMatrices, kernel: Kernel, m: int, profile: Callable, *,
                          max_speed: float = 2.5) -> float:
    """Deviation of the sector m matrix action from tensor_apply at nodes with |v| <= max_speed.

    profile(v1, r) gives the node coefficients; the 3-D function is profile(u1, |u'|) cos(m theta).
    The result is relative to the largest oracle value.
    """
    grid = matrices.grid
    name = {"k1": "K1", "k": "K"}[kernel]
    action = matrices.operator(name, m) @ profile(grid.v1, grid.r)

    def lifted(u):
        rho = np.hypot(u[..., 1], u[..., 2])
        angular = np.ones_like(rho) if m == 0 else u[..., 1] / np.where(rho == 0.0, 1.0, rho)
        return profile(u[..., 0], rho) * angular

    nodes = np.flatnonzero(grid.speed <= max_speed)
    oracle = np.array([tensor_apply(kernel, (grid.v1[i], grid.r[i], 0.0), lifted) for i in nodes])
    deviation = float(np.max(np.abs(action[nodes] - oracle)) / np.max(np.abs(oracle)))
    LOGGER.debug("Sector %d %s action vs tensor grid at %d nodes: %.3e", m, kernel, nodes.size, deviation)
    return deviation


def resolvent_bound_exponent(matrices: CollisionMatrices, xis=(10.0, 30.0, 100.0)) -> tuple[float, np.ndarray]:
    """Fitted exponent of ||K1 (lambda - c(xi))^{-1}|| on Re lambda = -nu0/2, lambda = -nu0/2 - i xi.

    The resonance at v1 = 1 is narrower than a v1 cell once xi is large, so |(lambda - c)^{-1}|^2 is
    averaged over each node's cell before the norm ||K1 R||^2 = ||K1 |R|^2 K1^*|| is taken.
    """
    grid = matrices.grid
    width = grid.v1_widths
    damping = matrices.nu - 0.5 * matrices.nu0
    norms = []
    for xi in xis:
        upper = np.arctan(xi * (grid.v1 + 0.5 * width - 1.0) / damping)
        lower = np.arctan(xi * (grid.v1 - 0.5 * width - 1.0) / damping)
        averaged = (upper - lower) / (damping * xi * width)
        sector_norms = []
        for m in (0, 1):
            S = matrices.symmetrized("K1", m)
            sector_norms.append(np.sqrt(np.linalg.norm((S * averaged[None, :]) @ S.conj().T, 2)))
        norms.append(max(sector_norms))
    norms = np.asarray(norms)
    slope = np.polyfit(np.log1p(np.asarray(xis)), np.log(norms), 1)[0]
    LOGGER.debug("Resolvent norms %s, fitted exponent %.3f", norms, slope)
    return float(slope), norms
