# vmbwaves/core/kinetic.py
# Picard hierarchy, mixture operators and singular kinetic waves in Fourier space.
"""
Mixture operators are nested Duhamel integrals of the free transport S^t = exp(c t),
c = -(nu + i v1 xi), with collision kernels inserted between the transport steps. Every family
is obtained as the level coefficients of one matrix exponential (vmbwaves.core.hierarchy):

    M        A = diag(c) on [f0 | fc | fs], B_1 = K1 (VMB) or K (Boltzmann)
    Q        A = A2, B_1 = A3 on the A1 layout; Q_n = Q_{n,1} + Q_{n,2} where Q_{n,2} is the
             part carried by the eigenvalues +-i xi of the free Maxwell block
    U        the coupled (J, U2, U3) / (H, U1) sequence approximating the full Green's function,
             with the E1 component U1 recovered algebraically
    Y, Z     Y_n = sum_{k <= 3n} U_k and Z_n = G P - Y_n
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.integrate import quad_vec

from vmbwaves.backends import PropagatorBackend
from vmbwaves.core.collision import CollisionMatrices
from vmbwaves.core.fitting import EnvelopeFit, envelope_constant, xi_gain
from vmbwaves.core.hierarchy import LevelSeries, generator_series, level_derivative, level_exponential, riesz_projector
from vmbwaves.core.modes import (
    admissible_embedding,
    admissible_norm,
    assemble,
    boltzmann_remainder,
    free_maxwell_modes,
    propagator,
    weighted_norm,
)
from vmbwaves.core.quadrature import inverse_fourier, panel_grid
from vmbwaves.core.velocity import field_couplings
from vmbwaves.exceptions import ConvergenceError, UsageError

LOGGER = logging.getLogger(__name__)

FAMILIES = ("M", "M_boltz", "Q", "Q1", "Q2", "U", "U1", "U2", "Y", "Z")
VARIANTS = {"K1": "K1", "K": "K"}
DELTA_FRACTION = 0.05
ORACLE_TOL = 1e-11
CONFLUENT_TOL = 1e-10


@dataclass(eq=False)
class MixtureOperator:
    family: str
    level: int
    t: float
    xi: float
    matrix: np.ndarray
    matrices: CollisionMatrices = field(repr=False)
    domain: str = "weighted"

    @property
    def norm(self) -> float:
        """Weighted L2 operator norm; U/Y/Z operators use the admissible norm of their inputs."""
        if self.domain == "admissible":
            return admissible_norm(self.matrix, self.xi, self.matrices)
        return weighted_norm(self.matrix, _weights(self.matrix.shape[0], self.matrices))


def _weights(size: int, matrices: CollisionMatrices) -> np.ndarray:
    n = matrices.grid.size
    w0, w1 = matrices.weights(0), matrices.weights(1)
    full = np.concatenate([w0, w1, w1])
    if size == n:
        return w0
    if size == 3 * n:
        return full
    return np.concatenate([full, np.ones(size - 3 * n)])


def transport_symbol(xi: float, matrices: CollisionMatrices) -> np.ndarray:
    """c(xi) = -(nu + i v1 xi) on the grid nodes."""
    return -(matrices.nu + 1j * xi * matrices.grid.v1)


def transport_action(t: float, h, x, matrices: CollisionMatrices) -> np.ndarray:
    """S^t h(x, v) = exp(-nu(v) t) h(x - v1 t, v) at the positions x and the sector 0 nodes.

    h is called with shifted positions of shape (len(x), N) and returns values of the same shape.
    """
    if t < 0:
        raise UsageError(f"Transport time must be nonnegative, got {t}")
    grid = matrices.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    shifted = x[:, None] - grid.v1[None, :] * t
    return np.exp(-matrices.nu * t)[None, :] * np.asarray(h(shifted))


def weighted_sup(values: np.ndarray, matrices: CollisionMatrices, beta: float = 0.0) -> np.ndarray:
    """sup over v of (1 + |v|)^beta |values| for every x row."""
    weight = (1.0 + matrices.grid.speed) ** beta
    return np.max(np.abs(values) * weight[None, :], axis=1)


def _kinetic_blocks(matrices: CollisionMatrices, variant: str, sector: int | None) -> np.ndarray:
    if variant not in VARIANTS:
        raise UsageError(f"Mixture variant must be K or K1, got {variant!r}")
    blocks = getattr(matrices, VARIANTS[variant])
    if sector is not None:
        return blocks[sector]
    return la.block_diag(blocks[0], blocks[1], blocks[1])


def mixture_levels(t: float, xi: float, matrices: CollisionMatrices, order: int, *, variant: str = "K1",
                   sector: int | None = None) -> list[MixtureOperator]:
    """M^t_0 .. M^t_order on one sector or on the stacked [f0 | fc | fs] space."""
    coupling = _kinetic_blocks(matrices, variant, sector)
    c = transport_symbol(xi, matrices)
    diagonal = c if sector is not None else np.tile(c, 3)
    series = level_exponential(np.diag(diagonal), [coupling], t, order)
    family = "M" if variant == "K1" else "M_boltz"
    return [MixtureOperator(family, k, t, xi, series[k], matrices) for k in range(order + 1)]


def mixture_M(n: int, t: float, xi: float, matrices: CollisionMatrices, variant: str = "K1",
              sector: int | None = None) -> MixtureOperator:
    return mixture_levels(t, xi, matrices, n, variant=variant, sector=sector)[n]


def _propagator_factory(A: np.ndarray):
    values, vectors = la.eig(A)
    inverse = la.inv(vectors)

    def exp(s):
        return (vectors * np.exp(s * values)[None, :]) @ inverse

    return exp


def duhamel_oracle(A: np.ndarray, B: np.ndarray, t: float, level: int) -> np.ndarray:
    """Level 1 or 2 nested Duhamel integral of exp(sA) and B by adaptive quadrature."""
    if level not in (1, 2):
        raise UsageError(f"The quadrature oracle covers levels 1 and 2, got {level}")
    exp = _propagator_factory(A)

    def single(s):
        value, _ = quad_vec(lambda r: exp(s - r) @ B @ exp(r), 0.0, s, epsabs=ORACLE_TOL, epsrel=1e-10)
        return value

    if level == 1:
        return single(t)
    value, _ = quad_vec(lambda s: exp(t - s) @ B @ single(s), 0.0, t, epsabs=ORACLE_TOL, epsrel=1e-10)
    return value


def mixture_oracle(level: int, t: float, xi: float, matrices: CollisionMatrices, variant: str = "K1",
                   sector: int = 0) -> np.ndarray:
    """M^t_level on one sector by direct quadrature; level 1 uses the closed-form time integral."""
    coupling = _kinetic_blocks(matrices, variant, sector)
    c = transport_symbol(xi, matrices)
    if level == 1:
        def integrand(s):
            return np.exp(c * (t - s))[:, None] * coupling * np.exp(c * s)[None, :]

        value, _ = quad_vec(integrand, 0.0, t, epsabs=ORACLE_TOL, epsrel=1e-10)
        return value
    return duhamel_oracle(np.diag(c), coupling, t, level)


def _q_generators(xi: float, matrices: CollisionMatrices) -> tuple[np.ndarray, np.ndarray]:
    return assemble("A2", xi, matrices).matrix, assemble("A3", xi, matrices).matrix


def _maxwell_basis(xi: float, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """T = blockdiag(I, [X_1..X_4]), its inverse, and the free Maxwell eigenvalues."""
    modes = free_maxwell_modes(xi)
    X = np.column_stack([vector for _, vector in modes])
    T = la.block_diag(np.eye(3 * n), X).astype(complex)
    T_inv = la.block_diag(np.eye(3 * n), X.T).astype(complex)
    return T, T_inv, np.array([alpha for alpha, _ in modes])


@dataclass
class QSplit:
    Q: list[np.ndarray]
    Q1: list[np.ndarray]
    Q2: list[np.ndarray]


def split_Q_levels(t: float, xi: float, matrices: CollisionMatrices, order: int) -> QSplit:
    """Q_n and its split Q_{n,1} + Q_{n,2} for every n <= order."""
    n = matrices.grid.size
    A2, A3 = _q_generators(xi, matrices)
    T, T_inv, alphas = _maxwell_basis(xi, n)
    diagonal = np.concatenate([np.tile(transport_symbol(xi, matrices), 3), alphas])
    coupling = T_inv @ A3 @ T
    selected = np.zeros(diagonal.size, dtype=bool)
    selected[3 * n:] = True

    exponential = level_exponential(np.diag(diagonal), [coupling], t, order)
    projector = riesz_projector(diagonal, coupling, selected, order)
    oscillatory = (exponential @ projector).conjugated(T, T_inv)
    full = exponential.conjugated(T, T_inv)
    Q2 = oscillatory.terms
    return QSplit(Q=full.terms, Q1=[q - q2 for q, q2 in zip(full.terms, Q2)], Q2=Q2)


def mixture_Q(n: int, t: float, xi: float, matrices: CollisionMatrices) -> MixtureOperator:
    A2, A3 = _q_generators(xi, matrices)
    series = level_exponential(A2, [A3], t, n)
    return MixtureOperator("Q", n, t, xi, series[n], matrices)


def split_Q(n: int, t: float, xi: float, matrices: CollisionMatrices) -> tuple[MixtureOperator, MixtureOperator]:
    parts = split_Q_levels(t, xi, matrices, n)
    return (
        MixtureOperator("Q1", n, t, xi, parts.Q1[n], matrices),
        MixtureOperator("Q2", n, t, xi, parts.Q2[n], matrices),
    )


def oscillatory_profiles(xi: float, matrices: CollisionMatrices) -> list[tuple[complex, np.ndarray, np.ndarray]]:
    """(alpha_j, X_j, u0_j) with u0_j = (coupling X_j) / (nu + i v1 xi + alpha_j) on [f0 | fc | fs]."""
    n = matrices.grid.size
    _, trans = field_couplings(matrices.basis)
    c = transport_symbol(xi, matrices)
    profiles = []
    for alpha, X in free_maxwell_modes(xi):
        source = np.concatenate([np.zeros(n), trans * X[0], trans * X[1]]).astype(complex)
        profiles.append((alpha, X, source / (alpha - np.tile(c, 3))))
    return profiles


def _first_divided(values: np.ndarray, derivative: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """(f(z_a) - f(z_b)) / (z_a - z_b), with f' where two nodes meet."""
    gap = nodes[:, None] - nodes[None, :]
    close = np.abs(gap) < CONFLUENT_TOL
    safe = np.where(close, 1.0, gap)
    tangent = 0.5 * (derivative[:, None] + derivative[None, :])
    return np.where(close, tangent, (values[:, None] - values[None, :]) / safe)


def explicit_Q_split(n: int, t: float, xi: float, matrices: CollisionMatrices) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (Q_{n,1}, Q_{n,2}) for n <= 2, independent of the level algebra."""
    if n not in (0, 1, 2):
        raise UsageError(f"The closed-form split covers n = 0, 1 and 2, got {n}")
    if n == 2:
        return _second_level_split(t, xi, matrices)
    size = 3 * matrices.grid.size
    c = np.tile(transport_symbol(xi, matrices), 3)
    decay = np.exp(c * t)
    Q1 = np.zeros((size + 4, size + 4), dtype=complex)
    Q2 = np.zeros_like(Q1)
    modes = oscillatory_profiles(xi, matrices)

    if n == 0:
        Q1[:size, :size] = np.diag(decay)
        for alpha, X, _ in modes:
            Q2[size:, size:] += np.exp(alpha * t) * np.outer(X, X)
        return Q1, Q2

    K1 = _kinetic_blocks(matrices, "K1", None)
    Q1[:size, :size] = K1 * _first_divided(decay, t * decay, c)
    w = _weights(size, matrices)
    for alpha, X, u0 in modes:
        phase = np.exp(alpha * t)
        Q2[:size, size:] += phase * np.outer(u0, X)
        Q2[size:, :size] -= phase * np.outer(X, w * u0)
        Q1[:size, size:] -= np.outer(decay * u0, X)
        Q1[size:, :size] += np.outer(X, w * u0 * decay)
    return Q1, Q2


def _second_level_split(t: float, xi: float, matrices: CollisionMatrices) -> tuple[np.ndarray, np.ndarray]:
    """Q_2 as a sum over two-step paths in the Maxwell eigenbasis.

    Every path a -> b -> e contributes B_ab B_be exp[d_a, d_b, d_e] with d = (c, alpha). The residues
    at the transport nodes c go to Q_{2,1} and those at the field eigenvalues alpha to Q_{2,2}.
    Paths with two consecutive field steps vanish since A3 has no field-field block.
    """
    size = 3 * matrices.grid.size
    _, A3 = _q_generators(xi, matrices)
    T, T_inv, alphas = _maxwell_basis(xi, matrices.grid.size)
    B = T_inv @ A3 @ T
    BKK, BKF, BFK = B[:size, :size], B[:size, size:], B[size:, :size]
    c = np.tile(transport_symbol(xi, matrices), 3)
    decay = np.exp(c * t)
    Q1 = np.zeros((size + 4, size + 4), dtype=complex)
    Q2 = np.zeros_like(Q1)

    # kinetic -> kinetic -> kinetic
    first = _first_divided(decay, t * decay, c)
    gap = c[:, None] - c[None, :]
    close = np.abs(gap) < CONFLUENT_TOL
    safe = np.where(close, 1.0, gap)
    slope = np.where(close, 0.5 * t**2 * decay[:, None], (t * decay[:, None] - first) / safe)
    weighted = BKK * first
    Q1[:size, :size] = np.where(close, (BKK * slope) @ BKK, (weighted @ BKK - BKK @ weighted) / safe)

    for j, alpha in enumerate(alphas):
        phase = np.exp(alpha * t)
        resolvent = 1.0 / (alpha - c)
        P = _first_divided(-decay * resolvent, decay * (-t * resolvent - resolvent**2), c)
        u = BKF[:, j] * resolvent
        r = BFK[j, :] * resolvent

        # kinetic -> field -> kinetic
        Q2[:size, :size] += phase * np.outer(u, r)
        Q1[:size, :size] += np.outer(BKF[:, j], BFK[j, :]) * P
        # kinetic -> kinetic -> field
        Q2[:size, size + j] += phase * resolvent * (BKK @ u)
        Q1[:size, size + j] += (BKK * P) @ BKF[:, j]
        # field -> kinetic -> kinetic
        Q2[size + j, :size] += phase * (r @ BKK) * resolvent
        Q1[size + j, :size] += BFK[j, :] @ (BKK * P)
        # field -> kinetic -> field
        for l, beta in enumerate(alphas):
            path = BFK[j, :] * BKF[:, l]
            Q1[size + j, size + l] += np.sum(path * decay * resolvent / (beta - c))
            if abs(alpha - beta) < CONFLUENT_TOL:
                residue = phase * (t * resolvent - resolvent**2)
            else:
                residue = (phase * resolvent - np.exp(beta * t) / (beta - c)) / (alpha - beta)
            Q2[size + j, size + l] += np.sum(path * residue)
    return T @ Q1 @ T_inv, T @ Q2 @ T_inv


def selection_coefficients(t: float, xi: float, matrices: CollisionMatrices) -> np.ndarray:
    """b_jl = X_j^T (field block of Q_{2,2}) X_l; only the partners l in {j, l_j} survive."""
    size = 3 * matrices.grid.size
    Q2 = split_Q_levels(t, xi, matrices, 2).Q2[2]
    X = np.column_stack([vector for _, vector in free_maxwell_modes(xi)])
    return X.T @ Q2[size:, size:] @ X


SELECTION_PARTNERS = {0: (0, 2), 1: (1, 3), 2: (2, 0), 3: (3, 1)}


def oscillatory_sandwich(t: float, xi: float, matrices: CollisionMatrices) -> float:
    """|| int_0^t S2^{t-s} A3 S2^s ds || with S2 the free Maxwell part of exp(t A2)."""
    size = 3 * matrices.grid.size
    _, A3 = _q_generators(xi, matrices)
    modes = free_maxwell_modes(xi)

    def maxwell(s):
        out = np.zeros_like(A3)
        for alpha, X in modes:
            out[size:, size:] += np.exp(alpha * s) * np.outer(X, X)
        return out

    value, _ = quad_vec(lambda s: maxwell(t - s) @ A3 @ maxwell(s), 0.0, t, epsabs=1e-14)
    return float(np.linalg.norm(value, 2))


@dataclass
class PicardLevels:
    """Level data of the U sequence, every block an operator on the A1 layout.

    J: [f0 | fc | fs] part driven by the free fields, F: (E2, E3, B2, B3), H: sector 0 part
    driven by E1, U1: the algebraic E1 row. The d-prefixed lists are time derivatives and
    J2/F2 the oscillatory parts of J/F.
    """

    t: float
    xi: float
    J: list[np.ndarray]
    F: list[np.ndarray]
    H: list[np.ndarray]
    U1: list[np.ndarray]
    dJ: list[np.ndarray] = field(default_factory=list)
    dF: list[np.ndarray] = field(default_factory=list)
    dH: list[np.ndarray] = field(default_factory=list)
    dU1: list[np.ndarray] = field(default_factory=list)
    J2: list[np.ndarray] = field(default_factory=list)
    F2: list[np.ndarray] = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.J) - 1


def _picard_generator(xi: float, matrices: CollisionMatrices, order: int) -> LevelSeries:
    grid = matrices.grid
    n = grid.size
    m1 = 3 * n + 4
    size = m1 + n
    A2, A3 = _q_generators(xi, matrices)
    long, _ = field_couplings(matrices.basis)
    mass = matrices.weights(0) * matrices.basis.chi0.coeffs.real
    z = matrices.nu0 + 1j * xi
    w = matrices.nu0 / z
    drive = np.outer(long, mass) / z

    A = np.zeros((size, size), dtype=complex)
    A[:m1, :m1] = A2
    A[m1:, m1:] = np.diag(transport_symbol(xi, matrices))
    couplings = []
    for level in range(1, order + 1):
        B = np.zeros((size, size), dtype=complex)
        factor = w ** (level - 1)
        B[m1:, :n] = factor * drive
        B[m1:, m1:] = factor * drive
        if level == 1:
            B[:m1, :m1] = A3
            B[m1:, m1:] += matrices.K1[0]
        couplings.append(B)
    return generator_series(A, couplings, order)


def _e1_rows(J, H, xi: float, matrices: CollisionMatrices) -> list[np.ndarray]:
    n = matrices.grid.size
    mass = matrices.weights(0) * matrices.basis.chi0.coeffs.real
    z = matrices.nu0 + 1j * xi
    w = matrices.nu0 / z
    rows = []
    for k in range(len(J)):
        total = sum(w ** (k - j) * (mass @ (H[j] + J[j][:n])) for j in range(k + 1))
        rows.append(total / z)
    return rows


def picard_levels(t: float, xi: float, matrices: CollisionMatrices, order: int, *,
                  derivatives: bool = False, split: bool = False) -> PicardLevels:
    n = matrices.grid.size
    m1 = 3 * n + 4
    generator = _picard_generator(xi, matrices, order)
    exponential = level_exponential(generator[0], generator.terms[1:], t, order)
    states = [term[:, :m1] for term in exponential.terms]
    J = [state[: 3 * n] for state in states]
    F = [state[3 * n:m1] for state in states]
    H = [state[m1:] for state in states]
    levels = PicardLevels(t=t, xi=xi, J=J, F=F, H=H, U1=_e1_rows(J, H, xi, matrices))

    if derivatives:
        rates = [term[:, :m1] for term in level_derivative(generator, exponential).terms]
        levels.dJ = [rate[: 3 * n] for rate in rates]
        levels.dF = [rate[3 * n:m1] for rate in rates]
        levels.dH = [rate[m1:] for rate in rates]
        levels.dU1 = _e1_rows(levels.dJ, levels.dH, xi, matrices)
    if split:
        parts = split_Q_levels(t, xi, matrices, order)
        levels.J2 = [q[: 3 * n] for q in parts.Q2]
        levels.F2 = [q[3 * n:] for q in parts.Q2]
    LOGGER.debug("Picard levels 0..%d at t=%.4g, xi=%.4g", order, t, xi)
    return levels


def _full_rows(kinetic: np.ndarray, H: np.ndarray | None, e1: np.ndarray | None, fields: np.ndarray,
               n: int) -> np.ndarray:
    """Stacks A0-layout rows [f0 | fc | fs | E1 | E2 E3 B2 B3] of an operator on the A1 layout."""
    f = kinetic.copy()
    if H is not None:
        f[:n] = f[:n] + H
    e1_row = np.zeros((1, kinetic.shape[1]), dtype=complex) if e1 is None else e1[None, :]
    return np.vstack([f, e1_row, fields])


def _u_operator(levels: PicardLevels, k: int, n: int, part: str = "full") -> np.ndarray:
    if part == "full":
        return _full_rows(levels.J[k], levels.H[k], levels.U1[k], levels.F[k], n)
    if part == "oscillatory":
        return _full_rows(levels.J2[k], None, None, levels.F2[k], n)
    return _u_operator(levels, k, n) - _u_operator(levels, k, n, "oscillatory")


def picard_U(n: int, t: float, xi: float, matrices: CollisionMatrices) -> tuple[MixtureOperator, ...]:
    """(U_n, U_{n,1}, U_{n,2}) as operators from the A1 layout to the A0 layout."""
    if xi == 0:
        raise UsageError("The Picard sequence is built on admissible data and needs xi != 0")
    levels = picard_levels(t, xi, matrices, n, split=True)
    size = matrices.grid.size
    return tuple(
        MixtureOperator(family, n, t, xi, _u_operator(levels, n, size, part), matrices, domain="admissible")
        for family, part in (("U", "full"), ("U1", "decaying"), ("U2", "oscillatory"))
    )


def oscillatory_remainder(t: float, xi: float, matrices: CollisionMatrices) -> MixtureOperator:
    """G3 = U_{0,2} + U_{1,2} + U_{2,2}."""
    levels = picard_levels(t, xi, matrices, 2, split=True)
    n = matrices.grid.size
    total = sum(_u_operator(levels, k, n, "oscillatory") for k in range(3))
    return MixtureOperator("U2", 2, t, xi, total, matrices, domain="admissible")


def theta_row(levels: PicardLevels, top: int, matrices: CollisionMatrices) -> np.ndarray:
    """Theta_top = sum_l nu0^{top-l} / (nu0 + i xi)^{top-l+1} (nu I_l - nu0 v1 I_l, chi0)."""
    n = matrices.grid.size
    nu0 = matrices.nu0
    z = nu0 + 1j * levels.xi
    chi0 = matrices.basis.chi0.coeffs.real
    w0 = matrices.weights(0)
    moment = w0 * chi0 * (matrices.nu - nu0 * matrices.grid.v1)
    total = np.zeros(levels.J[0].shape[1], dtype=complex)
    for l in range(top + 1):
        I = levels.J[l][:n] + levels.H[l]
        total += nu0 ** (top - l) / z ** (top - l + 1) * (moment @ I)
    return total


@dataclass
class YZResult:
    n: int
    t: float
    xi: float
    Y: MixtureOperator
    Z: MixtureOperator
    Y1: MixtureOperator
    Y2: MixtureOperator
    telescoping: float
    defect: dict[str, float] = field(default_factory=dict)
    initial: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "xi": self.xi,
            "Y_norm": self.Y.norm,
            "Z_norm": self.Z.norm,
            "telescoping": self.telescoping,
            "defect": self.defect,
            "initial": self.initial,
        }


def full_green_admissible(t: float, xi: float, matrices: CollisionMatrices,
                          backend: PropagatorBackend | None = None) -> np.ndarray:
    """exp(t A0) applied to the admissible embedding of A1-layout data."""
    return propagator(assemble("A0", xi, matrices), t, backend) @ admissible_embedding(xi, matrices)


def _defect(levels: PicardLevels, top: int, xi: float, matrices: CollisionMatrices) -> dict[str, float]:
    """Residual of dY/dt - A0 Y against the prescribed source, per component."""
    n = matrices.grid.size
    A0 = assemble("A0", xi, matrices).matrix
    long, trans = field_couplings(matrices.basis)
    w1 = matrices.weights(1)
    Y = sum(_u_operator(levels, k, n) for k in range(top + 1))
    dY = sum(_full_rows(levels.dJ[k], levels.dH[k], levels.dU1[k], levels.dF[k], n) for k in range(top + 1))

    I = levels.J[top].copy()
    I[:n] = I[:n] + levels.H[top]
    source = np.zeros_like(Y)
    source[: 3 * n] = -_kinetic_blocks(matrices, "K1", None) @ I
    source[:n] -= np.outer(long, levels.U1[top])
    source[n:2 * n] -= np.outer(trans, levels.F[top][0])
    source[2 * n:3 * n] -= np.outer(trans, levels.F[top][1])
    source[3 * n] = -theta_row(levels, top, matrices)
    source[3 * n + 1] = (w1 * trans) @ I[n:2 * n]
    source[3 * n + 2] = (w1 * trans) @ I[2 * n:3 * n]

    residual = dY - A0 @ Y - source
    scale = max(1.0, float(np.max(np.abs(dY))))
    names = {"f": slice(0, 3 * n), "E1": slice(3 * n, 3 * n + 1), "E_r": slice(3 * n + 1, 3 * n + 3),
             "B_r": slice(3 * n + 3, 3 * n + 5)}
    defect = {name: float(np.max(np.abs(residual[rows]))) / scale for name, rows in names.items()}

    mass = matrices.weights(0) * matrices.basis.chi0.coeffs.real
    T0 = sum(levels.J[k][:n] + levels.H[k] for k in range(top + 1))
    gauss = 1j * xi * sum(levels.U1[k] for k in range(top + 1)) - mass @ T0 + matrices.nu0 * levels.U1[top]
    defect["gauss"] = float(np.max(np.abs(gauss))) / scale
    return defect


def YZ_split(n: int, t: float, xi: float, matrices: CollisionMatrices,
             backend: PropagatorBackend | None = None) -> YZResult:
    """Y_n = sum_{k <= 3n} U_k, Z_n = G P - Y_n, with the defect of Y_n and the Z_n(0) check."""
    if n < 1:
        raise UsageError(f"The Y/Z split needs n >= 1, got {n}")
    if xi == 0:
        raise UsageError("The Y/Z split needs xi != 0")
    size = matrices.grid.size
    top = 3 * n
    levels = picard_levels(t, xi, matrices, top, derivatives=True, split=True)
    Y = sum(_u_operator(levels, k, size) for k in range(top + 1))
    Y2 = sum(_u_operator(levels, k, size, "oscillatory") for k in range(top + 1))
    G = full_green_admissible(t, xi, matrices, backend)
    Z = G - Y
    telescoping = float(np.max(np.abs(G - Y - Z)))

    return YZResult(
        n=n,
        t=t,
        xi=xi,
        Y=MixtureOperator("Y", n, t, xi, Y, matrices, domain="admissible"),
        Z=MixtureOperator("Z", n, t, xi, Z, matrices, domain="admissible"),
        Y1=MixtureOperator("Y", n, t, xi, Y - Y2, matrices, domain="admissible"),
        Y2=MixtureOperator("Y", n, t, xi, Y2, matrices, domain="admissible"),
        telescoping=telescoping,
        defect=_defect(levels, top, xi, matrices),
        initial=initial_remainder_error(n, xi, matrices),
    )


def initial_remainder(n: int, xi: float, matrices: CollisionMatrices) -> np.ndarray:
    """Z_n(0) from the hierarchy at t = 0."""
    size = matrices.grid.size
    top = 3 * n
    levels = picard_levels(0.0, xi, matrices, top)
    Y = sum(_u_operator(levels, k, size) for k in range(top + 1))
    return admissible_embedding(xi, matrices) - Y


def initial_remainder_error(n: int, xi: float, matrices: CollisionMatrices) -> float:
    """max |Z_n(0) - (0, w^{3n+1} E1(0), 0, 0, 0)| with w = nu0 / (nu0 + i xi)."""
    size = matrices.grid.size
    expected = np.zeros_like(initial_remainder(n, xi, matrices))
    w = matrices.nu0 / (matrices.nu0 + 1j * xi)
    expected[3 * size] = w ** (3 * n + 1) * admissible_embedding(xi, matrices)[3 * size]
    return float(np.max(np.abs(initial_remainder(n, xi, matrices) - expected)))


def boltzmann_singular(k: int, t: float, xi: float, matrices: CollisionMatrices) -> MixtureOperator:
    """I_k = M^t_{b,k}: the k-th Boltzmann mixture on the stacked kinetic space."""
    return mixture_M(k, t, xi, matrices, variant="K")


def boltzmann_wave(k: int, t: float, xi: float, matrices: CollisionMatrices) -> MixtureOperator:
    """W_k = I_0 + ... + I_{3k}."""
    levels = mixture_levels(t, xi, matrices, 3 * k, variant="K")
    return MixtureOperator("M_boltz", 3 * k, t, xi, sum(level.matrix for level in levels), matrices)


def boltzmann_wave_remainder(k: int, t: float, xi: float, matrices: CollisionMatrices, *, r0: float,
                             backend: PropagatorBackend | None = None) -> MixtureOperator:
    """G_h - W_k, with G_h the Boltzmann semigroup minus its fluid part when |xi| <= r0."""
    _, high = boltzmann_remainder(xi, t, matrices, r0=r0, backend=backend)
    wave = boltzmann_wave(k, t, xi, matrices)
    return MixtureOperator("M_boltz", 3 * k, t, xi, high - wave.matrix, matrices)


def W1_action(t: float, x, profile_hat, psi: np.ndarray, matrices: CollisionMatrices, *, levels: int = 6,
              xi_max: float = 12.0, panels: int = 300, limit: float | None = None) -> np.ndarray:
    """Macroscopic moments (chi0..chi4) of sum_{k <= levels} J_k g for g = phi(x) psi(v).

    profile_hat(xi) is the Fourier transform of phi; psi is a stacked [f0 | fc | fs] profile.
    """
    xi_nodes = panel_grid(-xi_max, xi_max, panels)
    basis = matrices.basis
    n = matrices.grid.size
    size = 3 * n
    w = _weights(size, matrices)
    probes = np.zeros((size, 5))
    for j in range(5):
        member = basis.member(j)
        offset = 0 if member.sector == 0 else (n if j != 3 else 2 * n)
        probes[offset:offset + n, j] = member.coeffs.real
    samples = np.zeros((xi_nodes.size, 5), dtype=complex)
    for i, xi in enumerate(xi_nodes):
        series = mixture_levels(t, float(xi), matrices, levels, variant="K")
        action = sum(level.matrix for level in series) @ psi
        samples[i] = profile_hat(xi) * (probes.T @ (w * action))
    return inverse_fourier(samples, xi_nodes, x, limit=limit).real


def mixture_norms(family: str, n: int, ts, xis, matrices: CollisionMatrices) -> np.ndarray:
    """Operator norms of one family member over a (t, xi) grid; rows follow ts."""
    norms = np.zeros((len(ts), len(xis)))
    for a, t in enumerate(ts):
        for b, xi in enumerate(xis):
            norms[a, b] = _family_member(family, n, float(t), float(xi), matrices).norm
    return norms


def _family_member(family: str, n: int, t: float, xi: float, matrices: CollisionMatrices) -> MixtureOperator:
    if family == "M":
        return mixture_M(n, t, xi, matrices)
    if family == "M_boltz":
        return boltzmann_singular(n, t, xi, matrices)
    if family == "Q":
        return mixture_Q(n, t, xi, matrices)
    if family in ("Q1", "Q2"):
        return split_Q(n, t, xi, matrices)[0 if family == "Q1" else 1]
    if family in ("U", "U1", "U2"):
        return picard_U(n, t, xi, matrices)[("U", "U1", "U2").index(family)]
    if family in ("Y", "Z"):
        split = YZ_split(n, t, xi, matrices)
        return split.Y if family == "Y" else split.Z
    raise UsageError(f"Unknown mixture family {family!r}; choose from {', '.join(FAMILIES)}")


def bound_envelope(family: str, n: int, t: np.ndarray, xi: np.ndarray, nu0: float) -> np.ndarray:
    """Reference envelopes of the mixture lemmas, evaluated on broadcast (t, xi) arrays."""
    t = np.asarray(t, dtype=float)
    groups = n // 3 if family in ("M", "M_boltz", "Q1", "Q2") else n
    if family == "M":
        return (1.0 + t) ** n * np.exp(-nu0 * t) * xi_gain(xi, groups)
    if family == "M_boltz":
        return np.exp(-0.5 * nu0 * t) * xi_gain(xi, groups)
    if family == "Q1":
        return (1.0 + t) ** n * np.exp(-nu0 * t) * xi_gain(xi, groups, groups)
    if family == "Q2":
        return (1.0 + t) ** max(2 * groups - 1, 0) * xi_gain(xi, groups, groups)
    if family == "U2":
        return (1.0 + t) ** 3 * xi_gain(xi, 1.5, 1.0)
    if family in ("U", "U1"):
        return (1.0 + t) ** n * np.exp(-nu0 * t) * xi_gain(xi, n / 3.0)
    if family == "Z":
        return np.exp(DELTA_FRACTION * nu0 * t) * xi_gain(xi, n, n)
    raise UsageError(f"No reference envelope for family {family!r}")


def mixture_bound(family: str, n: int, ts, xis, matrices: CollisionMatrices) -> EnvelopeFit:
    """Fitted constant C of ||family_n(t, xi)|| <= C envelope(t, xi) over the sample grid."""
    norms = mixture_norms(family, n, ts, xis, matrices)
    t_grid, xi_grid = np.meshgrid(np.asarray(ts, dtype=float), np.asarray(xis, dtype=float), indexing="ij")
    envelope = bound_envelope(family, n, t_grid, xi_grid, matrices.nu0)
    fit = envelope_constant(norms, envelope, family=family, n=n, ts=list(map(float, ts)), xis=list(map(float, xis)))
    if not fit.finite:
        raise ConvergenceError(f"Envelope fit for {family}_{n} is not finite")
    return fit


def resolved_frequency(t: float, matrices: CollisionMatrices) -> float:
    """Largest |xi| at which the v1 nodes still resolve the transport phase exp(-i v1 xi t)."""
    spacing = float(np.max(np.diff(np.unique(matrices.grid.v1))))
    return np.inf if t == 0 else 1.0 / (spacing * t)
