# vmbwaves/core/modes.py
# Per-mode generators, semigroup propagation and the fluid/remainder decomposition.
"""
Stacked mode states and their generators.

A state at frequency xi is stored as [f0 | fc | fs | fields], where f0 is the sector 0 profile,
fc/fs are the cos/sin components of the sector 1 profile, and fields is a kind-dependent subset of
(E1, E2, E3, B2, B3). Kinds:

    A0          full Vlasov-Maxwell-Boltzmann mode, fields (E1, E2, E3, B2, B3)
    A1          E1 eliminated by the Gauss law i xi E1 = (f, chi0), fields (E2, E3, B2, B3)
    A1_adjoint  adjoint of A1 in the xi-weighted inner product
    A2          free transport -(nu + i v1 xi) plus the free Maxwell block
    A3          compact collision part K1 plus the field couplings (A2 + A3 is A1 without the Pd term)
    B0, B1      Boltzmann (L) and mass-only (L1 with the Pd term) kinetic blocks, no fields
"""
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from vmbwaves.backends import EigenBackend, PropagatorBackend
from vmbwaves.core.collision import CollisionMatrices
from vmbwaves.core.dispersion import (
    HIGH_DIRECTIONS,
    EigenPair,
    boltzmann_eigenpairs,
    eigenvector_high,
    eigenvector_low,
    solve_high_branch,
    solve_low_branch,
)
from vmbwaves.core.velocity import field_couplings
from vmbwaves.exceptions import SingularFrequencyError, UsageError

LOGGER = logging.getLogger(__name__)

GeneratorKind = Literal["A0", "A1", "A1_adjoint", "A2", "A3", "B0", "B1"]
ALL_FIELDS = ("E1", "E2", "E3", "B2", "B3")
TRANSVERSE_FIELDS = ("E2", "E3", "B2", "B3")
KIND_FIELDS: dict[str, tuple[str, ...]] = {
    "A0": ALL_FIELDS,
    "A1": TRANSVERSE_FIELDS,
    "A1_adjoint": TRANSVERSE_FIELDS,
    "A2": TRANSVERSE_FIELDS,
    "A3": TRANSVERSE_FIELDS,
    "B0": (),
    "B1": (),
}


@dataclass(frozen=True)
class StateLayout:
    n: int
    fields: tuple[str, ...] = ALL_FIELDS

    @property
    def size(self) -> int:
        return 3 * self.n + len(self.fields)

    @property
    def f0(self) -> slice:
        return slice(0, self.n)

    @property
    def fc(self) -> slice:
        return slice(self.n, 2 * self.n)

    @property
    def fs(self) -> slice:
        return slice(2 * self.n, 3 * self.n)

    @property
    def kinetic(self) -> slice:
        return slice(0, 3 * self.n)

    def index(self, name: str) -> int:
        try:
            return 3 * self.n + self.fields.index(name)
        except ValueError:
            raise UsageError(f"Field {name} is not part of the layout {self.fields}") from None

    def weights(self, matrices: CollisionMatrices) -> np.ndarray:
        """Diagonal of the plain state inner product."""
        w0, w1 = matrices.weights(0), matrices.weights(1)
        return np.concatenate([w0, w1, w1, np.ones(len(self.fields))])

    def field_signs(self) -> np.ndarray:
        """J: +1 on kinetic entries, -1 on field entries."""
        return np.concatenate([np.ones(3 * self.n), -np.ones(len(self.fields))])


def layout_for(kind: str, matrices: CollisionMatrices) -> StateLayout:
    if kind not in KIND_FIELDS:
        raise UsageError(f"Unknown generator kind {kind!r}")
    return StateLayout(matrices.grid.size, KIND_FIELDS[kind])


@dataclass
class ModeState:
    xi: float
    f0: np.ndarray
    fc: np.ndarray
    fs: np.ndarray
    E: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=complex))
    B: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=complex))

    def vector(self, layout: StateLayout) -> np.ndarray:
        values = {"E1": self.E[0], "E2": self.E[1], "E3": self.E[2], "B2": self.B[0], "B3": self.B[1]}
        parts = [self.f0, self.fc, self.fs, np.array([values[name] for name in layout.fields])]
        return np.concatenate([np.asarray(part, dtype=complex) for part in parts])

    @classmethod
    def from_vector(cls, vector: np.ndarray, layout: StateLayout, xi: float) -> "ModeState":
        if vector.shape != (layout.size,):
            raise UsageError(f"State vector has shape {vector.shape}, layout needs ({layout.size},)")
        values = {name: vector[layout.index(name)] for name in layout.fields}
        return cls(
            xi=xi,
            f0=vector[layout.f0].copy(),
            fc=vector[layout.fc].copy(),
            fs=vector[layout.fs].copy(),
            E=np.array([values.get(name, 0j) for name in ("E1", "E2", "E3")], dtype=complex),
            B=np.array([values.get(name, 0j) for name in ("B2", "B3")], dtype=complex),
        )

    @classmethod
    def from_eigenpair(cls, pair: EigenPair) -> "ModeState":
        return cls(xi=pair.xi, f0=pair.f0, fc=pair.fc, fs=pair.fs, E=pair.E.copy(), B=pair.B.copy())

    def constraint_residual(self, matrices: CollisionMatrices) -> float:
        """|i xi E1 - (f, chi0)|."""
        mass = np.sum(matrices.weights(0) * self.f0 * matrices.basis.chi0.coeffs.real)
        return float(abs(1j * self.xi * self.E[0] - mass))

    def norm(self, matrices: CollisionMatrices, weighted: bool = False) -> float:
        """Plain norm, or the xi-weighted norm adding xi^{-2} |Pd f|^2."""
        w0, w1 = matrices.weights(0), matrices.weights(1)
        total = (
            np.sum(w0 * np.abs(self.f0) ** 2)
            + np.sum(w1 * (np.abs(self.fc) ** 2 + np.abs(self.fs) ** 2))
            + np.sum(np.abs(self.E) ** 2)
            + np.sum(np.abs(self.B) ** 2)
        )
        if weighted:
            if self.xi == 0:
                raise SingularFrequencyError("The xi-weighted norm needs xi != 0")
            mass = np.sum(w0 * self.f0 * matrices.basis.chi0.coeffs.real)
            total += abs(mass) ** 2 / self.xi**2
        return float(np.sqrt(total))


@dataclass
class ModeGenerator:
    kind: str
    xi: float
    matrix: np.ndarray
    layout: StateLayout


def maxwell_block(xi: float) -> np.ndarray:
    """Free Maxwell generator on (E2, E3, B2, B3): dE_r = i xi O B_r, dB_r = -i xi O E_r."""
    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    block = np.zeros((4, 4), dtype=complex)
    block[:2, 2:] = 1j * xi * rotation
    block[2:, :2] = -1j * xi * rotation
    return block


def free_maxwell_modes(xi: float) -> list[tuple[complex, np.ndarray]]:
    """Eigenpairs (alpha_j, X_j) of the free Maxwell block, orthonormal."""
    half = np.sqrt(0.5)
    return [
        (-1j * xi, half * np.array([1.0, 0.0, 0.0, 1.0])),
        (-1j * xi, half * np.array([0.0, 1.0, -1.0, 0.0])),
        (1j * xi, half * np.array([1.0, 0.0, 0.0, -1.0])),
        (1j * xi, half * np.array([0.0, 1.0, 1.0, 0.0])),
    ]


def _kinetic_block(matrix, layout, sector_blocks):
    for target, block in zip((layout.f0, layout.fc, layout.fs), sector_blocks):
        matrix[target, target] = block


def assemble(kind: GeneratorKind, xi: float, matrices: CollisionMatrices) -> ModeGenerator:
    """Dense generator of the given kind at frequency xi."""
    layout = layout_for(kind, matrices)
    if kind in ("A1", "A1_adjoint", "B1") and xi == 0:
        raise SingularFrequencyError(f"Generator {kind} contains an (i v1 / xi) Pd term and xi = 0")
    grid = matrices.grid
    n = grid.size
    v1 = np.diag(grid.v1)
    w0, w1 = matrices.weights(0), matrices.weights(1)
    chi0 = matrices.basis.chi0.coeffs.real
    long_coupling, trans_coupling = field_couplings(matrices.basis)
    matrix = np.zeros((layout.size, layout.size), dtype=complex)

    if kind == "A1_adjoint":
        forward = assemble("A1", xi, matrices)
        signs = layout.field_signs()
        return ModeGenerator(kind, xi, signs[:, None] * np.conj(forward.matrix) * signs[None, :], layout)

    if kind == "A2":
        transport = -np.diag(matrices.nu + 1j * xi * grid.v1)
        _kinetic_block(matrix, layout, (transport, transport, transport))
        matrix[3 * n:, 3 * n:] = maxwell_block(xi)
        return ModeGenerator(kind, xi, matrix, layout)

    if kind == "A3":
        _kinetic_block(matrix, layout, (matrices.K1[0], matrices.K1[1], matrices.K1[1]))
    elif kind == "B0":
        _kinetic_block(matrix, layout, (matrices.L[0] - 1j * xi * v1, matrices.L[1] - 1j * xi * v1,
                                        matrices.L[1] - 1j * xi * v1))
        return ModeGenerator(kind, xi, matrix, layout)
    else:
        sector0 = matrices.L1[0] - 1j * xi * v1
        if kind in ("A1", "B1"):
            # -(i v1 / xi) Pd, with Pd f = (f, chi0) chi0
            sector0 = sector0 - (1j / xi) * np.outer(long_coupling, w0 * chi0)
        sector1 = matrices.L1[1] - 1j * xi * v1
        _kinetic_block(matrix, layout, (sector0, sector1, sector1))
        if kind == "B1":
            return ModeGenerator(kind, xi, matrix, layout)

    if "E1" in layout.fields:
        e1 = layout.index("E1")
        matrix[layout.f0, e1] = long_coupling
        matrix[e1, layout.f0] = -w0 * long_coupling
    e2, e3 = layout.index("E2"), layout.index("E3")
    matrix[layout.fc, e2] = trans_coupling
    matrix[layout.fs, e3] = trans_coupling
    matrix[e2, layout.fc] = -w1 * trans_coupling
    matrix[e3, layout.fs] = -w1 * trans_coupling
    if kind != "A3":
        fields = [layout.index(name) for name in TRANSVERSE_FIELDS]
        matrix[np.ix_(fields, fields)] = maxwell_block(xi)
    return ModeGenerator(kind, xi, matrix, layout)


def xi_gram(xi: float, matrices: CollisionMatrices, layout: StateLayout) -> np.ndarray:
    """Hermitian matrix G of the xi-weighted inner product (U, V)_xi = V^H G U."""
    if xi == 0:
        raise SingularFrequencyError("The xi-weighted inner product needs xi != 0")
    gram = np.diag(layout.weights(matrices)).astype(complex)
    mass = matrices.weights(0) * matrices.basis.chi0.coeffs.real
    gram[layout.f0, layout.f0] += np.outer(mass, mass) / xi**2
    return gram


def xi_inner(U: np.ndarray, V: np.ndarray, xi: float, matrices: CollisionMatrices, layout: StateLayout) -> complex:
    return complex(np.conj(V) @ xi_gram(xi, matrices, layout) @ U)


def _gram_root(gram: np.ndarray):
    values, vectors = np.linalg.eigh(gram)
    root = (vectors * np.sqrt(values)) @ vectors.conj().T
    inverse_root = (vectors / np.sqrt(values)) @ vectors.conj().T
    return root, inverse_root


def xi_norm(operator: np.ndarray, xi: float, matrices: CollisionMatrices, layout: StateLayout) -> float:
    """Operator norm of an A1-layout operator in the xi-weighted norm."""
    root, inverse_root = _gram_root(xi_gram(xi, matrices, layout))
    return float(np.linalg.norm(root @ operator @ inverse_root, 2))


def admissible_embedding(xi: float, matrices: CollisionMatrices) -> np.ndarray:
    """Map from the A1 layout to the A0 layout filling E1 = (f, chi0) / (i xi)."""
    if xi == 0:
        raise SingularFrequencyError("The admissible embedding needs xi != 0")
    full = layout_for("A0", matrices)
    reduced = layout_for("A1", matrices)
    embedding = np.zeros((full.size, reduced.size), dtype=complex)
    embedding[: 3 * full.n, : 3 * full.n] = np.eye(3 * full.n)
    embedding[full.index("E1"), reduced.f0] = matrices.weights(0) * matrices.basis.chi0.coeffs.real / (1j * xi)
    for name in TRANSVERSE_FIELDS:
        embedding[full.index(name), reduced.index(name)] = 1.0
    return embedding


def admissible_norm(operator: np.ndarray, xi: float, matrices: CollisionMatrices) -> float:
    """Norm of an operator on admissible states (plain norm on the A0-layout output).

    The operator either acts on the A0 layout or already takes A1-layout inputs V, which stand
    for the admissible states embedding(V).
    """
    full = layout_for("A0", matrices)
    embedding = admissible_embedding(xi, matrices)
    weights = full.weights(matrices)
    gram = embedding.conj().T @ (weights[:, None] * embedding)
    _, inverse_root = _gram_root(gram)
    if operator.shape[1] == full.size:
        operator = operator @ embedding
    return float(np.linalg.norm(np.sqrt(weights)[:, None] * (operator @ inverse_root), 2))


def weighted_norm(operator: np.ndarray, weights: np.ndarray) -> float:
    """||W^{1/2} A W^{-1/2}|| for a diagonal weight."""
    root = np.sqrt(weights)
    return float(np.linalg.norm(root[:, None] * operator / root[None, :], 2))


def propagator(gen: ModeGenerator, t: float, backend: PropagatorBackend | None = None) -> np.ndarray:
    if t < 0:
        raise UsageError(f"Propagation time must be nonnegative, got {t}")
    backend = backend or EigenBackend()
    return backend.exponential(gen.matrix, t)


def propagate(gen: ModeGenerator, t: float, u0: ModeState, backend: PropagatorBackend | None = None) -> ModeState:
    """exp(t A) u0."""
    vector = u0.vector(gen.layout)
    return ModeState.from_vector(propagator(gen, t, backend) @ vector, gen.layout, gen.xi)


def eigen_projector(pair: EigenPair, layout: StateLayout, matrices: CollisionMatrices) -> np.ndarray:
    """Psi (J W Psi)^T: the spectral projector of a J W-symmetric block."""
    state = ModeState.from_eigenpair(pair).vector(layout)
    left = layout.field_signs() * layout.weights(matrices) * state
    return np.outer(state, left)


@dataclass
class SemigroupParts:
    xi: float
    t: float
    S: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray
    regime: str


def fluid_pairs(xi: float, matrices: CollisionMatrices, r0: float, r1: float) -> tuple[str, list[EigenPair]]:
    if abs(xi) <= r0:
        lam = solve_low_branch([xi], matrices).samples[0].value
        return "low", [eigenvector_low(xi, j, matrices, lam=lam) for j in (1, 2)]
    if abs(xi) >= r1:
        roots = {sign: solve_high_branch([xi], sign, matrices).samples[0].value for sign in (-1, 1)}
        return "high", [eigenvector_high(xi, j, matrices, lam=roots[HIGH_DIRECTIONS[j][0]]) for j in (1, 2, 3, 4)]
    return "middle", []


def decompose_semigroup(xi: float, t: float, matrices: CollisionMatrices, *, r0: float, r1: float,
                        backend: PropagatorBackend | None = None) -> SemigroupParts:
    """S = S1 + S2 + S3 on the A1 layout: low fluid part, high fluid part, remainder."""
    gen = assemble("A1", xi, matrices)
    S = propagator(gen, t, backend)
    regime, pairs = fluid_pairs(xi, matrices, r0, r1)
    fluid = np.zeros_like(S)
    for pair in pairs:
        fluid += np.exp(pair.value * t) * eigen_projector(pair, gen.layout, matrices)
    zero = np.zeros_like(S)
    S1 = fluid if regime == "low" else zero
    S2 = fluid if regime == "high" else zero
    return SemigroupParts(xi=xi, t=t, S=S, S1=S1, S2=S2, S3=S - S1 - S2, regime=regime)


def boltzmann_fluid_part(xi: float, t: float, matrices: CollisionMatrices) -> np.ndarray:
    layout = layout_for("B0", matrices)
    weights = layout.weights(matrices)
    part = np.zeros((layout.size, layout.size), dtype=complex)
    for pair in boltzmann_eigenpairs(xi, matrices).values():
        state = pair.stacked(fields=False)
        part += np.exp(pair.value * t) * np.outer(state, weights * state)
    return part


def boltzmann_remainder(xi: float, t: float, matrices: CollisionMatrices, *, r0: float,
                        backend: PropagatorBackend | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(exp(t B0), exp(t B0) minus the five-branch fluid part when |xi| <= r0)."""
    gen = assemble("B0", xi, matrices)
    S = propagator(gen, t, backend)
    if abs(xi) > r0:
        return S, S
    return S, S - boltzmann_fluid_part(xi, t, matrices)
