import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmbwaves.backends import get_backend
from vmbwaves.core.modes import (
    ModeState,
    assemble,
    decompose_semigroup,
    free_maxwell_modes,
    layout_for,
    maxwell_block,
    propagate,
    propagator,
)
from vmbwaves.core.velocity import field_couplings
from vmbwaves.exceptions import SingularFrequencyError, UsageError


@pytest.mark.parametrize("kind", ["A1", "A1_adjoint", "B1"])
def test_reduced_generators_need_nonzero_xi(matrices, kind):
    with pytest.raises(SingularFrequencyError):
        assemble(kind, 0.0, matrices)


def test_A1_splits_into_transport_and_coupling(matrices):
    xi = 0.7
    A1, A2, A3 = (assemble(kind, xi, matrices).matrix for kind in ("A1", "A2", "A3"))
    layout = layout_for("A1", matrices)
    long_coupling, _ = field_couplings(matrices.basis)
    mass = matrices.weights(0) * matrices.basis.chi0.coeffs.real
    expected = A2 + A3
    expected[layout.f0, layout.f0] -= (1j / xi) * np.outer(long_coupling, mass)
    assert_allclose(A1, expected, atol=1e-12)


def test_gauss_law_is_preserved(matrices):
    xi = 0.4
    rng = np.random.default_rng(3)
    n = matrices.grid.size
    f0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    mass = np.sum(matrices.weights(0) * f0 * matrices.basis.chi0.coeffs.real)
    state = ModeState(
        xi=xi,
        f0=f0,
        fc=rng.standard_normal(n),
        fs=rng.standard_normal(n),
        E=np.array([mass / (1j * xi), 0.3, -0.2]),
        B=np.array([0.1, 0.5]),
    )
    assert state.constraint_residual(matrices) < 1e-12

    later = propagate(assemble("A0", xi, matrices), 1.0, state)
    assert later.constraint_residual(matrices) <= 1e-8 * state.norm(matrices)


@pytest.mark.parametrize("xi", [0.5, -3.0])
def test_free_maxwell_modes(xi):
    block = maxwell_block(xi)
    vectors = []
    for alpha, X in free_maxwell_modes(xi):
        assert_allclose(block @ X, alpha * X, atol=1e-14)
        vectors.append(X)
    vectors = np.array(vectors)
    assert_allclose(vectors @ vectors.T, np.eye(4), atol=1e-14)


def test_backends_agree(matrices):
    gen = assemble("A1", 0.5, matrices)
    eigen = propagator(gen, 0.3, get_backend("eigen"))
    expm = propagator(gen, 0.3, get_backend("expm"))
    assert_allclose(eigen, expm, atol=1e-8)


def test_semigroup_parts_add_up(matrices):
    parts = decompose_semigroup(0.1, 1.0, matrices, r0=0.5, r1=10.0)
    assert parts.regime == "low"
    assert_allclose(parts.S1 + parts.S2 + parts.S3, parts.S)
    assert np.any(parts.S1)
    assert not np.any(parts.S2)

    middle = decompose_semigroup(2.0, 1.0, matrices, r0=0.5, r1=10.0)
    assert middle.regime == "middle"
    assert_allclose(middle.S3, middle.S)


def test_layout_errors(matrices):
    layout = layout_for("A1", matrices)
    assert layout.size == 3 * matrices.grid.size + 4
    with pytest.raises(UsageError):
        layout.index("E1")
    with pytest.raises(UsageError):
        layout_for("C0", matrices)
    with pytest.raises(UsageError):
        ModeState.from_vector(np.zeros(3), layout, 1.0)


def test_state_norms(matrices):
    n = matrices.grid.size
    state = ModeState(xi=0.0, f0=np.zeros(n), fc=np.zeros(n), fs=np.zeros(n), B=np.array([3.0, 4.0]))
    assert_allclose(state.norm(matrices), 5.0)
    with pytest.raises(SingularFrequencyError):
        state.norm(matrices, weighted=True)


def test_propagator_rejects_negative_time(matrices):
    with pytest.raises(UsageError):
        propagator(assemble("B0", 1.0, matrices), -1.0)
