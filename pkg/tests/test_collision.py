import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmbwaves.core.checks import CROSS_PROFILES
from vmbwaves.core.collision import (
    collision_frequency,
    collision_frequency_speed,
    cross_validate_sector,
    fit_nu_bounds,
    full3d_apply,
    kernel_identity_defect,
    kernel_k,
    kernel_k1,
    kernel_loss,
    resolvent_bound_exponent,
    restricted_spectrum,
    solve_microscopic,
    spectral_gap,
    tensor_apply,
)
from vmbwaves.core.velocity import GridFunction, inner_product, project
from vmbwaves.exceptions import ProjectionError, SingularPointError, UsageError


def test_collision_frequency_limits():
    assert_allclose(collision_frequency_speed(0.0), 4.0 / np.sqrt(2.0 * np.pi))
    assert_allclose(collision_frequency_speed(50.0), 50.0 + 1.0 / 50.0, rtol=1e-12)
    # the Taylor branch joins the closed form
    assert_allclose(collision_frequency_speed(0.99e-4), collision_frequency_speed(1.01e-4), rtol=1e-7)
    assert np.all(np.diff(collision_frequency_speed(np.linspace(0.0, 10.0, 50))) > 0)


def test_collision_frequency_of_vectors():
    assert_allclose(collision_frequency([3.0, 4.0, 0.0]), collision_frequency_speed(5.0))
    with pytest.raises(UsageError):
        collision_frequency([1.0, 2.0])


def test_kernels_are_symmetric():
    v, u = np.array([0.3, -1.0, 0.5]), np.array([1.2, 0.4, -0.7])
    assert_allclose(kernel_k1(v, u), kernel_k1(u, v))
    assert_allclose(kernel_k(v, u), kernel_k(u, v))
    with pytest.raises(SingularPointError):
        kernel_k1(v, v)


@pytest.mark.parametrize("sector", [0, 1])
def test_collision_invariants_are_annihilated(matrices, sector):
    for chi in matrices.basis.sector_members(sector):
        scale = np.linalg.norm(matrices.nu * chi.coeffs)
        assert np.linalg.norm(matrices.L[sector] @ chi.coeffs) <= 1e-8 * scale
    chi0 = matrices.basis.chi0.coeffs
    assert np.linalg.norm(matrices.L1[0] @ chi0) <= 1e-8 * np.linalg.norm(matrices.nu * chi0)


@pytest.mark.parametrize("name", ["L", "L1", "K1"])
def test_symmetrized_operators(matrices, name):
    for sector in (0, 1):
        sym = matrices.symmetrized(name, sector)
        assert_allclose(sym, sym.T)


def test_spectral_gap(matrices):
    assert matrices.mu > 0
    assert matrices.mu == spectral_gap(matrices)
    for sector in (0, 1):
        assert np.all(restricted_spectrum(matrices, "L1", sector) < 0)


def test_nu_bounds(grid, matrices):
    nu0, nu1 = fit_nu_bounds(grid)
    assert 0 < nu0 <= nu1
    assert matrices.nu0 == nu0
    assert np.all(matrices.nu >= nu0 * (1.0 + grid.speed) - 1e-12)


def test_solve_microscopic(matrices):
    rng = np.random.default_rng(1)
    basis = matrices.basis
    rhs = project(GridFunction(0, rng.standard_normal(matrices.grid.size)), "P1", basis)
    g = solve_microscopic(matrices, "L", rhs)
    assert_allclose(matrices.L[0] @ g.coeffs, rhs.coeffs, atol=1e-9)
    for chi in basis.sector_members(0):
        assert abs(inner_product(g, chi, matrices.grid)) < 1e-9


def test_solve_microscopic_rejects_null_components(matrices):
    with pytest.raises(ProjectionError):
        solve_microscopic(matrices, "L1", matrices.basis.chi0)


def test_resolvent_bound_exponent(matrices):
    slope, norms = resolvent_bound_exponent(matrices)
    assert norms.shape == (3,)
    assert np.all(np.diff(norms) < 0)
    assert abs(slope + 0.5) <= 0.15


IDENTITY_POINTS = [(0.0, 0.0, 0.0), (0.8, 0.0, 0.0), (1.1, -0.4, 0.6), (0.0, 2.5, 0.0)]


@pytest.mark.parametrize("kernel", ["k1", "k"])
def test_kernels_reproduce_nu_on_the_maxwellian(kernel):
    assert kernel_identity_defect(kernel, IDENTITY_POINTS) <= 1e-6


def test_kernel_decomposition():
    v, u = np.array([0.3, -0.2, 0.5]), np.array([1.1, 0.4, -0.7])
    assert_allclose(kernel_k(v, u) - 2.0 * kernel_k1(v, u) + kernel_loss(v, u), 0.0, atol=1e-15)
    # |v - u| = 1 and |v|^2 - |u|^2 = -3
    direct = np.exp(-9.0 / 8.0 - 1.0 / 8.0) / (np.pi * np.sqrt(2.0 * np.pi))
    assert_allclose(kernel_k1([1.0, 0.0, 0.0], [2.0, 0.0, 0.0]), direct, rtol=1e-14)


@pytest.mark.parametrize("kernel", ["k1", "loss", "k"])
def test_collision_integral_matches_kernel_quadrature(kernel):
    def g(u):
        return u[..., 0] ** 2 * np.exp(-0.25 * np.sum(u**2, axis=-1))

    v = np.array([0.6, 0.9, 0.0])
    assert_allclose(tensor_apply(kernel, v, g), full3d_apply(kernel, v, g), rtol=1e-2)


@pytest.mark.parametrize("kernel", ["k1", "k"])
@pytest.mark.parametrize("sector", [0, 1])
def test_sector_matrices_match_the_collision_integral(medium_matrices, kernel, sector):
    assert cross_validate_sector(medium_matrices, kernel, sector, CROSS_PROFILES[sector]) <= 0.05


@pytest.mark.parametrize("sector", [0, 1])
def test_L1_is_dissipative_on_the_microscopic_range(matrices, sector):
    rng = np.random.default_rng(11)
    sym = matrices.symmetrized("L1", sector)
    basis = matrices.complement("L1", sector)
    for _ in range(200):
        y = rng.standard_normal(sym.shape[0])
        micro = y if basis is None else basis @ (basis.T @ y)
        assert y @ sym @ y <= -matrices.mu * (micro @ micro) + 1e-6 * (y @ y)


@pytest.mark.parametrize("name", ["L1", "L"])
def test_collision_operators_commute_with_reflection(matrices, name):
    mirror = matrices.grid.mirror
    for sector in (0, 1):
        A = matrices.operator(name, sector)
        assert_allclose(A[np.ix_(mirror, mirror)], A, rtol=0, atol=1e-8 * np.max(np.abs(A)))
