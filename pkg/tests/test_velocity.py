import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmbwaves.core.velocity import (
    GridFunction,
    build_basis,
    build_grid,
    field_couplings,
    inner_product,
    maxwellian,
    norm,
    project,
    reflect,
)
from vmbwaves.exceptions import ConfigurationError, UsageError


@pytest.mark.parametrize("kwargs", [{"R": 0.0}, {"R": 5.0}, {"n_v1": 4}, {"n_r": 7}])
def test_build_grid_rejects_bad_parameters(kwargs):
    with pytest.raises(ConfigurationError):
        build_grid(**kwargs)


def test_grid_layout(grid):
    assert grid.size == grid.n_v1 * grid.n_r
    assert_allclose(grid.v1[grid.mirror], -grid.v1, atol=1e-14)
    assert_allclose(grid.r[grid.mirror], grid.r, atol=1e-14)
    assert np.array_equal(grid.mirror[grid.mirror], np.arange(grid.size))
    assert np.all(grid.speed <= grid.R + 1e-12)
    assert_allclose(np.sum(grid.v1_widths[:: grid.n_r]), 2.0 * grid.R)
    assert_allclose(grid.v1_widths[grid.mirror], grid.v1_widths)


def test_maxwellian_has_unit_mass():
    fine = build_grid(8.0, 30, 16)
    assert_allclose(np.sum(fine.weights(0) * maxwellian(fine)), 1.0, rtol=1e-6)


def test_sector_weights(grid):
    assert_allclose(grid.weights(0), 2.0 * grid.weights(1))
    with pytest.raises(UsageError):
        grid.weights(2)


def test_digest_identifies_the_node_set(grid):
    assert grid.digest() == build_grid(6.0, 12, 8).digest()
    assert grid.digest() != build_grid(6.0, 12, 9).digest()


def test_rows_export_every_node(grid):
    rows = grid.rows()
    assert len(rows) == grid.size
    assert set(rows[0]) == {"v1", "r", "weight"}


def test_basis_is_orthonormal(grid):
    basis = build_basis(grid)
    members = basis.sector_members(0)
    gram = np.array([[inner_product(f, g, grid) for g in members] for f in members])
    assert_allclose(gram, np.eye(3), atol=1e-12)
    assert_allclose(norm(basis.chi2, grid), 1.0, atol=1e-12)
    assert_allclose(basis.chi2.coeffs, basis.chi3.coeffs)


def test_inner_product_needs_matching_sectors(grid):
    basis = build_basis(grid)
    with pytest.raises(UsageError):
        inner_product(basis.chi0, basis.chi2, grid)
    with pytest.raises(UsageError):
        basis.chi0 + basis.chi2


def test_reflection_parity(grid):
    basis = build_basis(grid)
    assert_allclose(reflect(basis.chi0, grid).coeffs, basis.chi0.coeffs, atol=1e-14)
    assert_allclose(reflect(basis.chi1, grid).coeffs, -basis.chi1.coeffs, atol=1e-12)
    f = GridFunction(0, np.arange(grid.size, dtype=float))
    assert_allclose(reflect(reflect(f, grid), grid).coeffs, f.coeffs)


def test_projections_split_a_function(grid):
    basis = build_basis(grid)
    rng = np.random.default_rng(0)
    f = GridFunction(0, rng.standard_normal(grid.size))
    macro, micro = project(f, "P0", basis), project(f, "P1", basis)
    assert_allclose((macro + micro).coeffs, f.coeffs)
    assert_allclose(project(macro, "P0", basis).coeffs, macro.coeffs, atol=1e-12)
    for chi in basis.sector_members(0):
        assert abs(inner_product(micro, chi, grid)) < 1e-12

    mass_free = project(f, "Pr", basis)
    assert abs(inner_product(mass_free, basis.chi0, grid)) < 1e-12


def test_mass_projection_vanishes_on_sector_one(grid):
    basis = build_basis(grid)
    g = GridFunction(1, np.ones(grid.size))
    assert not np.any(project(g, "Pd", basis).coeffs)
    with pytest.raises(UsageError):
        project(g, "P2", basis)


def test_field_couplings(grid):
    basis = build_basis(grid)
    longitudinal, transverse = field_couplings(basis)
    assert longitudinal.shape == transverse.shape == (grid.size,)
    # v1 chi0 is odd, so it carries no mass
    assert abs(np.sum(grid.weights(0) * longitudinal * basis.chi0.coeffs)) < 1e-12
