import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmbwaves.core.coefficients import (
    ENERGY_LABELS,
    SOUND_SPEED,
    alpha_j,
    coefficient_report,
    compute_a1,
    compute_Aj,
    energy_modes,
    gamma_j,
    speeds,
    transverse_samples,
)
from vmbwaves.core.dispersion import solve_low_branch
from vmbwaves.core.velocity import build_basis, inner_product
from vmbwaves.exceptions import UsageError


def test_speeds_are_symmetric():
    table = speeds()
    assert_allclose(table[2], np.sqrt(5.0 / 3.0))
    assert table[2] == SOUND_SPEED
    for j in (1, 2):
        assert table[-j] == -table[j]


@pytest.mark.parametrize("j, sign", [(1, -1), (2, -1), (3, 1), (4, 1)])
def test_alpha_j(j, sign):
    assert alpha_j(2.0, j) == sign * 2j


def test_alpha_j_rejects_unknown_index():
    with pytest.raises(UsageError):
        alpha_j(1.0, 5)


def test_energy_modes_are_orthonormal(grid):
    modes = energy_modes(build_basis(grid))
    labels = (-1, 0, 1)
    gram = np.array([[inner_product(modes[i], modes[j], grid) for j in labels] for i in labels])
    assert_allclose(gram, np.eye(3), atol=1e-12)


def test_a1_is_positive(matrices):
    assert compute_a1(matrices) > 0


def test_Aj_signs_and_symmetries(matrices):
    A = {j: compute_Aj(matrices, j) for j in ENERGY_LABELS}
    assert min(A.values()) > 0
    assert_allclose(A[2], A[3])
    assert_allclose(A[-1], A[1], rtol=1e-6)


def test_Aj_rejects_unknown_label(matrices):
    with pytest.raises(UsageError):
        compute_Aj(matrices, 4)


def test_a1_matches_low_branch_curvature(matrices):
    xi = 0.01
    lam = solve_low_branch([xi], matrices).samples[0].value
    assert_allclose(-lam.real / xi**2, compute_a1(matrices), rtol=0.02)


def test_gamma_at_zero_frequency_is_negative(grid, matrices):
    on_grid = gamma_j(0.0, 1, grid, matrices.basis)
    assert on_grid.real < 0
    assert abs(on_grid.imag) < 1e-14
    continuum = gamma_j(0.0, 1)
    assert continuum.real < 0
    assert abs(continuum.imag) < 1e-10


def test_transverse_samples_match_gamma(matrices):
    xis = np.array([0.5, 3.0, 40.0])
    gammas, ds = transverse_samples(xis, 1, matrices)
    expected = [gamma_j(xi, 1, matrices.grid, matrices.basis) for xi in xis]
    assert_allclose(gammas, expected, rtol=1e-10)
    assert ds.shape == xis.shape


def test_coefficient_report(matrices):
    report = coefficient_report(matrices)
    data = report.to_dict()
    assert data["grid_hash"] == matrices.grid.digest()
    assert set(data["A"]) == {"-1", "0", "1", "2", "3"}
    assert_allclose(data["speeds"]["2"], SOUND_SPEED)
