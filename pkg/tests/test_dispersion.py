import numpy as np
import pytest
import scipy.linalg as la
from numpy.testing import assert_allclose

from vmbwaves.core.dispersion import (
    CONTRACTION_RATIO,
    RESIDUAL_TOL,
    boltzmann_branches,
    dispersion_D,
    eigenpair_pairing,
    eigenvector_low,
    eigenvector_high,
    estimate_regime_bounds,
    solve_high_branch,
    solve_low_branch,
)
from vmbwaves.core.modes import assemble
from vmbwaves.exceptions import UsageError


def test_low_branch_starts_at_zero_and_is_even(matrices):
    branch = solve_low_branch([-0.1, 0.0, 0.1], matrices)
    values = branch.values
    assert values[1] == 0
    assert values[0] == values[2]
    assert values[2].real < 0
    for sample in branch.samples:
        assert sample.residual <= RESIDUAL_TOL * (1.0 + sample.xi**2)


def test_low_root_is_an_eigenvalue_of_the_generator(matrices):
    xi = 0.1
    lam = solve_low_branch([xi], matrices).samples[0].value
    values = la.eigvals(assemble("A1", xi, matrices).matrix)
    assert np.min(np.abs(values - lam)) <= 1e-6


def test_branch_rows(matrices):
    rows = solve_low_branch([0.05], matrices).to_rows()
    assert set(rows[0]) == {"xi", "re", "im", "residual", "iterations"}


@pytest.mark.parametrize("j", [0, 2])
def test_high_branch_sign(matrices, j):
    with pytest.raises(UsageError):
        solve_high_branch([20.0], j, matrices)


def test_high_branch_needs_nonzero_xi(matrices):
    with pytest.raises(UsageError):
        solve_high_branch([0.0], 1, matrices)
    with pytest.raises(UsageError):
        dispersion_D(-1.0, 0.0, matrices)


def test_eigenvector_indices(matrices):
    with pytest.raises(UsageError):
        eigenvector_low(0.1, 3, matrices)
    with pytest.raises(UsageError):
        eigenvector_high(10.0, 0, matrices)
    with pytest.raises(UsageError):
        eigenvector_high(0.0, 1, matrices)


def test_low_eigenvector_is_normalized(matrices):
    pair = eigenvector_low(0.1, 1, matrices)
    assert_allclose(eigenpair_pairing(pair, pair, matrices), 1.0, atol=1e-10)
    assert not np.any(pair.fs)
    magnetic = eigenvector_low(0.0, 2, matrices)
    assert magnetic.value == 0
    assert_allclose(np.abs(magnetic.B), [1.0, 0.0])


def test_boltzmann_branches(matrices):
    branches = boltzmann_branches([0.0, 0.1], matrices)
    assert [branch.label for branch in branches] == [-1, 0, 1, 2, 3]
    for branch in branches:
        assert branch.values[0] == 0
        assert branch.values[1].real < 0
        assert max(sample.residual for sample in branch.samples) <= 1e-6
    assert branches[3].values[1] == branches[4].values[1]


def test_regime_bounds_from_newton_and_contraction(matrices):
    bounds = estimate_regime_bounds(matrices, [0.1, 0.05])
    assert bounds.r0 == 0.1
    assert bounds.contraction_ratio < CONTRACTION_RATIO
    assert bounds.low_margin >= 0
    assert bounds.boltzmann_r0 == 1.0
