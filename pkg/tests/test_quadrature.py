import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from vmbwaves.core.quadrature import (
    filon_fourier,
    inverse_fourier,
    moments,
    panel_grid,
    symmetric_bands,
)
from vmbwaves.exceptions import ResolutionError, UsageError


def test_gaussian_inverse_transform():
    xi = panel_grid(-12.0, 12.0, 600)
    x = np.linspace(-5.0, 5.0, 11)
    values = np.exp(-0.5 * xi**2)
    expected = np.exp(-0.5 * x**2) / np.sqrt(2.0 * np.pi)
    assert_allclose(inverse_fourier(values, xi, x), expected, atol=1e-6)


def test_trailing_shapes_are_kept():
    xi = panel_grid(-1.0, 1.0, 4)
    values = np.ones((xi.size, 2, 3))
    assert filon_fourier(values, xi, [0.0, 0.5]).shape == (2, 2, 3)
    assert_allclose(filon_fourier(values, xi, [0.0])[0], 2.0)


def test_coarse_grid_is_rejected():
    xi = panel_grid(-10.0, 10.0, 5)
    with pytest.raises(ResolutionError, match="panels"):
        filon_fourier(np.ones(xi.size), xi, [3.0])
    filon_fourier(np.ones(xi.size), xi, [3.0], limit=None)


def test_even_node_count_is_rejected():
    xi = np.linspace(0.0, 1.0, 4)
    with pytest.raises(UsageError):
        filon_fourier(np.ones(4), xi, [0.0])


@pytest.mark.parametrize("theta", [0.0, 0.05, 0.19, 0.21, 0.5, 3.0])
def test_moments(theta):
    computed = moments(np.array([theta]))
    for power, value in enumerate(computed):
        re = quad(lambda s: s**power * np.cos(theta * s), -1.0, 1.0)[0]
        im = quad(lambda s: s**power * np.sin(theta * s), -1.0, 1.0)[0]
        assert_allclose(value[0], re + 1j * im, atol=1e-12)


def test_panel_grids():
    assert panel_grid(0.0, 1.0, 2).size == 5
    with pytest.raises(UsageError):
        panel_grid(1.0, 0.0, 2)
    with pytest.raises(UsageError):
        panel_grid(0.0, 1.0, 0)
    left, right = symmetric_bands(1.0, 2.0, 3)
    assert_allclose(left, -right[::-1])
