import numpy as np
import pytest
import scipy.linalg as la
from numpy.testing import assert_allclose

from vmbwaves.backends import BACKENDS, get_backend


def test_unknown_backend():
    with pytest.raises(ValueError, match="eigen, expm"):
        get_backend("taylor")


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_exponential(name):
    backend = get_backend(name)
    assert backend.name == name
    matrix = np.array([[-1.0, 2.0j], [0.5, -0.3]])
    assert_allclose(backend.exponential(matrix, 0.0), np.eye(2), atol=1e-12)
    assert_allclose(backend.exponential(matrix, 1.5), la.expm(1.5 * matrix), rtol=1e-10)
    with pytest.raises(ValueError):
        backend.exponential(matrix, -0.1)


def test_propagate_stacks_times():
    backend = get_backend("eigen")
    matrix = np.diag([-1.0, -2.0])
    rows = backend.propagate(matrix, [0.0, 1.0], np.ones(2))
    assert_allclose(rows, [[1.0, 1.0], [np.exp(-1.0), np.exp(-2.0)]])
