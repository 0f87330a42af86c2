import numpy as np
import pytest
import scipy.linalg as la
from numpy.testing import assert_allclose

from vmbwaves.core.hierarchy import (
    LevelSeries,
    generator_series,
    level_derivative,
    level_exponential,
    riesz_projector,
)
from vmbwaves.exceptions import UsageError


@pytest.fixture
def pair():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((4, 4)) - 2.0 * np.eye(4)
    B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    return A, B


def test_level_zero_is_the_plain_exponential(pair):
    A, B = pair
    series = level_exponential(A, [B], 0.8, order=2)
    assert series.order == 2
    assert_allclose(series[0], la.expm(0.8 * A), rtol=1e-10, atol=1e-12)


def test_first_level_is_the_duhamel_integral(pair):
    A, B = pair
    t = 0.7
    block = np.block([[A, B], [np.zeros((4, 4)), A]])
    expected = la.expm(t * block)[:4, 4:]
    assert_allclose(level_exponential(A, [B], t, order=1)[1], expected, rtol=1e-9, atol=1e-11)


def test_zero_time_and_errors(pair):
    A, B = pair
    series = level_exponential(A, [B], 0.0, order=3)
    assert_allclose(series[0], np.eye(4))
    assert not np.any(series[3])
    with pytest.raises(UsageError):
        level_exponential(A, [B], -1.0, order=1)
    with pytest.raises(UsageError):
        generator_series(A, [np.eye(3)], 1)
    with pytest.raises(UsageError):
        LevelSeries([])


def test_derivative_matches_finite_difference(pair):
    A, B = pair
    t, h = 0.5, 1e-6
    generator = generator_series(A, [B], 1)
    derivative = level_derivative(generator, level_exponential(A, [B], t, order=1))
    forward = level_exponential(A, [B], t + h, order=1)[1]
    backward = level_exponential(A, [B], t - h, order=1)[1]
    assert_allclose(derivative[1], (forward - backward) / (2 * h), rtol=1e-6, atol=1e-8)


def test_cumulative_sums():
    series = LevelSeries([np.eye(2), 2 * np.eye(2), 3 * np.eye(2)])
    assert_allclose(series.cumulative()[-1], 6 * np.eye(2))


def test_riesz_projector_is_an_invariant_projection():
    rng = np.random.default_rng(11)
    d = np.array([0.0, 1.0, 2.5, -1.7])
    selected = np.array([True, False, False, False])
    B = rng.standard_normal((4, 4))
    order = 3
    P = riesz_projector(d, B, selected, order)
    G = generator_series(np.diag(d), [B], order)
    square = P @ P
    commutator = (P @ G) - (G @ P)
    for k in range(order + 1):
        assert_allclose(square[k], P[k], atol=1e-10)
        assert_allclose(commutator[k], 0.0, atol=1e-10)


def test_riesz_projector_needs_separation():
    with pytest.raises(UsageError):
        riesz_projector(np.array([1.0, 1.0]), np.eye(2), np.array([True, False]), 1)
