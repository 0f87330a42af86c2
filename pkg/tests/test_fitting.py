import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmbwaves.core.fitting import (
    decay_fit,
    envelope_constant,
    local_maxima,
    power_exponent,
    relative_change,
    xi_gain,
)
from vmbwaves.exceptions import UsageError


def test_decay_fit():
    t = np.linspace(0.0, 10.0, 21)
    C, kappa = decay_fit(t, 3.0 * np.exp(-0.5 * t))
    assert_allclose([C, kappa], [3.0, 0.5], rtol=1e-10)


def test_power_exponent():
    t = np.array([1.0, 2.0, 4.0, 8.0])
    assert_allclose(power_exponent(t, (1.0 + t) ** -1.5), -1.5)
    with pytest.raises(UsageError):
        power_exponent([1.0], [1.0])
    with pytest.raises(UsageError):
        power_exponent(t, [1.0, -1.0, 1.0, 1.0])


def test_envelope_constant():
    fit = envelope_constant([1.0, 4.0], [2.0, 2.0], family="M")
    assert fit.constant == 2.0
    assert fit.finite
    assert fit.to_dict() == {"constant": 2.0, "max_ratio": 2.0, "params": {"family": "M"}}


@pytest.mark.parametrize("coarse, fine, expected", [(1.0, 1.1, 0.1 / 1.1), (0.0, 0.0, 0.0), (-2.0, 2.0, 2.0)])
def test_relative_change(coarse, fine, expected):
    assert_allclose(relative_change(coarse, fine), expected)


def test_xi_gain():
    assert_allclose(xi_gain([-1.0, 1.0], 2.0), [0.25, 0.25])
    assert_allclose(xi_gain(0.0, 1.0, logs=1.0), np.log(2.0))


def test_local_maxima():
    x = np.linspace(-3.0, 3.0, 61)
    values = np.exp(-(x - 1.0) ** 2) + np.exp(-(x + 1.0) ** 2)
    assert_allclose(local_maxima(x, values), [-1.0, 1.0], atol=0.1)
