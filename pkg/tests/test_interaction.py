import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmbwaves.core.interaction import (
    LEMMAS,
    WaveParams,
    certify_bounds,
    convolution,
    evaluate,
    gamma_fn,
    get_lemma,
    integral,
    monte_carlo,
    profile_B,
    pulse,
    ray_scan,
)
from vmbwaves.exceptions import ParameterError, UsageError

FLAT = {"beta": 0.0, "gamma": 0.0}


@pytest.mark.parametrize("t", [1.0, 5.0])
def test_transport_closed_form(t):
    params = WaveParams(D=0.7, **FLAT)
    assert_allclose(integral("L", params, t, 0.3), 2 * 0.7**2 * (1 - np.exp(-t / 0.7)), rtol=1e-6)


def test_diffusive_closed_form():
    params = WaveParams(alpha=1.0, D=2.0, **FLAT)
    assert_allclose(integral("I", params, 3.0, 0.0), 3.0 * np.sqrt(np.pi * 2.0), rtol=1e-6)


def test_localized_closed_forms():
    t = 4.0
    assert_allclose(integral("K", WaveParams(alpha=2.0, **FLAT), t, 0.0), np.log1p(t), rtol=1e-6)
    assert_allclose(integral("J", WaveParams(alpha=3.0, nu0=2.0, **FLAT), t, 0.0), 2.0 * gamma_fn(3.0, t),
                    rtol=1e-6)


def test_convolution_closed_form():
    params = WaveParams(alpha=1.0, gamma=0.0, D=1.5)
    t = 2.0
    assert_allclose(convolution(params, t, 0.5), np.sqrt(np.pi * 1.5 * (1 + t)) * (1 + t) ** -0.5, rtol=1e-7)


def test_empty_time_window():
    params = WaveParams()
    assert integral("I", params, 2.0, 0.0, 1.0, 1.0) == 0.0
    with pytest.raises(UsageError):
        integral("I", params, 2.0, 0.0, 1.5, 1.0)
    with pytest.raises(UsageError):
        integral("M", params, 2.0, 0.0)


def test_profiles():
    assert_allclose(gamma_fn(1.0, 3.0), 2.0)
    assert_allclose(profile_B(2.0, 3.0, 2.0 + 3.0 * 0.5, lam=0.5), 1.0 / (1.0 + 4.0 / 4.0))
    assert_allclose(pulse(2.0, 1.0, [0.0, 1.5]), [0.25, 0.0])
    with pytest.raises(UsageError):
        profile_B(-1.0, 1.0, 0.0)


def test_parameter_ranges():
    with pytest.raises(ParameterError):
        certify_bounds("diffusive", WaveParams(gamma=1.0))
    with pytest.raises(ParameterError):
        certify_bounds("diffusive-cross", WaveParams(lam=1.0, mu=0.0))
    with pytest.raises(ParameterError):
        certify_bounds("localized", WaveParams(nu0=0.0))
    with pytest.raises(UsageError):
        get_lemma("parabolic")


def test_single_speed_lemmas_ignore_mu():
    assert get_lemma("diffusive").prepare(WaveParams(lam=0.5, mu=3.0)).mu == 0.5
    assert get_lemma("diffusive-cross").prepare(WaveParams(lam=0.5, mu=3.0)).mu == 3.0


def test_shift_algebraic_ratio_is_at_most_one():
    result = evaluate("shift-algebraic", WaveParams(alpha=1.5), [4.0, 16.0], count=7)
    assert result.bound_ratio <= 1.0 + 1e-12
    assert np.all(np.argmax(result.ratios, axis=1) == 0)


def test_shift_gaussian_ratio_is_at_least_one():
    result = evaluate("shift-gaussian", WaveParams(alpha=1.0, D=2.0), [4.0, 16.0], count=7)
    assert np.all(result.ratios >= 1.0 - 1e-12)


def test_certification_record():
    certification = certify_bounds("shift-algebraic", WaveParams(alpha=1.0), times=(4.0, 16.0), count=5)
    data = certification.to_dict()
    assert set(data) == {"lemma", "params", "coarse_ratio", "max_ratio", "relative_change", "passed"}
    assert np.isfinite(data["max_ratio"])
    assert data["passed"]


@pytest.mark.parametrize("kind", ["I", "J", "K", "L"])
def test_monte_carlo_agrees_with_quadrature(kind):
    params = WaveParams(alpha=2.0, beta=2.0, gamma=1.5, lam=-0.5, mu=0.5)
    exact = integral(kind, params, 3.0, 0.4)
    estimate = monte_carlo(kind, params, 3.0, 0.4, samples=200_000, seed=5)
    assert estimate.agrees(exact, sigmas=4.0)


def test_ray_scan():
    with pytest.raises(UsageError):
        ray_scan("shift-gaussian", WaveParams(), [1.0])
    scan = ray_scan("transport", WaveParams(), [1.0, 2.0], speeds=[0.0, 1.0])
    assert sorted(scan) == [0.0, 1.0]
    assert all(ratios.shape == (2,) for ratios in scan.values())


def test_every_lemma_has_a_description():
    assert all(lemma.description for lemma in LEMMAS.values())
