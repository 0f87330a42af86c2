import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmbwaves.core.kinetic import (
    YZ_split,
    boltzmann_singular,
    boltzmann_wave,
    bound_envelope,
    duhamel_oracle,
    explicit_Q_split,
    mixture_bound,
    mixture_M,
    mixture_Q,
    mixture_levels,
    mixture_norms,
    mixture_oracle,
    oscillatory_sandwich,
    picard_U,
    resolved_frequency,
    split_Q,
    transport_action,
)
from vmbwaves.exceptions import UsageError


@pytest.mark.parametrize("level", [1, 2])
def test_mixture_matches_quadrature(matrices, level):
    computed = mixture_M(level, 1.0, 2.0, matrices, sector=0).matrix
    oracle = mixture_oracle(level, 1.0, 2.0, matrices, sector=0)
    assert np.max(np.abs(computed - oracle)) <= 1e-7


def test_mixture_level_zero_is_free_transport(matrices):
    level0 = mixture_levels(0.5, 1.0, matrices, 0, sector=1)[0]
    decay = np.exp(-0.5 * (matrices.nu + 1j * matrices.grid.v1))
    assert_allclose(level0.matrix, np.diag(decay), atol=1e-12)
    assert level0.norm <= 1.0


def test_mixture_variant_errors(matrices):
    with pytest.raises(UsageError):
        mixture_M(1, 1.0, 1.0, matrices, variant="L")
    with pytest.raises(UsageError):
        duhamel_oracle(np.eye(2), np.eye(2), 1.0, 3)
    with pytest.raises(UsageError):
        explicit_Q_split(3, 1.0, 1.0, matrices)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_closed_form_split(matrices, n):
    t, xi = 0.8, 3.0
    Q1, Q2 = split_Q(n, t, xi, matrices)
    explicit1, explicit2 = explicit_Q_split(n, t, xi, matrices)
    assert_allclose(Q1.matrix, explicit1, atol=1e-8)
    assert_allclose(Q2.matrix, explicit2, atol=1e-8)
    assert_allclose(Q1.matrix + Q2.matrix, mixture_Q(n, t, xi, matrices).matrix, atol=1e-8)


def test_oscillatory_sandwich_vanishes(matrices):
    assert oscillatory_sandwich(1.0, 2.0, matrices) <= 1e-9


def test_yz_split(matrices):
    split = YZ_split(1, 1.0, 5.0, matrices)
    assert split.telescoping <= 1e-9
    assert split.initial <= 1e-9
    assert max(split.defect.values()) <= 1e-6
    data = split.to_dict()
    assert data["n"] == 1
    assert data["Z_norm"] >= 0


def test_yz_split_arguments(matrices):
    with pytest.raises(UsageError):
        YZ_split(0, 1.0, 5.0, matrices)
    with pytest.raises(UsageError):
        YZ_split(1, 1.0, 0.0, matrices)
    with pytest.raises(UsageError):
        picard_U(1, 1.0, 0.0, matrices)


def test_picard_split_adds_up(matrices):
    U, U1, U2 = picard_U(1, 0.5, 4.0, matrices)
    assert_allclose(U1.matrix + U2.matrix, U.matrix, atol=1e-12)
    assert U.domain == "admissible"


def test_transport_action(matrices):
    x = np.array([0.0, 1.0])
    values = transport_action(0.0, lambda shifted: np.cos(shifted), x, matrices)
    assert_allclose(values, np.cos(x)[:, None] * np.ones(matrices.grid.size))
    with pytest.raises(UsageError):
        transport_action(-1.0, np.cos, x, matrices)


def test_envelopes(matrices):
    with pytest.raises(UsageError):
        bound_envelope("Y", 1, np.ones(2), np.ones(2), 1.0)
    with pytest.raises(UsageError):
        mixture_norms("V", 1, [1.0], [1.0], matrices)
    fit = mixture_bound("M", 1, [0.5, 1.0], [1.0, 4.0], matrices)
    assert fit.finite
    assert fit.ratios.shape == (2, 2)


def test_resolved_frequency(matrices):
    assert resolved_frequency(0.0, matrices) == np.inf
    assert resolved_frequency(2.0, matrices) == pytest.approx(0.5 * resolved_frequency(1.0, matrices))


def test_boltzmann_wave_sums_singular_levels(matrices):
    wave = boltzmann_wave(1, 0.5, 1.0, matrices)
    levels = sum(boltzmann_singular(k, 0.5, 1.0, matrices).matrix for k in range(4))
    assert wave.level == 3
    assert_allclose(wave.matrix, levels, atol=1e-10 * np.max(np.abs(levels)))
