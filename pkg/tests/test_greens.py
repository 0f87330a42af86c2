import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from vmbwaves.core.greens import (
    F_alpha,
    SpaceTimeField,
    boltzmann_fluid_kernel,
    block_groups,
    fluid_low_kernel,
    full_mode_green,
    green_parts,
    heat_second_moment,
    mollified_delta,
    remainder_norms,
    singular_short_wave,
    vmb_probes,
    window_mass,
)
from vmbwaves.exceptions import ResolutionError, UsageError


@pytest.mark.parametrize("block, expected", [("11", ("f", "f")), ("12", ("f", "E")), ("33", ("B", "B"))])
def test_block_groups(block, expected):
    assert block_groups(block) == expected


@pytest.mark.parametrize("block", ["1", "14", "a2"])
def test_block_groups_rejects(block):
    with pytest.raises(UsageError):
        block_groups(block)


def test_space_time_field_validation(matrices):
    probes = vmb_probes(matrices)
    blocks = np.zeros((2, 3, probes.size, probes.size))
    field = SpaceTimeField([1.0, 2.0], [-1.0, 0.0, 1.0], blocks, probes)
    assert field.sup_norms("f", "E").shape == (2,)
    assert field.imaginary_residue == 0.0
    assert len(field.to_rows("B", "B")) == 6
    with pytest.raises(UsageError):
        SpaceTimeField([2.0, 1.0], [-1.0, 0.0, 1.0], blocks, probes)
    with pytest.raises(UsageError):
        SpaceTimeField([1.0], [0.0], blocks, probes)
    with pytest.raises(UsageError):
        field.norms("g")


@pytest.mark.parametrize("alpha, nu0", [(1.5, 1.3), (2.0, 0.8)])
def test_mollified_delta_mass(alpha, nu0):
    mass, _ = quad(lambda y: float(mollified_delta(y, alpha, nu0)), 0.0, np.inf)
    assert_allclose(mass, nu0**-alpha, rtol=1e-8)
    assert mollified_delta(-0.5, alpha, nu0) == 0.0


def test_heat_second_moment():
    x = np.linspace(-20.0, 20.0, 4001)
    assert_allclose(heat_second_moment(x, np.exp(-x**2 / 4.0)), 2.0, rtol=1e-6)


def test_high_frequency_arguments(matrices):
    x = np.linspace(-1.0, 1.0, 5)
    with pytest.raises(UsageError):
        F_alpha([1.0], x, -0.5, matrices, r1=10.0, xi_max=40.0)
    with pytest.raises(ResolutionError):
        F_alpha([1.0], x, 1.0, matrices, r1=10.0, xi_max=10.0)
    with pytest.raises(UsageError):
        singular_short_wave(1.0, x, 3.0, matrices, r1=10.0, xi_max=40.0)
    with pytest.raises(UsageError):
        window_mass(1.0, 0.0, matrices, xi_max=40.0)


def test_low_fluid_kernel_is_real(matrices):
    field = fluid_low_kernel([1.0, 2.0], np.linspace(-2.0, 2.0, 5), matrices, r0=0.5)
    assert field.blocks.shape == (2, 5, 10, 10)
    assert field.imaginary_residue <= 1e-8


@pytest.mark.parametrize("xi", [0.1, 2.0])
def test_green_parts_sum_to_the_full_green(matrices, xi):
    parts = green_parts(0.5, xi, matrices, r0=0.5, r1=10.0)
    full = full_mode_green(0.5, xi, matrices)
    assert_allclose(sum(parts.values()), full, atol=1e-8)


def test_remainder_norms_shape(matrices):
    norms = remainder_norms([0.0, 1.0], [2.0], matrices, r0=0.5, r1=10.0)
    assert norms.shape == (2, 1)
    assert np.all(norms > 0)


def test_boltzmann_fluid_kernel(matrices):
    x = np.linspace(-4.0, 4.0, 9)
    field = boltzmann_fluid_kernel([1.0, 2.0], x, matrices, r0=1.0)
    assert field.blocks.shape[:2] == (2, 9)
    assert field.imaginary_residue <= 1e-8
    assert np.all(field.sup_norms("fluid", "fluid") > 0)
