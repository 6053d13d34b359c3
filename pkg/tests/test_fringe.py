import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kdtl.constants import H, AMU
from kdtl.core import MoleculeSpec
from kdtl.errors import ConfigurationError, DomainError
from kdtl.fringe import (GratingSet, analytic_fringe, binary_grating_fourier_coefficient,
                         first_harmonic_amplitude, phase_grating_modulation)
from kdtl.oracle import numerical_oracle_fringe

fractions = st.floats(min_value=1e-3, max_value=1 - 1e-3)


def test_fourier_coefficient_examples():
    assert binary_grating_fourier_coefficient(0.5, 0) == 0.5
    assert abs(binary_grating_fourier_coefficient(0.5, 2)) < 1e-16
    f = 100 / 266
    assert binary_grating_fourier_coefficient(f, 1) == pytest.approx(math.sin(math.pi * f) / math.pi, rel=1e-15)


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_fourier_coefficient_matches_integral(n):
    # midpoint integration of the slit mask [-f/2, f/2) over one period
    f = 100 / 266
    x = (np.arange(200000) + 0.5) / 200000 - 0.5
    mask = np.abs(x) < f / 2
    c = np.mean(mask * np.cos(2 * np.pi * n * x))
    assert binary_grating_fourier_coefficient(f, n) == pytest.approx(c, abs=1e-6)


@given(fractions, st.integers(-50, 50))
def test_fourier_coefficient_even(f, n):
    assert binary_grating_fourier_coefficient(f, n) == binary_grating_fourier_coefficient(f, -n)


@pytest.mark.parametrize("f", [0.0, 1.0, -0.2, 1.5])
def test_fourier_coefficient_domain(f):
    with pytest.raises(DomainError):
        binary_grating_fourier_coefficient(f, 1)


@pytest.mark.parametrize("k", [1, 100, 385, 512, 1000])
def test_parseval_on_1024_grid(k):
    # A mask of k open pixels out of N has discrete coefficients
    # c_n (pi n / N) / sin(pi n / N); their squares sum to k / N.
    N = 1024
    f = k / N
    n = np.arange(-N // 2 + 1, N // 2 + 1)
    c = np.array([binary_grating_fourier_coefficient(f, int(m)) for m in n])
    pixel = np.ones(N)
    nz = n != 0
    pixel[nz] = (np.pi * n[nz] / N) / np.sin(np.pi * n[nz] / N)
    total = np.sum((c * pixel) ** 2)
    assert total == pytest.approx(f, rel=1e-10)


def test_phase_modulation_proportionalities(isomer2):
    g = GratingSet(laser_power=1.0, laser_waist=500e-6)
    base = phase_grating_modulation(isomer2, g, 91.0)
    g2 = GratingSet(laser_power=2.0, laser_waist=500e-6)
    assert phase_grating_modulation(isomer2, g2, 91.0) == pytest.approx(2 * base, rel=1e-15)
    assert phase_grating_modulation(isomer2, g, 182.0) == pytest.approx(base / 2, rel=1e-15)
    g3 = GratingSet(laser_power=1.0, laser_waist=1000e-6)
    assert phase_grating_modulation(isomer2, g3, 91.0) == pytest.approx(base / 2, rel=1e-15)


def test_phase_modulation_golden(isomer2):
    g = GratingSet(laser_power=1.0, laser_waist=500e-6)
    assert phase_grating_modulation(isomer2, g, 91.0) == pytest.approx(0.4879099837544409, rel=1e-12)


def test_phase_modulation_domain(isomer2, gratings):
    with pytest.raises(DomainError):
        phase_grating_modulation(isomer2, gratings, 0.0)


def test_laser_off_gives_no_fringe(gratings):
    dark = MoleculeSpec("nonpolarizable", 1592, 0.0, 0.0, 0.0)
    fc = analytic_fringe(dark, gratings, 91.0)
    assert fc.amplitude_A == 0 and fc.visibility_V == 0


def test_integer_talbot_ratio_gives_no_fringe(isomer2, gratings):
    # velocity at which L / L_T = 4 exactly
    lam = 4 * gratings.period_d**2 / gratings.spacing_L
    v = H / (isomer2.mass * AMU * lam)
    assert analytic_fringe(isomer2, gratings, v).visibility_V < 1e-12


def test_fringe_coefficient_invariants(isomer1, gratings):
    fc = analytic_fringe(isomer1, gratings, 110.0)
    assert fc.offset_O >= 0
    assert 0 <= fc.visibility_V <= 1
    assert fc.amplitude_A == pytest.approx(fc.visibility_V * fc.offset_O, rel=1e-15)


@given(st.floats(min_value=20, max_value=1000), st.floats(min_value=0.01, max_value=50),
       fractions, fractions)
def test_visibility_in_unit_interval(v, power, f1, f3):
    m = MoleculeSpec("m", 1592, 70, 70, 126)
    g = GratingSet(open_fraction_g1=f1, open_fraction_g3=f3, laser_power=power)
    assert 0 <= analytic_fringe(m, g, v).visibility_V <= 1


@given(st.floats(min_value=-20, max_value=20), fractions, fractions)
def test_amplitude_even_in_field_sign(xi, f1, f3):
    assert first_harmonic_amplitude(xi, f1, f3) == first_harmonic_amplitude(-xi, f1, f3)


def test_oracle_offset_matches_mask_transmission(isomer1, gratings):
    fc = numerical_oracle_fringe(isomer1, gratings, 110.0, slits_per_side=20, samples=4096)
    assert fc.offset_O == pytest.approx(gratings.open_fraction_g1 * gratings.open_fraction_g3, rel=1e-6)


def test_oracle_masks_alone_wash_out(isomer1, gratings):
    fc = numerical_oracle_fringe(isomer1, gratings, 110.0, slits_per_side=50, samples=16384,
                                 phase_grating=False)
    assert fc.visibility_V < 0.05


def test_oracle_converged_in_samples(isomer2, gratings):
    a = numerical_oracle_fringe(isomer2, gratings, 91.0, slits_per_side=30, samples=8192)
    b = numerical_oracle_fringe(isomer2, gratings, 91.0, slits_per_side=30, samples=16384)
    assert abs(a.visibility_V - b.visibility_V) < 1e-3


def test_oracle_matches_analytic_single_point(isomer1, gratings):
    fc = numerical_oracle_fringe(isomer1, gratings, 110.0, slits_per_side=30, samples=8192)
    ref = analytic_fringe(isomer1, gratings, 110.0)
    assert fc.visibility_V == pytest.approx(ref.visibility_V, rel=1e-2)


def test_oracle_rejects_undersampling(isomer1, gratings):
    with pytest.raises(ConfigurationError, match="undersamples"):
        numerical_oracle_fringe(isomer1, gratings, 110.0, slits_per_side=200, samples=1024)


@pytest.mark.parametrize("kw", [dict(slits_per_side=4), dict(samples=999)])
def test_oracle_precondition_errors(isomer1, gratings, kw):
    with pytest.raises(ConfigurationError):
        numerical_oracle_fringe(isomer1, gratings, 110.0, **kw)
