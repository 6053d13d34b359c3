import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdtl.beamline import (DeflectorConfig, FringeScan, VelocityDistribution,
                           effective_fringe_parameters, expected_counts, scan_grid,
                           stark_fringe_shift, stream_seed, synthesize_scan, wrap_shift)
from kdtl.constants import AMU, a3_to_si
from kdtl.errors import ConfigurationError, DomainError, QuadratureError
from kdtl.fringe import analytic_fringe

D = 266e-9


def k_for_half_period():
    # K such that chi=126, 1592 amu, 91 m/s, 7 kV gives 133 nm
    return 133e-9 * 1592 * AMU * 91.0**2 / (a3_to_si(126.0) * 7000.0**2)


def test_k_for_half_period_golden():
    assert k_for_half_period() == pytest.approx(4238.3944027539055, rel=1e-12)


def test_stark_zero_field(deflector):
    assert stark_fringe_shift(126, 0.0, 1592, 91, deflector) == 0.0


@given(st.floats(min_value=1, max_value=7000))
def test_stark_quadratic_law(u):
    dfl = DeflectorConfig(1e4)
    ratio = stark_fringe_shift(126, 2 * u, 1592, 91, dfl) / stark_fringe_shift(126, u, 1592, 91, dfl)
    assert ratio == pytest.approx(4.0, rel=1e-14)


def test_stark_half_period_and_velocity_ratio():
    dfl = DeflectorConfig(k_for_half_period())
    assert stark_fringe_shift(126, 7000, 1592, 91, dfl) == pytest.approx(133e-9, rel=1e-12)
    ratio = stark_fringe_shift(126, 7000, 1592, 81.9, dfl) / stark_fringe_shift(126, 7000, 1592, 91, dfl)
    assert abs(ratio - (91 / 81.9) ** 2) < 1e-12


def test_stark_monotone(deflector):
    base = stark_fringe_shift(100, 5000, 1592, 100, deflector)
    assert stark_fringe_shift(110, 5000, 1592, 100, deflector) > base
    assert stark_fringe_shift(100, 5500, 1592, 100, deflector) > base
    assert stark_fringe_shift(100, 5000, 1700, 100, deflector) < base
    assert stark_fringe_shift(100, 5000, 1592, 110, deflector) < base


def test_stark_domain_errors(deflector):
    with pytest.raises(DomainError):
        stark_fringe_shift(100, 20000, 1592, 100, deflector)
    with pytest.raises(DomainError):
        stark_fringe_shift(100, 1000, 1592, 0, deflector)
    with pytest.raises(DomainError):
        stark_fringe_shift(100, 1000, 0, 100, deflector)


def test_nominal_grid_spans_four_periods():
    assert 1064e-9 / 26e-9 == pytest.approx(40.923, abs=1e-3)
    assert 1064e-9 == pytest.approx(4 * D, rel=1e-15)
    g = scan_grid(0, 26e-9, 41)
    assert g[-1] == pytest.approx(1040e-9)
    with pytest.raises(ConfigurationError):
        scan_grid(0, 0, 10)


@given(st.floats(min_value=-1e-5, max_value=1e-5))
def test_wrap_shift_range(x):
    w = float(wrap_shift(x, D))
    assert -D / 2 < w <= D / 2 + 1e-24
    assert abs(np.remainder(x - w + D / 2, D) - D / 2) < 1e-15


def test_velocity_distribution_validation():
    with pytest.raises(DomainError):
        VelocityDistribution("gaussian", 0.0, 0.1)
    with pytest.raises(DomainError):
        VelocityDistribution("gaussian", 100, 1.0)
    with pytest.raises(DomainError):
        VelocityDistribution("histogram", bins=((100, -1), (110, 2)))
    h = VelocityDistribution("histogram", bins=((100, 1), (110, 3)))
    v, w = h.nodes()
    assert w.sum() == pytest.approx(1.0)
    assert h.v_mean == pytest.approx(107.5)


def test_gaussian_nodes_normalised(vdist1):
    v, w = vdist1.nodes()
    assert w.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.dot(w, v) == pytest.approx(110.0, rel=1e-9)
    assert vdist1.sigma == pytest.approx(0.15 * 110 / (2 * np.sqrt(2 * np.log(2))))


def test_delta_distribution_exact(isomer2, gratings, deflector):
    vd = VelocityDistribution.delta(91.0)
    eff = effective_fringe_parameters(isomer2, gratings, deflector, vd, 5000.0)
    fc = analytic_fringe(isomer2, gratings, 91.0)
    dx = stark_fringe_shift(126, 5000.0, 1592, 91.0, deflector)
    assert eff.offset == pytest.approx(fc.offset_O, rel=1e-14)
    assert eff.amplitude == pytest.approx(fc.amplitude_A, rel=1e-14)
    assert eff.shift == pytest.approx(dx, rel=1e-12)


def test_delta_distribution_scan_on_model(isomer2, gratings, deflector):
    vd = VelocityDistribution.delta(91.0)
    x = scan_grid()
    scan = synthesize_scan(isomer2, gratings, deflector, vd, 6000.0, x, 1000.0, 1.0, 1, noise=False)
    fc = analytic_fringe(isomer2, gratings, 91.0)
    dx = stark_fringe_shift(126, 6000.0, 1592, 91.0, deflector)
    model = 1000.0 * (fc.offset_O + fc.amplitude_A * np.sin(2 * np.pi * (x - dx) / D))
    np.testing.assert_allclose(scan.counts, model, rtol=1e-12)


def test_zero_field_effective(isomer1, gratings, deflector, vdist1):
    eff = effective_fringe_parameters(isomer1, gratings, deflector, vdist1, 0.0)
    assert eff.shift == 0.0
    v, w = vdist1.nodes()
    mean_A = sum(wi * analytic_fringe(isomer1, gratings, vi).amplitude_A for vi, wi in zip(v, w))
    assert eff.amplitude == pytest.approx(mean_A, rel=1e-12)


def test_dephasing_decreasing(isomer1, gratings, vdist1):
    dfl = DeflectorConfig(2.5e4)
    amps = [effective_fringe_parameters(isomer1, gratings, dfl, vdist1, u).amplitude
            for u in (0, 4000, 6000, 8000, 10000)]
    assert all(a > b for a, b in zip(amps, amps[1:]))
    assert amps[-1] / amps[0] < 1


def test_averaged_visibility_bounded(isomer1, gratings, deflector, vdist1):
    eff = effective_fringe_parameters(isomer1, gratings, deflector, vdist1, 8000.0)
    v, _ = vdist1.nodes()
    vmax = max(analytic_fringe(isomer1, gratings, vi).visibility_V for vi in v)
    assert eff.amplitude / eff.offset <= vmax


def test_shift_odd_in_chi(isomer1, gratings, deflector, vdist1):
    plus = effective_fringe_parameters(isomer1, gratings, deflector, vdist1, 7000.0, chi=102.0)
    minus = effective_fringe_parameters(isomer1, gratings, deflector, vdist1, 7000.0, chi=-102.0)
    assert minus.shift == pytest.approx(-plus.shift, rel=1e-12)
    assert minus.amplitude == pytest.approx(plus.amplitude, rel=1e-12)


def test_quadrature_error_raised(isomer1, gratings, vdist1):
    dfl = DeflectorConfig(1e6)
    with pytest.raises(QuadratureError):
        effective_fringe_parameters(isomer1, gratings, dfl, vdist1, 10000.0, nodes=8)


def test_poisson_statistics(isomer2, gratings, deflector):
    vd = VelocityDistribution.delta(91.0)
    x = np.zeros(1) + np.arange(10000) * D  # constant expected rate at every point
    scan = synthesize_scan(isomer2, gratings, deflector, vd, 0.0, x, 500.0, 1.0, 7)
    mu = expected_counts(isomer2, gratings, deflector, vd, 0.0, x[:1], 500.0, 1.0)[0]
    c = scan.counts
    assert abs(c.mean() - mu) < 5 * np.sqrt(mu / c.size)
    assert abs(c.var() / mu - 1) < 0.1


def test_synthesis_deterministic(isomer1, gratings, deflector, vdist1):
    args = (isomer1, gratings, deflector, vdist1, 3000.0, scan_grid(), 700.0, 1.0)
    a = synthesize_scan(*args, seed=11)
    b = synthesize_scan(*args, seed=11)
    c = synthesize_scan(*args, seed=12)
    assert a.counts.tobytes() == b.counts.tobytes()
    assert a.counts.tobytes() != c.counts.tobytes()
    assert a.counts.dtype.kind == "i"


def test_stream_seeds_distinct():
    seeds = {stream_seed(5, i, r) for i in range(20) for r in (False, True)}
    assert len(seeds) == 40
    assert stream_seed(5, 3, True) == stream_seed(5, 3, True)


def test_fringe_scan_invariants():
    with pytest.raises(ConfigurationError):
        FringeScan(0.0, np.array([0.0, 1.0, 0.5]), np.array([1, 2, 3]), 1.0, "m", 0)
    with pytest.raises(ConfigurationError):
        FringeScan(0.0, np.array([0.0, 1.0]), np.array([1, -2]), 1.0, "m", 0)
    with pytest.raises(ConfigurationError):
        FringeScan(0.0, np.array([0.0, 1.0]), np.array([1]), 1.0, "m", 0)
