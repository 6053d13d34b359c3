import pytest
from hypothesis import given, strategies as st

from kdtl.errors import DomainError
from kdtl.vanvleck import (DipoleEnsemble, chi_total, consistency_interval, dipole_term,
                           intervals_overlap, rms_dipole_for_term, side_chain_budget)


def test_empty_ensemble_is_alpha():
    assert chi_total(63.0, DipoleEnsemble((), 458.0)) == 63.0


def test_one_debye_at_300k_golden():
    # (3.33564e-30 C m)^2 / (3 kB 300 K) / (4 pi eps0 1e-30 m^3), by hand
    assert dipole_term(1.0, 300.0) == pytest.approx(8.047745022203475, rel=1e-12)
    assert dipole_term(1.0, 300.0) == pytest.approx(8.05, rel=1e-3)


def test_doubling_temperature_halves_term():
    ens = DipoleEnsemble(((2.5, 1.0),), 300.0)
    hot = DipoleEnsemble(((2.5, 1.0),), 600.0)
    assert chi_total(0, hot) == pytest.approx(chi_total(0, ens) / 2, rel=1e-15)


def test_isomer2_required_rms_dipole():
    d = rms_dipole_for_term(56.0, 458.0)
    assert d == pytest.approx(3.2593351561041546, rel=1e-12)
    assert chi_total(70.0, DipoleEnsemble(((d, 1.0),), 458.0)) == pytest.approx(126.0, rel=1e-12)


def test_weights_normalised():
    ens = DipoleEnsemble(((1.0, 2.0), (3.0, 6.0)), 400.0)
    assert sum(w for _, w in ens.samples) == pytest.approx(1.0)
    assert ens.mean_square_dipole == pytest.approx(0.25 + 0.75 * 9)


def test_from_dipole_model_quadrature_sum():
    ens = DipoleEnsemble.from_dipole_model(((2.0, 4),), 458.0)
    assert ens.mean_square_dipole == pytest.approx(16.0)


@given(st.floats(min_value=0, max_value=1e3), st.floats(min_value=0, max_value=20),
       st.floats(min_value=1, max_value=5000))
def test_chi_at_least_alpha_and_linear(alpha, d, T):
    ens = DipoleEnsemble(((d, 1.0),), T)
    chi = chi_total(alpha, ens)
    assert chi >= alpha
    assert dipole_term(2 * d * d, T) == pytest.approx(2 * dipole_term(d * d, T), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("bad", [0.0, -10.0])
def test_temperature_domain(bad):
    with pytest.raises(DomainError):
        DipoleEnsemble((), bad)
    with pytest.raises(DomainError):
        dipole_term(1.0, bad)


def test_negative_weight_rejected():
    with pytest.raises(DomainError):
        DipoleEnsemble(((1.0, -1.0),), 300)


def test_side_chain_budget():
    assert side_chain_budget(4, 10, 15) == (40, 60)
    assert side_chain_budget(0, 10, 15) == (0, 0)
    lo, hi = side_chain_budget(4, 10, 15)
    assert (63 + lo, 63 + hi) == (103, 123)
    assert 70 + lo <= 126 <= 70 + hi
    with pytest.raises(DomainError):
        side_chain_budget(4, 15, 10)


def test_consistency_intervals():
    assert consistency_interval(102, 63, 2) == (37, 41)
    assert intervals_overlap(consistency_interval(102, 63, 2), (40, 60))
    assert intervals_overlap(consistency_interval(126, 70, 2), (40, 60))
    assert not intervals_overlap((0, 1), (2, 3))
