"""Physical constants (CODATA 2018, exact or recommended values) and unit conversions.

Everything inside the package computes in SI. Public interfaces take the units
customary in molecule interferometry: amu, m/s, V, nm and polarizability volumes
in Angstrom^3 x 4 pi eps0 (written ``A3`` in names below).
"""

from dataclasses import dataclass
import math


@dataclass(frozen=True)
class PhysicalConstants:
    planck_h: float = 6.62607015e-34            # J s (exact)
    boltzmann_kB: float = 1.380649e-23          # J/K (exact)
    atomic_mass_unit: float = 1.66053906660e-27  # kg
    vacuum_permittivity: float = 8.8541878128e-12  # F/m
    speed_of_light: float = 299792458.0         # m/s (exact)

    def __post_init__(self):
        for name in ("planck_h", "boltzmann_kB", "atomic_mass_unit",
                     "vacuum_permittivity", "speed_of_light"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def hbar(self) -> float:
        return self.planck_h / (2.0 * math.pi)

    @property
    def vacuum_permittivity_factor(self) -> float:
        """SI polarizability (C m^2/V) of one Angstrom^3 x 4 pi eps0."""
        return 4.0 * math.pi * self.vacuum_permittivity * 1e-30

    @property
    def debye(self) -> float:
        """One debye in C m (1e-21 / c)."""
        return 1e-21 / self.speed_of_light


CODATA2018 = PhysicalConstants()

H = CODATA2018.planck_h
HBAR = CODATA2018.hbar
KB = CODATA2018.boltzmann_kB
AMU = CODATA2018.atomic_mass_unit
EPS0 = CODATA2018.vacuum_permittivity
C = CODATA2018.speed_of_light
A3_SI = CODATA2018.vacuum_permittivity_factor
DEBYE = CODATA2018.debye

NM = 1e-9


def amu_to_kg(mass):
    return mass * AMU


def kg_to_amu(mass):
    return mass / AMU


def a3_to_si(alpha):
    """Angstrom^3 x 4 pi eps0 -> C m^2 / V."""
    return alpha * A3_SI


def si_to_a3(alpha):
    return alpha / A3_SI


def a3_to_m3(alpha):
    """Polarizability volume alpha / (4 pi eps0) in m^3."""
    return alpha * 1e-30


def debye_to_si(dipole):
    return dipole * DEBYE


def si_to_debye(dipole):
    return dipole / DEBYE
