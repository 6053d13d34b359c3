"""Species description and elementary matter-wave relations."""

from dataclasses import dataclass

import numpy as np

from .constants import H, amu_to_kg
from .errors import DomainError


@dataclass(frozen=True)
class MoleculeSpec:
    """A molecular species flying through the interferometer.

    Polarizabilities are in Angstrom^3 x 4 pi eps0, mass in amu.
    ``dipole_model`` holds (magnitude in debye, multiplicity) pairs for the
    thermally activated dipoles; ``chi_true`` is the susceptibility the
    forward simulator uses as ground truth.
    """

    name: str
    mass: float
    alpha_stat: float
    alpha_opt: float
    chi_true: float
    dipole_model: tuple = ()
    internal_temperature: float = 458.0
    alpha_stat_sigma: float = 0.0
    side_chains: int = 0
    side_chain_range: tuple = (10.0, 15.0)

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError(f"mass must be > 0, got {self.mass}")
        if self.alpha_stat < 0 or self.alpha_opt < 0:
            raise DomainError("polarizabilities must be >= 0")
        if self.internal_temperature <= 0:
            raise DomainError("internal_temperature must be > 0")
        object.__setattr__(self, "dipole_model",
                           tuple((float(d), float(n)) for d, n in self.dipole_model))
        if any(d < 0 or n < 0 for d, n in self.dipole_model):
            raise DomainError("dipole magnitudes and multiplicities must be >= 0")
        if self.dipole_model and self.chi_true < self.alpha_stat:
            raise DomainError("chi_true must be >= alpha_stat for a polar molecule")


def de_broglie_wavelength(mass, velocity):
    """h / (m v) in metres for mass in amu and velocity in m/s."""
    mass = np.asarray(mass, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    if np.any(mass <= 0) or np.any(velocity <= 0):
        raise DomainError("mass and velocity must be positive")
    out = H / (amu_to_kg(mass) * velocity)
    return float(out) if out.ndim == 0 else out


def talbot_length(grating_period, wavelength):
    """Near-field self-imaging length d^2 / lambda."""
    grating_period = np.asarray(grating_period, dtype=float)
    wavelength = np.asarray(wavelength, dtype=float)
    if np.any(grating_period <= 0) or np.any(wavelength <= 0):
        raise DomainError("grating period and wavelength must be positive")
    out = grating_period**2 / wavelength
    return float(out) if out.ndim == 0 else out
