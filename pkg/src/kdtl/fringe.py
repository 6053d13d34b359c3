"""Single-velocity Talbot-Lau fringe behind the third grating.

The two material gratings are ideal binary masks, the central grating a pure
standing-wave phase grating.  In the symmetric geometry (equal spacings and
periods) the period-d fringe seen by scanning G3 is the product of the first
Fourier coefficients of G1 and G3 with the Talbot coefficient B_2 of the phase
grating, evaluated at L / L_T:

    O = c0(f1) c0(f3)
    A = 2 |c1(f1) c1(f3) J2(2 phi0 sin(pi L / L_T))|

where phi0 is the modulation depth of the grating phase phi0 cos(2 pi x / d)
(half the peak phase of the cos^2 light-shift profile).  The period-d moire is
built from pairs of diffraction orders two apart, which is why J2 rather than
J1 appears.  :mod:`kdtl.oracle` checks this by brute-force propagation.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import jv

from .constants import HBAR, C, a3_to_m3
from .core import MoleculeSpec, de_broglie_wavelength, talbot_length
from .errors import DomainError

# phi0 = KAPPA * alpha_opt[m^3] * P / (hbar c w v) for a retro-reflected
# Gaussian beam; the peak cos^2 phase is twice this (8 sqrt(2 pi)).
PHASE_PREFACTOR = 4.0 * math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GratingSet:
    period_d: float = 266e-9
    open_fraction_g1: float = 100.0 / 266.0
    open_fraction_g3: float = 100.0 / 266.0
    spacing_L: float = 0.105
    laser_wavelength: float = 532e-9
    laser_power: float = 6.5
    laser_waist: float = 900e-6

    def __post_init__(self):
        for name in ("open_fraction_g1", "open_fraction_g3"):
            f = getattr(self, name)
            if not 0.0 < f < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {f}")
        for name in ("period_d", "spacing_L", "laser_wavelength", "laser_power", "laser_waist"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")


@dataclass(frozen=True)
class FringeCoefficients:
    offset_O: float
    amplitude_A: float
    visibility_V: float


def binary_grating_fourier_coefficient(open_fraction, order):
    """Fourier coefficient c_n of a 0/1 slit mask with the slit centred on x = 0."""
    if not 0.0 < open_fraction < 1.0:
        raise DomainError(f"open fraction must lie in (0, 1), got {open_fraction}")
    n = abs(int(order))
    if n == 0:
        return float(open_fraction)
    return math.sin(n * math.pi * open_fraction) / (n * math.pi)


def phase_grating_modulation(molecule: MoleculeSpec, gratings: GratingSet, velocity):
    """Phase modulation depth phi0 (rad) imprinted by the standing light wave."""
    velocity = np.asarray(velocity, dtype=float)
    if np.any(velocity <= 0):
        raise DomainError("velocity must be positive")
    phi0 = (PHASE_PREFACTOR * a3_to_m3(molecule.alpha_opt) * gratings.laser_power
            / (HBAR * C * gratings.laser_waist * velocity))
    return float(phi0) if phi0.ndim == 0 else phi0


def talbot_argument(molecule: MoleculeSpec, gratings: GratingSet, velocity):
    """Bessel argument 2 phi0 sin(pi L / L_T(v)) of the phase-grating coefficient."""
    phi0 = phase_grating_modulation(molecule, gratings, velocity)
    lt = talbot_length(gratings.period_d, de_broglie_wavelength(molecule.mass, velocity))
    return 2.0 * phi0 * np.sin(np.pi * gratings.spacing_L / lt)


def first_harmonic_amplitude(xi, open_fraction_g1, open_fraction_g3):
    """Fringe amplitude 2 |c1(f1) c1(f3) J2(xi)| for unit offset-normalised flux."""
    c1 = (binary_grating_fourier_coefficient(open_fraction_g1, 1)
          * binary_grating_fourier_coefficient(open_fraction_g3, 1))
    return 2.0 * abs(c1) * np.abs(jv(2, xi))


def fringe_arrays(molecule: MoleculeSpec, gratings: GratingSet, velocity):
    """Vectorised (O, A) over an array of velocities."""
    c0 = (binary_grating_fourier_coefficient(gratings.open_fraction_g1, 0)
          * binary_grating_fourier_coefficient(gratings.open_fraction_g3, 0))
    xi = talbot_argument(molecule, gratings, velocity)
    amplitude = first_harmonic_amplitude(xi, gratings.open_fraction_g1, gratings.open_fraction_g3)
    offset = np.full_like(amplitude, c0, dtype=float)
    return offset, amplitude


def analytic_fringe(molecule: MoleculeSpec, gratings: GratingSet, velocity) -> FringeCoefficients:
    O, A = fringe_arrays(molecule, gratings, np.atleast_1d(float(velocity)))
    O, A = float(O[0]), float(A[0])
    V = min(max(A / O, 0.0), 1.0) if O > 0 else 0.0
    return FringeCoefficients(O, V * O, V)
