"""Brute-force Fresnel propagation through the three-grating interferometer.

Independent check on :func:`kdtl.fringe.analytic_fringe`.  Point sources fill
the open slits of two neighbouring G1 periods (incoherent sum), each spherical
wave is propagated to G2 and through the standing-wave phase grating by direct
summation of the paraxial Fresnel kernel, and the intensity on a screen
spanning one period is masked by G3 at every offset.  The first Fourier
component of the transmitted flux gives O and A.

Only paraxial scalar optics is assumed; the G2 window is finite
(``slits_per_side`` periods each way) and tapered smoothly so its edges do not
ring into the result.
"""

import numpy as np
from scipy.signal.windows import tukey

from .core import MoleculeSpec, de_broglie_wavelength
from .errors import ConfigurationError
from .fringe import FringeCoefficients, GratingSet, phase_grating_modulation

SOURCES_PER_SLIT = 48
SCREEN_POINTS = 256
TAPER_FRACTION = 0.5


def _coverage_mask(open_fraction, n):
    """Fraction of each of n equal pixels on [0, 1) covered by [0, open_fraction)."""
    edges = np.arange(n + 1) / n
    return np.clip(np.minimum(edges[1:], open_fraction) - edges[:-1], 0.0, None) * n


def _propagate_intensity(x1, x2, x3, t2, wavelength, L):
    """|psi(x3)|^2 for each source x1, normalised to 1 for free propagation."""
    dx2 = x2[1] - x2[0]
    k = np.pi / (wavelength * L)
    # columns: one source each
    psi2 = t2[:, None] * np.exp(1j * k * (x2[:, None] - x1[None, :]) ** 2)
    kernel = np.exp(1j * k * (x3[:, None] - x2[None, :]) ** 2)
    psi3 = kernel @ psi2 * dx2
    return np.abs(psi3) ** 2 / (wavelength * L / 2.0)


def numerical_oracle_fringe(molecule: MoleculeSpec, gratings: GratingSet, velocity,
                            slits_per_side=40, samples=16384, phase_grating=True):
    """Fringe coefficients from direct coherent summation.

    With ``phase_grating=False`` the central grating is replaced by a fully open
    plane (useful for checking that the masks alone give no fringe).
    """
    if slits_per_side < 5:
        raise ConfigurationError("slits_per_side must be >= 5")
    if samples < 1000:
        raise ConfigurationError("samples must be >= 1000")
    d = gratings.period_d
    L = gratings.spacing_L
    f1, f3 = gratings.open_fraction_g1, gratings.open_fraction_g3
    wavelength = de_broglie_wavelength(molecule.mass, velocity)
    phi0 = phase_grating_modulation(molecule, gratings, velocity) if phase_grating else 0.0

    # midpoint rule over the open part of G1, two neighbouring periods
    u = (np.arange(SOURCES_PER_SLIT) + 0.5) / SOURCES_PER_SLIT * f1 * d
    x1 = np.concatenate([u, u + d])
    x3 = (np.arange(SCREEN_POINTS) + 0.5) / SCREEN_POINTS * d

    centre = 0.5 * (x1.mean() + x3.mean())
    half_width = slits_per_side * d
    x2 = centre + np.linspace(-half_width, half_width, samples, endpoint=False)
    dx2 = x2[1] - x2[0]

    # Nyquist: the summed phase may advance by at most pi per G2 sample
    reach = np.max(np.abs(x2[[0, -1]][:, None] - x1[None, [0, -1]])) + \
        np.max(np.abs(x3[[0, -1]][:, None] - x2[None, [0, -1]]))
    gradient = 2.0 * np.pi / (wavelength * L) * reach + 2.0 * np.pi * abs(phi0) / d
    if gradient * dx2 > np.pi:
        needed = int(np.ceil(gradient * 2 * half_width / np.pi))
        raise ConfigurationError(
            f"samples={samples} undersamples the Fresnel kernel over +/-{slits_per_side} "
            f"periods at lambda_dB={wavelength:.3e} m; need at least {needed}")

    t2 = np.exp(1j * phi0 * np.cos(2.0 * np.pi * x2 / d)) * tukey(samples, TAPER_FRACTION)
    intensity = _propagate_intensity(x1, x2, x3, t2, wavelength, L)
    # incoherent source sum; weight dx1 / (2 d) makes free propagation give f1
    screen = intensity.sum(axis=1) * (f1 * d / SOURCES_PER_SLIT) / (2.0 * d)

    # flux through G3 at each offset s = x3 grid shift
    mask = _coverage_mask(f3, SCREEN_POINTS) / SCREEN_POINTS
    flux = np.array([np.dot(screen, np.roll(mask, j)) for j in range(SCREEN_POINTS)])
    harmonics = np.fft.rfft(flux) / SCREEN_POINTS
    O = float(harmonics[0].real)
    A = float(2.0 * np.abs(harmonics[1]))
    V = min(max(A / O, 0.0), 1.0) if O > 0 else 0.0
    return FringeCoefficients(O, A, V)
