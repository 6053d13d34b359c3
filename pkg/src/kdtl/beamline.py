"""Forward simulator: velocity-averaged, voltage-dependent fringe scans with Poisson counts."""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .constants import a3_to_si, amu_to_kg
from .core import MoleculeSpec
from .errors import ConfigurationError, DomainError, QuadratureError
from .fringe import GratingSet, fringe_arrays

FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))
QUADRATURE_NODES = 64
QUADRATURE_TOL = 1e-4


@dataclass(frozen=True)
class VelocityDistribution:
    """Gaussian-by-FWHM (truncated at +/-3 sigma and at v <= 0) or a histogram."""

    kind: str = "gaussian"
    v_mean: float = 100.0
    fwhm_fraction: float = 0.15
    bins: tuple = ()

    def __post_init__(self):
        if self.kind not in ("gaussian", "histogram"):
            raise DomainError(f"unknown velocity distribution kind {self.kind!r}")
        if self.kind == "gaussian":
            if not self.v_mean > 0:
                raise DomainError("v_mean must be > 0")
            if not 0.0 < self.fwhm_fraction < 1.0:
                raise DomainError("fwhm_fraction must lie in (0, 1)")
            return
        if not self.bins:
            raise DomainError("histogram distribution needs at least one bin")
        v = np.array([b[0] for b in self.bins], dtype=float)
        w = np.array([b[1] for b in self.bins], dtype=float)
        if np.any(v <= 0) or np.any(w < 0) or w.sum() <= 0:
            raise DomainError("histogram velocities must be > 0 and weights >= 0, not all zero")
        w = w / w.sum()
        object.__setattr__(self, "bins", tuple(zip(v.tolist(), w.tolist())))
        mean = float(np.dot(v, w))
        object.__setattr__(self, "v_mean", mean)
        std = float(np.sqrt(np.dot(w, (v - mean) ** 2)))
        object.__setattr__(self, "fwhm_fraction", FWHM_PER_SIGMA * std / mean)

    @classmethod
    def delta(cls, velocity):
        return cls(kind="histogram", bins=((float(velocity), 1.0),))

    @property
    def sigma(self) -> float:
        return self.fwhm_fraction * self.v_mean / FWHM_PER_SIGMA

    def nodes(self, n=QUADRATURE_NODES):
        """Quadrature velocities and normalised weights.

        Gauss-Legendre on the truncated Gaussian; the exact bin sum for a histogram.
        """
        if self.kind == "histogram":
            v, w = np.array(self.bins, dtype=float).T
            return v, w
        lo = max(self.v_mean - 3.0 * self.sigma, 1e-9 * self.v_mean)
        hi = self.v_mean + 3.0 * self.sigma
        t, gw = np.polynomial.legendre.leggauss(n)
        v = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        w = gw * np.exp(-0.5 * ((v - self.v_mean) / self.sigma) ** 2)
        return v, w / w.sum()

    def with_mean(self, v_mean):
        if self.kind == "gaussian":
            return VelocityDistribution("gaussian", v_mean, self.fwhm_fraction)
        scale = v_mean / self.v_mean
        return VelocityDistribution("histogram", bins=tuple((v * scale, w) for v, w in self.bins))


@dataclass(frozen=True)
class DeflectorConfig:
    """Electrode geometry: shift = K chi U^2 / (m v^2), all SI, K in 1/m."""

    geometry_factor_K: float
    max_voltage: float = 15000.0
    field_homogeneity: float = 0.01
    geometry_factor_sigma: float = 0.0
    notes: tuple = ()

    def __post_init__(self):
        if not self.geometry_factor_K > 0:
            raise DomainError("geometry_factor_K must be > 0")
        if not self.max_voltage > 0:
            raise DomainError("max_voltage must be > 0")


@dataclass
class FringeScan:
    voltage: float
    positions: np.ndarray  # m
    counts: np.ndarray
    integration_time_per_point: float
    molecule_name: str
    seed: int
    is_reference: bool = False
    noiseless: bool = field(default=False, compare=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.counts = np.asarray(self.counts)
        if self.positions.shape != self.counts.shape or self.positions.ndim != 1:
            raise ConfigurationError("positions and counts must be 1-D arrays of equal length")
        if np.any(np.diff(self.positions) <= 0):
            raise ConfigurationError("scan positions must be strictly increasing")
        if np.any(self.counts < 0):
            raise ConfigurationError("counts must be non-negative")


class EffectiveFringe(NamedTuple):
    offset: float
    amplitude: float
    shift: float  # m, continuous in chi and U (not wrapped)


def scan_grid(start=0.0, step=26e-9, count=41):
    if not step > 0 or count < 1:
        raise ConfigurationError("scan grid needs step > 0 and count >= 1")
    return start + step * np.arange(count)


def stark_fringe_shift(chi, voltage, mass, velocity, deflector: DeflectorConfig):
    """Deflection-induced fringe shift in metres.

    ``chi`` in A^3 x 4 pi eps0, ``voltage`` in V, ``mass`` in amu, ``velocity`` in m/s.
    """
    velocity = np.asarray(velocity, dtype=float)
    if np.any(velocity <= 0) or not mass > 0:
        raise DomainError("mass and velocity must be positive")
    if abs(voltage) > deflector.max_voltage:
        raise DomainError(f"|U| = {abs(voltage)} V exceeds max_voltage {deflector.max_voltage} V")
    out = deflector.geometry_factor_K * a3_to_si(chi) * voltage**2 / (amu_to_kg(mass) * velocity**2)
    return float(out) if out.ndim == 0 else out


def wrap_shift(x, period):
    """Map lengths into (-period/2, period/2].

    Rounding to the nearest period is sign-symmetric, so wrap(-x) == -wrap(x)
    bit for bit away from the branch cut.
    """
    x = np.asarray(x, dtype=float)
    y = x - period * np.round(x / period)
    return np.where(y <= -period / 2.0, y + period, y)


def phasor_average(weights, amplitudes, shifts, period):
    """Modulus and continuous phase-shift of sum_i w_i A_i exp(2 pi i shift_i / d).

    The shift is the amplitude-weighted mean shift plus the wrapped deviation
    of the averaged phasor from it, which keeps it continuous in chi and U.
    """
    wa = weights * amplitudes
    norm = wa.sum()
    if norm <= 0:
        wa, norm = weights, weights.sum()
    mean_shift = float(np.dot(wa, shifts) / norm)
    z = np.dot(weights * amplitudes, np.exp(2j * np.pi * (shifts - mean_shift) / period))
    amplitude = float(abs(z))
    deviation = float(np.angle(z)) * period / (2.0 * np.pi) if amplitude > 0 else 0.0
    return amplitude, mean_shift + deviation


def _effective_at(molecule, gratings, deflector, vdist, voltage, n, chi=None):
    v, w = vdist.nodes(n)
    O, A = fringe_arrays(molecule, gratings, v)
    chi = molecule.chi_true if chi is None else chi
    shifts = stark_fringe_shift(chi, voltage, molecule.mass, v, deflector)
    amplitude, shift = phasor_average(w, A, np.atleast_1d(shifts), gratings.period_d)
    return EffectiveFringe(float(np.dot(w, O)), amplitude, shift)


def effective_fringe_parameters(molecule: MoleculeSpec, gratings: GratingSet,
                                deflector: DeflectorConfig, vdist: VelocityDistribution,
                                voltage, nodes=QUADRATURE_NODES, chi=None,
                                check=True) -> EffectiveFringe:
    """Noiseless first-harmonic (O, A, shift) of the velocity-averaged pattern.

    Quadrature error is estimated by doubling the node count; a relative
    discrepancy above 1e-4 of the offset raises :class:`QuadratureError`.
    """
    eff = _effective_at(molecule, gratings, deflector, vdist, voltage, nodes, chi)
    if check and vdist.kind == "gaussian":
        fine = _effective_at(molecule, gratings, deflector, vdist, voltage, 2 * nodes, chi)
        d = gratings.period_d
        z0 = eff.amplitude * np.exp(2j * np.pi * eff.shift / d)
        z1 = fine.amplitude * np.exp(2j * np.pi * fine.shift / d)
        err = max(abs(z1 - z0), abs(fine.offset - eff.offset)) / max(eff.offset, 1e-300)
        if err > QUADRATURE_TOL:
            raise QuadratureError(
                f"velocity quadrature with {nodes} nodes not converged at U={voltage} V "
                f"(relative error estimate {err:.2e})")
    return eff


def expected_counts(molecule, gratings, deflector, vdist, voltage, positions,
                    rate_scale, integration_time, detector_efficiency=1.0,
                    nodes=QUADRATURE_NODES):
    """Mean counts at each G3 position: the velocity integral of the single-velocity fringes."""
    if rate_scale <= 0 or integration_time <= 0:
        raise ConfigurationError("rate_scale and integration_time must be > 0")
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        raise ConfigurationError("scan grid is empty")
    d = gratings.period_d

    def rate(n):
        v, w = vdist.nodes(n)
        O, A = fringe_arrays(molecule, gratings, v)
        dx = np.atleast_1d(stark_fringe_shift(molecule.chi_true, voltage, molecule.mass, v, deflector))
        pattern = O[None, :] + A[None, :] * np.sin(2 * np.pi * (positions[:, None] - dx[None, :]) / d)
        return pattern @ w

    mu = rate(nodes)
    if vdist.kind == "gaussian":
        err = np.max(np.abs(rate(2 * nodes) - mu)) / np.max(np.abs(mu))
        if err > QUADRATURE_TOL:
            raise QuadratureError(f"velocity quadrature not converged at U={voltage} V ({err:.2e})")
    return np.clip(mu, 0.0, None) * rate_scale * integration_time * detector_efficiency


def stream_seed(master_seed, voltage_index, is_reference=False):
    """Independent integer seed per (voltage index, signal/reference) scan."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(voltage_index), int(bool(is_reference))))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def synthesize_scan(molecule: MoleculeSpec, gratings: GratingSet, deflector: DeflectorConfig,
                    vdist: VelocityDistribution, voltage, scan_grid, rate_scale,
                    integration_time, seed, noise=True, is_reference=False,
                    detector_efficiency=1.0, nodes=QUADRATURE_NODES) -> FringeScan:
    """One fringe scan at a fixed deflection voltage.

    With ``noise=False`` the counts are the (float) expected values.
    """
    mu = expected_counts(molecule, gratings, deflector, vdist, voltage, scan_grid,
                         rate_scale, integration_time, detector_efficiency, nodes)
    if noise:
        counts = np.random.default_rng(seed).poisson(mu)
    else:
        counts = mu
    return FringeScan(float(voltage), np.asarray(scan_grid, dtype=float), counts,
                      float(integration_time), molecule.name, int(seed),
                      bool(is_reference), noiseless=not noise)
