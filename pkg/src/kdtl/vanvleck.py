"""Total susceptibility as electronic polarizability plus the thermal dipole term <d^2>/(3 kB T)."""

from dataclasses import dataclass

import numpy as np

from .constants import KB, debye_to_si, si_to_a3, si_to_debye, a3_to_si
from .errors import DomainError


@dataclass(frozen=True)
class DipoleEnsemble:
    """Dipole magnitudes (debye) with statistical weights, at temperature T (K)."""

    samples: tuple = ()
    temperature: float = 458.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise DomainError(f"temperature must be > 0, got {self.temperature}")
        samples = tuple((float(d), float(w)) for d, w in self.samples)
        if any(w < 0 for _, w in samples):
            raise DomainError("weights must be >= 0")
        total = sum(w for _, w in samples)
        if samples and total <= 0:
            raise DomainError("weights must not all vanish")
        if samples:
            samples = tuple((d, w / total) for d, w in samples)
        object.__setattr__(self, "samples", samples)

    @property
    def mean_square_dipole(self) -> float:
        """<d^2> in debye^2."""
        return sum(w * d * d for d, w in self.samples)

    @classmethod
    def from_dipole_model(cls, dipole_model, temperature):
        """Independent dipoles add in quadrature: <d^2> = sum multiplicity * d^2."""
        total = sum(n * d * d for d, n in dipole_model)
        return cls(((np.sqrt(total), 1.0),) if dipole_model else (), temperature)


def dipole_term(mean_square_debye, temperature):
    """<d^2> / (3 kB T) in A^3 x 4 pi eps0."""
    if not temperature > 0:
        raise DomainError(f"temperature must be > 0, got {temperature}")
    return si_to_a3(debye_to_si(1.0) ** 2 * mean_square_debye / (3.0 * KB * temperature))


def chi_total(alpha_stat, ensemble: DipoleEnsemble):
    if alpha_stat < 0:
        raise DomainError("alpha_stat must be >= 0")
    return alpha_stat + dipole_term(ensemble.mean_square_dipole, ensemble.temperature)


def rms_dipole_for_term(term, temperature):
    """Inverse of :func:`dipole_term`: the rms dipole (debye) giving ``term`` A^3."""
    if term < 0 or not temperature > 0:
        raise DomainError("term must be >= 0 and temperature > 0")
    return si_to_debye(np.sqrt(a3_to_si(term) * 3.0 * KB * temperature))


def side_chain_budget(chain_count, per_chain_low, per_chain_high):
    if chain_count < 0 or per_chain_low < 0 or per_chain_high < per_chain_low:
        raise DomainError("need chain_count >= 0 and 0 <= low <= high")
    return chain_count * per_chain_low, chain_count * per_chain_high


def consistency_interval(measured_chi, alpha_stat, alpha_sigma):
    """Range of the thermal contribution implied by a measured chi and a computed alpha +/- sigma."""
    return measured_chi - (alpha_stat + alpha_sigma), measured_chi - (alpha_stat - alpha_sigma)


def intervals_overlap(a, b):
    return a[0] <= b[1] and b[0] <= a[1]
