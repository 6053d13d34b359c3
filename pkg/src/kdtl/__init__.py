"""Forward simulation and susceptibility inference for Kapitza-Dirac-Talbot-Lau deflectometry."""

from .beamline import (DeflectorConfig, FringeScan, VelocityDistribution,
                       effective_fringe_parameters, stark_fringe_shift, synthesize_scan)
from .core import MoleculeSpec, de_broglie_wavelength, talbot_length
from .fringe import (FringeCoefficients, GratingSet, analytic_fringe,
                     binary_grating_fourier_coefficient, phase_grating_modulation)
from .inference import (ExclusionRule, FringeFit, SusceptibilityEstimate, aggregate_weighted_mean,
                        calibrate_geometry_factor, differential_shift, extract_chi_at_voltage,
                        fit_sinusoid)
from .oracle import numerical_oracle_fringe
from .vanvleck import DipoleEnsemble, chi_total, side_chain_budget

__version__ = "0.1.0"
