"""Inverse pipeline: sinusoid fits, differential fringe shifts, chi per voltage,
geometry-factor calibration and the inverse-variance weighted mean.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy.optimize import brentq
from scipy.stats import chi2 as chi2_dist

from .beamline import (QUADRATURE_NODES, DeflectorConfig, FringeScan, VelocityDistribution,
                       effective_fringe_parameters, phasor_average, stark_fringe_shift,
                       wrap_shift)
from .core import MoleculeSpec
from .errors import (AggregationError, CalibrationError, DomainError, ExtractionError,
                     FitError)
from .fringe import GratingSet, fringe_arrays

CHI_MAX = 1e4
CHI_RTOL = 1e-10


# -- fringe fitting ----------------------------------------------------------

@dataclass
class FringeFit:
    offset_O: float
    amplitude_A: float
    phase_shift_dx3: float  # m, in (-d/2, d/2]
    visibility_V: float
    covariance: np.ndarray  # over (O, A, dx3)
    chi_squared_reduced: float
    period_d: float
    voltage: float = 0.0
    low_contrast: bool = False

    @property
    def sigma_O(self):
        return math.sqrt(self.covariance[0, 0])

    @property
    def sigma_A(self):
        return math.sqrt(self.covariance[1, 1])

    @property
    def sigma_shift(self):
        return math.sqrt(self.covariance[2, 2])


def fit_sinusoid(scan: FringeScan, period_d) -> FringeFit:
    """Poisson-weighted linear least squares for O + A sin(2 pi (x - dx3) / d).

    The period is held at the grating constant, which makes the problem linear
    in (O, a, b) with S = O + a sin(kx) + b cos(kx).  Per-point variance is
    max(counts, 1).
    """
    x = np.asarray(scan.positions, dtype=float)
    y = np.asarray(scan.counts, dtype=float)
    n = x.size
    if n < 6:
        raise FitError(f"need at least 6 scan points, got {n}")
    if (x[-1] - x[0]) * n / (n - 1) < period_d * (1 - 1e-9):
        raise FitError("scan must span at least one full fringe period")
    k = 2.0 * np.pi / period_d
    X = np.column_stack([np.ones(n), np.sin(k * x), np.cos(k * x)])
    var = np.maximum(y, 1.0)
    sw = 1.0 / np.sqrt(var)
    Xw = X * sw[:, None]
    if np.linalg.matrix_rank(Xw) < 3:
        raise FitError("degenerate scan grid: sin/cos columns are not independent")
    beta, *_ = np.linalg.lstsq(Xw, y * sw, rcond=None)
    cov_lin = np.linalg.inv(Xw.T @ Xw)
    resid = (y - X @ beta) * sw
    chi2_red = float(resid @ resid / (n - 3))

    O, a, b = beta
    A = math.hypot(a, b)
    # a = A cos(theta), b = -A sin(theta), theta = 2 pi dx3 / d
    theta = math.atan2(-b, a)
    dx3 = float(wrap_shift(theta / k, period_d))
    J = np.zeros((3, 3))
    J[0, 0] = 1.0
    if A > 0:
        J[1, 1:] = (a / A, b / A)
        J[2, 1:] = (b / A**2 / k, -a / A**2 / k)
        cov = J @ cov_lin @ J.T
    else:
        J[1, 1:] = (1.0, 0.0)
        cov = J @ cov_lin @ J.T
        cov[2, :] = cov[:, 2] = 0.0
        cov[2, 2] = period_d**2 / 12.0
    cov = 0.5 * (cov + cov.T)
    sigma_A = math.sqrt(cov[1, 1])
    return FringeFit(float(O), A, dx3, A / O if O > 0 else 0.0, cov, chi2_red, period_d,
                     voltage=scan.voltage, low_contrast=bool(A < sigma_A))


# -- differential shifts and unwrapping --------------------------------------

@dataclass(frozen=True)
class DifferentialShift:
    delta: float  # m
    sigma: float  # m
    ambiguous: bool = False
    candidates: tuple = ()


def differential_shift(fit_U: FringeFit, fit_ref: FringeFit, predicted=None,
                       predicted_sigma=0.0) -> DifferentialShift:
    """Fringe shift at U relative to the reference scan.

    Without a prediction the wrapped difference in (-d/2, d/2] is returned.
    With one, the branch closest to it is chosen; when the runner-up branch is
    closer to the prediction than one combined standard deviation beyond the
    winner, the result is flagged ambiguous and carries both candidates.
    """
    if not math.isclose(fit_U.period_d, fit_ref.period_d, rel_tol=1e-12):
        raise DomainError("fits were made with different periods")
    d = fit_U.period_d
    sigma = math.hypot(fit_U.sigma_shift, fit_ref.sigma_shift)
    wrapped = float(wrap_shift(fit_U.phase_shift_dx3 - fit_ref.phase_shift_dx3, d))
    if predicted is None:
        return DifferentialShift(wrapped, sigma)
    best = wrapped + d * round((predicted - wrapped) / d)
    second = best + d if predicted > best else best - d
    total = math.hypot(sigma, predicted_sigma)
    if abs(second - predicted) - abs(best - predicted) < total:
        return DifferentialShift(best, sigma, True, (best, second))
    return DifferentialShift(best, sigma)


def unwrap_staircase(fits, ref_fits, ref_voltage, predict=None):
    """Unwrap differential shifts across a voltage staircase.

    Voltages are visited in order of |U^2 - U_ref^2|.  The first step is taken
    on the principal branch (its shift must be below d/2); afterwards each
    prediction comes from ``predict(U)`` -> (shift, sigma) if given, otherwise
    from a weighted U^2 fit through the origin of the steps already unwrapped.
    Returns DifferentialShift objects in the input order.
    """
    lever = [f.voltage**2 - ref_voltage**2 for f in fits]
    order = sorted(range(len(fits)), key=lambda i: abs(lever[i]))
    out = [None] * len(fits)
    sxx = sxy = 0.0
    for i in order:
        x = lever[i]
        if predict is not None:
            pred, pred_sigma = predict(fits[i].voltage)
        elif sxx > 0:
            c = sxy / sxx
            pred, pred_sigma = c * x, abs(x) / math.sqrt(sxx)
        else:
            pred, pred_sigma = None, 0.0
        ds = differential_shift(fits[i], ref_fits[i], pred, pred_sigma)
        out[i] = ds
        if x != 0 and not ds.ambiguous:
            w = 1.0 / ds.sigma**2
            sxx += w * x * x
            sxy += w * x * ds.delta
    return out


# -- chi extraction ----------------------------------------------------------

class ShiftModel:
    """Velocity-averaged fringe shift as a function of (chi, U).

    ``method="averaged"`` takes the phase of the averaged phasor
    sum_v p(v) A(v) exp(2 pi i dx3(v) / d); the amplitude weights A(v) come from
    the fringe model when a molecule and grating set are supplied, otherwise
    they are flat.  ``method="mean_velocity"`` evaluates the shift at v_mean only.
    """

    def __init__(self, mass, vdist: VelocityDistribution, deflector: DeflectorConfig,
                 period_d, molecule: MoleculeSpec = None, gratings: GratingSet = None,
                 method="averaged", nodes=QUADRATURE_NODES):
        if method not in ("averaged", "mean_velocity"):
            raise DomainError(f"unknown chi method {method!r}")
        self.mass = mass
        self.vdist = vdist
        self.deflector = deflector
        self.period_d = period_d
        self.method = method
        self.molecule = molecule
        self.gratings = gratings
        self.nodes = nodes
        self.v, self.w = vdist.nodes(nodes)
        if molecule is not None and gratings is not None:
            _, self.amplitude = fringe_arrays(molecule, gratings, self.v)
        else:
            self.amplitude = np.ones_like(self.v)

    def shift(self, chi, voltage):
        if self.method == "mean_velocity":
            return stark_fringe_shift(chi, voltage, self.mass, self.vdist.v_mean, self.deflector)
        shifts = np.atleast_1d(stark_fringe_shift(chi, voltage, self.mass, self.v, self.deflector))
        return phasor_average(self.w, self.amplitude, shifts, self.period_d)[1]

    def delta(self, chi, voltage, ref_voltage):
        return self.shift(chi, voltage) - self.shift(chi, ref_voltage)

    def check_quadrature(self, chi, voltage):
        if self.method != "averaged" or self.molecule is None or self.gratings is None:
            return
        mol = replace(self.molecule, mass=self.mass)
        effective_fringe_parameters(mol, self.gratings, self.deflector, self.vdist, voltage,
                                    nodes=self.nodes, chi=chi)


@dataclass(frozen=True)
class ChiExtraction:
    chi: float
    sigma_stat: float
    candidates: tuple = ()  # ((chi, sigma), ...) when the unwrap was ambiguous

    @property
    def ambiguous(self):
        return bool(self.candidates)


def _solve_chi(model: ShiftModel, target, voltage, ref_voltage, chi_max):
    g = lambda chi: model.delta(chi, voltage, ref_voltage) - target
    probe = 100.0
    slope = model.delta(probe, voltage, ref_voltage) / probe
    if slope == 0:
        raise ExtractionError(f"no chi sensitivity at U={voltage} V")
    centre = target / slope
    half = 0.55 * model.period_d / abs(slope) + 1e-6 * abs(centre) + 1e-9
    lo, hi = max(centre - half, -chi_max), min(centre + half, chi_max)
    if lo >= hi:
        raise ExtractionError(f"no chi root within +/-{chi_max} at U={voltage} V")
    grid = np.linspace(lo, hi, 33)
    vals = np.array([g(c) for c in grid])
    if np.any(vals == 0):
        return float(grid[np.flatnonzero(vals == 0)[0]])
    sign_change = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if sign_change.size == 0:
        raise ExtractionError(
            f"no chi root in [{lo:.4g}, {hi:.4g}] for shift {target:.4e} m at U={voltage} V")
    # choose the bracket nearest the linear estimate
    j = sign_change[np.argmin(np.abs(grid[sign_change] - centre))]
    return float(brentq(g, grid[j], grid[j + 1], xtol=1e-12, rtol=CHI_RTOL, maxiter=200))


def extract_chi_at_voltage(delta_shift, voltage, ref_voltage, molecule_mass,
                           vdist: VelocityDistribution, deflector: DeflectorConfig, *,
                           sigma=None, period_d=266e-9, molecule=None, gratings=None,
                           method="averaged", chi_max=CHI_MAX, model=None) -> ChiExtraction:
    """Single-parameter chi such that the modelled differential shift matches.

    ``delta_shift`` is a :class:`DifferentialShift` or a length in metres (then
    ``sigma`` gives its uncertainty).  The statistical error follows from the
    local slope d(shift)/d(chi).
    """
    if voltage**2 == ref_voltage**2:
        raise DomainError("voltage must differ from the reference voltage")
    if isinstance(delta_shift, DifferentialShift):
        ds = delta_shift
    else:
        ds = DifferentialShift(float(delta_shift), float(sigma if sigma is not None else 0.0))
    if model is None:
        period_d = gratings.period_d if gratings is not None else period_d
        model = ShiftModel(molecule_mass, vdist, deflector, period_d, molecule, gratings, method)

    def one(target):
        chi = _solve_chi(model, target, voltage, ref_voltage, chi_max)
        h = 1e-4 * max(abs(chi), 1.0)
        slope = (model.delta(chi + h, voltage, ref_voltage)
                 - model.delta(chi - h, voltage, ref_voltage)) / (2 * h)
        return chi, ds.sigma / abs(slope)

    if ds.ambiguous:
        cands = tuple(one(c) for c in ds.candidates)
        return ChiExtraction(cands[0][0], cands[0][1], cands)
    chi, sig = one(ds.delta)
    model.check_quadrature(chi, voltage)
    return ChiExtraction(chi, sig)


# -- aggregation ------------------------------------------------------------

@dataclass(frozen=True)
class ExclusionRule:
    """Drop explicit voltages and/or points whose visibility fell below
    ``visibility_ratio_threshold`` times the reference visibility (0.3 is a sensible choice)."""

    voltages: tuple = ()
    visibility_ratio_threshold: float = None

    def excludes(self, entry) -> bool:
        if any(math.isclose(entry.voltage, u, rel_tol=1e-9, abs_tol=1e-6) for u in self.voltages):
            return True
        if self.visibility_ratio_threshold is not None and entry.visibility_ratio is not None:
            return entry.visibility_ratio < self.visibility_ratio_threshold
        return False


@dataclass(frozen=True)
class PerVoltageChi:
    voltage: float
    chi: float
    sigma_stat: float
    included: bool = True
    visibility_ratio: float = None
    ambiguous: bool = False


@dataclass
class SusceptibilityEstimate:
    per_voltage: list
    weighted_mean_chi: float
    weighted_mean_sigma: float
    systematic_notes: list = field(default_factory=list)
    molecule_name: str = ""
    warnings: list = field(default_factory=list)


def weighted_mean(values, sigmas):
    values = np.asarray(values, dtype=float)
    w = 1.0 / np.asarray(sigmas, dtype=float) ** 2
    return float(np.dot(w, values) / w.sum()), float(1.0 / math.sqrt(w.sum()))


def aggregate_weighted_mean(per_voltage, exclusion: ExclusionRule = ExclusionRule(),
                            molecule_name="") -> SusceptibilityEstimate:
    entries = []
    for e in per_voltage:
        if not e.sigma_stat > 0:
            raise AggregationError(f"sigma_stat must be > 0 (U={e.voltage} V)")
        entries.append(replace(e, included=e.included and not exclusion.excludes(e)))
    kept = [e for e in entries if e.included]
    if not kept:
        raise AggregationError("no entries left after exclusion")
    mean, sigma = weighted_mean([e.chi for e in kept], [e.sigma_stat for e in kept])
    return SusceptibilityEstimate(entries, mean, sigma, molecule_name=molecule_name)


# -- full per-run analysis ---------------------------------------------------

@dataclass
class ScanAnalysis:
    estimate: SusceptibilityEstimate
    fits: list
    ref_fits: list
    shifts: list


def analyze_scan_pairs(pairs, ref_voltage, molecule_mass, vdist, deflector, period_d,
                       molecule=None, gratings=None, exclusion=ExclusionRule(),
                       method="averaged", chi_max=CHI_MAX, molecule_name=""):
    """Fit -> differential shift (staircase-unwrapped) -> chi per voltage -> weighted mean.

    ``pairs`` is a sequence of (signal scan, reference scan).  Pairs taken at
    the reference voltage itself carry no chi information and are skipped.
    """
    pairs = [p for p in pairs if p[0].voltage**2 != ref_voltage**2]
    if not pairs:
        raise AggregationError("no scans away from the reference voltage")
    fits = [fit_sinusoid(s, period_d) for s, _ in pairs]
    ref_fits = [fit_sinusoid(r, period_d) for _, r in pairs]
    shifts = unwrap_staircase(fits, ref_fits, ref_voltage)
    model = ShiftModel(molecule_mass, vdist, deflector, period_d, molecule, gratings, method)
    entries, warnings = [], []
    for fit, ref_fit, ds in zip(fits, ref_fits, shifts):
        ext = extract_chi_at_voltage(ds, fit.voltage, ref_voltage, molecule_mass, vdist,
                                     deflector, model=model, chi_max=chi_max)
        ratio = fit.visibility_V / ref_fit.visibility_V if ref_fit.visibility_V > 0 else None
        if ext.ambiguous:
            warnings.append(f"ambiguous phase unwrap at U={fit.voltage:g} V; candidates chi="
                            + ", ".join(f"{c:.4g}" for c, _ in ext.candidates))
        if fit.low_contrast:
            warnings.append(f"low contrast fit at U={fit.voltage:g} V")
        entries.append(PerVoltageChi(fit.voltage, ext.chi, ext.sigma_stat,
                                     visibility_ratio=ratio, ambiguous=ext.ambiguous))
    estimate = aggregate_weighted_mean(entries, exclusion, molecule_name)
    estimate.warnings.extend(warnings)
    return ScanAnalysis(estimate, fits, ref_fits, shifts)


def reestimate(analysis: ScanAnalysis, ref_voltage, molecule_mass, vdist, deflector,
               period_d, molecule=None, gratings=None, exclusion=ExclusionRule(),
               method="averaged"):
    """Weighted-mean chi from already unwrapped shifts under a different model."""
    model = ShiftModel(molecule_mass, vdist, deflector, period_d, molecule, gratings, method)
    entries = []
    for fit, ref_fit, ds in zip(analysis.fits, analysis.ref_fits, analysis.shifts):
        ext = extract_chi_at_voltage(ds, fit.voltage, ref_voltage, molecule_mass, vdist,
                                     deflector, model=model)
        ratio = fit.visibility_V / ref_fit.visibility_V if ref_fit.visibility_V > 0 else None
        entries.append(PerVoltageChi(fit.voltage, ext.chi, ext.sigma_stat, visibility_ratio=ratio))
    return aggregate_weighted_mean(entries, exclusion)


def systematic_sensitivity(analysis: ScanAnalysis, ref_voltage, molecule, gratings, vdist,
                           deflector, exclusion=ExclusionRule(), method="averaged",
                           step=0.01):
    """d ln(chi) / d ln(p) for p in (v_mean, laser power, laser waist), by central differences.

    The field homogeneity enters as a fractional bound on the force and hence on chi.
    """
    base = dict(molecule_mass=molecule.mass, vdist=vdist, deflector=deflector,
                period_d=gratings.period_d, molecule=molecule, gratings=gratings,
                exclusion=exclusion, method=method)
    variants = {
        "v_mean": lambda s: dict(base, vdist=vdist.with_mean(vdist.v_mean * s)),
        "laser_power": lambda s: dict(base, gratings=replace(gratings, laser_power=gratings.laser_power * s)),
        "laser_waist": lambda s: dict(base, gratings=replace(gratings, laser_waist=gratings.laser_waist * s)),
    }
    table = {}
    for name, make in variants.items():
        up = reestimate(analysis, ref_voltage, **make(1 + step)).weighted_mean_chi
        down = reestimate(analysis, ref_voltage, **make(1 - step)).weighted_mean_chi
        table[name] = (math.log(up) - math.log(down)) / (math.log(1 + step) - math.log(1 - step))
    table["field_homogeneity_fraction"] = deflector.field_homogeneity
    return table


# -- geometry factor calibration ---------------------------------------------

def pair_scans(scans):
    """Pair signal and reference scans in order of appearance; one shared reference is reused."""
    signals = [s for s in scans if not s.is_reference]
    refs = [s for s in scans if s.is_reference]
    if not refs:
        raise CalibrationError("no reference scan supplied")
    if len(refs) == 1:
        refs = refs * len(signals)
    if len(refs) != len(signals):
        raise CalibrationError(f"{len(signals)} signal scans but {len(refs)} reference scans")
    return list(zip(signals, refs))


@dataclass
class CalibrationResult:
    deflector: DeflectorConfig
    geometry_factor_K: float
    geometry_factor_sigma: float
    chi_squared_reduced: float  # nan with a single voltage pair
    per_voltage: list  # (U, K_i, sigma_i)
    poor_fit: bool


def calibrate_geometry_factor(scans, known_chi, vdist, deflector_template: DeflectorConfig,
                              molecule_mass, ref_voltage, period_d=266e-9, molecule=None,
                              gratings=None, method="averaged") -> CalibrationResult:
    """Weighted least-squares geometry factor from scans of a reference species.

    The fringe shift depends on K only through K chi, so each voltage gives
    K_i = K_template chi_i / known_chi with chi_i extracted under the template.
    """
    if not known_chi > 0:
        raise CalibrationError("known_chi must be > 0")
    voltages = {round(s.voltage, 6) for s in scans}
    if len(voltages) < 2:
        raise CalibrationError("calibration needs scans at two or more distinct voltages")
    if gratings is not None:
        period_d = gratings.period_d
    pairs = [p for p in pair_scans(scans) if p[0].voltage**2 != ref_voltage**2]
    if not pairs:
        raise CalibrationError("no signal scans away from the reference voltage")
    if molecule is not None:
        molecule = replace(molecule, chi_true=known_chi, dipole_model=())
    fits = [fit_sinusoid(s, period_d) for s, _ in pairs]
    ref_fits = [fit_sinusoid(r, period_d) for _, r in pairs]
    shifts = unwrap_staircase(fits, ref_fits, ref_voltage)
    K0 = deflector_template.geometry_factor_K
    model = ShiftModel(molecule_mass, vdist, deflector_template, period_d, molecule, gratings, method)
    rows = []
    for fit, ds in zip(fits, shifts):
        ext = extract_chi_at_voltage(ds, fit.voltage, ref_voltage, molecule_mass, vdist,
                                     deflector_template, model=model)
        rows.append((fit.voltage, K0 * ext.chi / known_chi, K0 * ext.sigma_stat / known_chi))
    K, sigma_K = weighted_mean([r[1] for r in rows], [r[2] for r in rows])
    notes = [f"geometry_factor_sigma={sigma_K:.6e}"]
    if len(rows) > 1:
        chi2 = sum(((k - K) / s) ** 2 for _, k, s in rows)
        red = chi2 / (len(rows) - 1)
        poor = bool(chi2_dist.sf(chi2, len(rows) - 1) < 1e-3)
        notes.append(f"chi_squared_reduced={red:.4g}")
    else:
        red, poor = float("nan"), False
        notes.append("chi_squared_reduced=undefined (single voltage pair)")
    if poor:
        notes.append("poor_fit: per-voltage geometry factors are mutually inconsistent")
    deflector = replace(deflector_template, geometry_factor_K=K, geometry_factor_sigma=sigma_K,
                        notes=tuple(notes))
    return CalibrationResult(deflector, K, sigma_K, red, rows, poor)
