"""Experiment configuration: JSON with unit-suffixed keys, validated against a schema."""

from dataclasses import dataclass, field
import copy
import hashlib
import json
from importlib import resources
from pathlib import Path

import jsonschema

from .beamline import DeflectorConfig, VelocityDistribution
from .core import MoleculeSpec
from .errors import ConfigurationError, KDTLError
from .fringe import GratingSet
from .inference import ExclusionRule


def load_schema(name):
    text = resources.files("kdtl.schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_document(doc, schema_name):
    """Raise ConfigurationError naming the offending field."""
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigurationError(f"{schema_name}: {where}: {e.message}")


@dataclass
class ExperimentConfig:
    molecule: MoleculeSpec
    gratings: GratingSet
    deflector: DeflectorConfig
    vdist: VelocityDistribution
    voltages: list
    ref_voltage: float
    scan_start_nm: float = 0.0
    scan_step_nm: float = 26.0
    scan_count: int = 41
    rate_scale: float = 1000.0
    integration_time: float = 1.0
    master_seed: int = 0
    detector_efficiency: float = 1.0
    noise: str = "poisson"
    exclusion: ExclusionRule = ExclusionRule()
    chi_method: str = "averaged"
    chi_max: float = 1e4
    raw: dict = field(default_factory=dict, repr=False)

    def positions(self):
        """G3 offsets in metres; computed from the nm grid so CSV round trips are exact."""
        return [(self.scan_start_nm + self.scan_step_nm * i) * 1e-9 for i in range(self.scan_count)]

    def sha256(self):
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _molecule(m):
    return MoleculeSpec(
        name=m["name"], mass=m["mass_amu"], alpha_stat=m["alpha_stat_A3"],
        alpha_opt=m.get("alpha_opt_A3", m["alpha_stat_A3"]), chi_true=m["chi_true_A3"],
        dipole_model=tuple((d["dipole_debye"], d["multiplicity"]) for d in m.get("dipole_model", [])),
        internal_temperature=m.get("internal_temperature_K", 458.0),
        alpha_stat_sigma=m.get("alpha_stat_sigma_A3", 0.0),
        side_chains=m.get("side_chains", 0),
        side_chain_range=tuple(m.get("side_chain_range_A3", (10.0, 15.0))),
    )


def _gratings(g):
    return GratingSet(
        period_d=g["period_d_nm"] * 1e-9,
        open_fraction_g1=g["open_fraction_g1"],
        open_fraction_g3=g["open_fraction_g3"],
        spacing_L=g["spacing_L_mm"] * 1e-3,
        laser_wavelength=g["laser_wavelength_nm"] * 1e-9,
        laser_power=g["laser_power_W"],
        laser_waist=g["laser_waist_um"] * 1e-6,
    )


def _vdist(v, base_dir, bins=None):
    from .io import read_histogram_csv

    if bins is None and v["kind"] == "histogram":
        if "bins" in v:
            bins = [tuple(b) for b in v["bins"]]
        elif "histogram_file" in v:
            bins = read_histogram_csv(Path(base_dir) / v["histogram_file"])
        else:
            raise ConfigurationError("velocity: histogram kind needs 'bins' or 'histogram_file'")
    if bins is not None:
        return VelocityDistribution("histogram", bins=tuple(bins))
    return VelocityDistribution("gaussian", v["v_mean_m_per_s"], v["fwhm_fraction"])


def config_from_dict(doc, base_dir=".", seed=None, extra_exclusions=(), vdist_bins=None):
    """Validate and build an :class:`ExperimentConfig`.

    ``seed``, ``extra_exclusions`` and ``vdist_bins`` are command-line overrides.
    """
    doc = copy.deepcopy(doc)
    validate_document(doc, "config")
    if seed is not None:
        doc["master_seed"] = int(seed)
    analysis = doc.get("analysis", {})
    if extra_exclusions:
        analysis = dict(analysis)
        analysis["exclude_voltages_V"] = list(analysis.get("exclude_voltages_V", [])) + list(extra_exclusions)
        doc["analysis"] = analysis
    if vdist_bins is not None:
        doc["velocity"] = {"kind": "histogram", "bins": [list(b) for b in vdist_bins]}
    section = "molecule"
    try:
        molecule = _molecule(doc["molecule"])
        section = "gratings"
        gratings = _gratings(doc["gratings"])
        section = "deflector"
        d = doc["deflector"]
        deflector = DeflectorConfig(d["geometry_factor_K_per_m"], d["max_voltage_V"],
                                    d.get("field_homogeneity", 0.01))
        section = "velocity"
        vdist = _vdist(doc["velocity"], base_dir)
        if vdist.kind == "histogram":
            # embed the bins so the manifest copy is self-contained
            doc["velocity"] = {"kind": "histogram", "bins": [list(b) for b in vdist.bins]}
    except KDTLError as exc:
        raise ConfigurationError(f"config: {section}: {exc}") from exc
    voltages = [float(u) for u in doc["voltages_V"]]
    for i, u in enumerate(voltages):
        if abs(u) > deflector.max_voltage:
            raise ConfigurationError(
                f"config: voltages_V.{i}: {u} V exceeds deflector.max_voltage_V {deflector.max_voltage}")
    ref = float(doc["ref_voltage_V"])
    if abs(ref) > deflector.max_voltage:
        raise ConfigurationError("config: ref_voltage_V exceeds deflector.max_voltage_V")
    scan = doc["scan"]
    threshold = analysis.get("visibility_ratio_threshold")
    exclusion = ExclusionRule(tuple(float(u) for u in analysis.get("exclude_voltages_V", [])), threshold)
    return ExperimentConfig(
        molecule=molecule, gratings=gratings, deflector=deflector, vdist=vdist,
        voltages=voltages, ref_voltage=ref,
        scan_start_nm=scan.get("start_nm", 0.0), scan_step_nm=scan["step_nm"], scan_count=scan["count"],
        rate_scale=doc["rate_scale_counts_per_s"], integration_time=doc["integration_time_s"],
        master_seed=doc["master_seed"], detector_efficiency=doc.get("detector_efficiency", 1.0),
        noise=doc.get("noise", "poisson"), exclusion=exclusion,
        chi_method=analysis.get("chi_method", "averaged"), chi_max=analysis.get("chi_max_A3", 1e4),
        raw=doc,
    )


def load_config(path, **overrides):
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    return config_from_dict(doc, base_dir=path.parent, **overrides)
