"""Command-line interface: ``kdtl simulate | fit | calibrate | report``.

Exit codes: 0 success, 2 validation, 3 I/O, 4 numerical failure.
Log verbosity follows the ``KDTL_LOG_LEVEL`` environment variable.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import itertools
import logging
import os
from pathlib import Path
import sys

from .beamline import stream_seed, synthesize_scan
from .config import ExperimentConfig, load_config
from .errors import ConfigurationError, DomainError, NumericalError
from .inference import (analyze_scan_pairs, calibrate_geometry_factor, reestimate,
                        systematic_sensitivity)
from .io import (read_histogram_csv, read_json, read_scan_csv, write_chi_table, write_json,
                 write_scan_csv)
from .vanvleck import consistency_interval, intervals_overlap, side_chain_budget

log = logging.getLogger("kdtl")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4
MANIFEST = "manifest.json"


def _load(config_path, seed=None, exclude=(), vdist_file=None) -> ExperimentConfig:
    bins = read_histogram_csv(vdist_file) if vdist_file else None
    return load_config(config_path, seed=seed, extra_exclusions=tuple(exclude), vdist_bins=bins)


def _scan_name(index, voltage, role):
    return f"scan_{index:03d}_{int(round(voltage)):05d}V_{role}.csv"


# -- simulate -----------------------------------------------------------------

def simulate(cfg: ExperimentConfig, out_dir, jobs=1):
    """Write a signal and a reference scan per voltage plus the manifest; return the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    positions = cfg.positions()
    noise = cfg.noise == "poisson"

    def one(task):
        index, voltage, is_ref = task
        seed = stream_seed(cfg.master_seed, index, is_ref)
        scan = synthesize_scan(cfg.molecule, cfg.gratings, cfg.deflector, cfg.vdist,
                               cfg.ref_voltage if is_ref else voltage, positions, cfg.rate_scale,
                               cfg.integration_time, seed, noise=noise, is_reference=is_ref,
                               detector_efficiency=cfg.detector_efficiency)
        name = _scan_name(index, voltage, "ref" if is_ref else "sig")
        write_scan_csv(out_dir / name, scan)
        return name, seed

    tasks = [(i, u, r) for i, u in enumerate(cfg.voltages) for r in (False, True)]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(one, tasks))  # map keeps task order
    entries = []
    for i, u in enumerate(cfg.voltages):
        (sig, sig_seed), (ref, ref_seed) = results[2 * i], results[2 * i + 1]
        entries.append({"voltage_index": i, "voltage_V": u, "signal_file": sig,
                         "reference_file": ref, "signal_seed": sig_seed, "reference_seed": ref_seed})
    manifest = {"format_version": 1, "config_sha256": cfg.sha256(), "master_seed": cfg.master_seed,
                "molecule": cfg.molecule.name, "ref_voltage_V": cfg.ref_voltage,
                "config": cfg.raw, "scans": entries}
    write_json(out_dir / MANIFEST, manifest, "manifest")
    log.info("wrote %d scans to %s", 2 * len(entries), out_dir)
    return manifest


# -- fit ----------------------------------------------------------------------

def load_scan_pairs(scan_dir, cfg: ExperimentConfig):
    scan_dir = Path(scan_dir)
    manifest = read_json(scan_dir / MANIFEST, "manifest")
    if manifest["config_sha256"] != cfg.sha256():
        log.warning("config hash differs from the one recorded in %s", scan_dir / MANIFEST)
    pairs = []
    for entry in manifest["scans"]:
        sig_path = scan_dir / entry["signal_file"]
        ref_path = scan_dir / entry["reference_file"]
        if not ref_path.exists():
            raise ConfigurationError(f"missing reference scan {ref_path.name} for U={entry['voltage_V']} V")
        if not sig_path.exists():
            raise ConfigurationError(f"missing signal scan {sig_path.name}")
        sig = read_scan_csv(sig_path, cfg.molecule.name, cfg.integration_time)
        ref = read_scan_csv(ref_path, cfg.molecule.name, cfg.integration_time)
        if not ref.is_reference:
            raise ConfigurationError(f"{ref_path.name} is not flagged as a reference scan")
        pairs.append((sig, ref))
    return manifest, pairs


def estimate_document(cfg: ExperimentConfig, analysis, sensitivity, mean_velocity_estimate):
    est = analysis.estimate
    mv = {e.voltage: e.chi for e in mean_velocity_estimate.per_voltage}
    rows = []
    for e, ds in zip(est.per_voltage, analysis.shifts):
        rows.append({"voltage_V": e.voltage, "chi_A3": e.chi, "sigma_stat_A3": e.sigma_stat,
                     "included": e.included, "ambiguous": e.ambiguous,
                     "visibility_ratio": e.visibility_ratio,
                     "delta_shift_nm": ds.delta * 1e9, "delta_shift_sigma_nm": ds.sigma * 1e9,
                     "chi_mean_velocity_A3": mv[e.voltage]})
    m = cfg.molecule
    notes = [f"statistical errors only; field homogeneity bound {cfg.deflector.field_homogeneity:g} "
             f"(fractional, on the deflection force)",
             f"temperature assumed for dipole term: {m.internal_temperature:g} K"]
    notes += [f"dlnchi/dln({k}) = {v:.4g}" for k, v in sensitivity.items() if k != "field_homogeneity_fraction"]
    if cfg.deflector.notes:
        notes += list(cfg.deflector.notes)
    return {
        "molecule": {"name": m.name, "mass_amu": m.mass, "alpha_stat_A3": m.alpha_stat,
                     "alpha_stat_sigma_A3": m.alpha_stat_sigma, "side_chains": m.side_chains,
                     "side_chain_range_A3": list(m.side_chain_range)},
        "config_sha256": cfg.sha256(),
        "ref_voltage_V": cfg.ref_voltage,
        "chi_method": cfg.chi_method,
        "per_voltage": rows,
        "weighted_mean_chi_A3": est.weighted_mean_chi,
        "weighted_mean_sigma_A3": est.weighted_mean_sigma,
        "mean_velocity_weighted_mean_chi_A3": mean_velocity_estimate.weighted_mean_chi,
        "systematic_notes": notes,
        "systematic_sensitivity": sensitivity,
        "warnings": list(est.warnings),
    }


def fit(cfg: ExperimentConfig, scan_dir, out_dir=None):
    """Run the inverse pipeline on a simulated (or measured) scan set; return the estimate document."""
    out_dir = Path(out_dir or scan_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, pairs = load_scan_pairs(scan_dir, cfg)
    kw = dict(molecule_mass=cfg.molecule.mass, vdist=cfg.vdist, deflector=cfg.deflector,
              period_d=cfg.gratings.period_d, molecule=cfg.molecule, gratings=cfg.gratings,
              exclusion=cfg.exclusion)
    analysis = analyze_scan_pairs(pairs, cfg.ref_voltage, method=cfg.chi_method,
                                  chi_max=cfg.chi_max, molecule_name=cfg.molecule.name, **kw)
    if cfg.chi_method == "mean_velocity":
        mean_velocity = analysis.estimate
    else:
        mean_velocity = reestimate(analysis, cfg.ref_voltage, method="mean_velocity", **kw)
    sensitivity = systematic_sensitivity(analysis, cfg.ref_voltage, cfg.molecule, cfg.gratings,
                                         cfg.vdist, cfg.deflector, cfg.exclusion, cfg.chi_method)
    doc = estimate_document(cfg, analysis, sensitivity, mean_velocity)
    write_json(out_dir / "estimate.json", doc, "estimate")
    write_chi_table(out_dir / "chi_table.csv", analysis.estimate)
    for w in doc["warnings"]:
        log.warning(w)
    return doc


# -- calibrate ----------------------------------------------------------------

def calibrate(cfg: ExperimentConfig, scan_dir, known_chi, out_dir=None):
    if not known_chi > 0:
        raise ConfigurationError(f"--known-chi must be > 0, got {known_chi}")
    out_dir = Path(out_dir or scan_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, pairs = load_scan_pairs(scan_dir, cfg)
    scans = [s for p in pairs for s in p]
    result = calibrate_geometry_factor(scans, known_chi, cfg.vdist, cfg.deflector, cfg.molecule.mass,
                                       cfg.ref_voltage, molecule=cfg.molecule, gratings=cfg.gratings,
                                       method=cfg.chi_method)
    red = result.chi_squared_reduced
    doc = {"geometry_factor_K_per_m": result.geometry_factor_K,
           "geometry_factor_sigma_per_m": result.geometry_factor_sigma,
           "chi_squared_reduced": None if red != red else red,
           "poor_fit": result.poor_fit, "known_chi_A3": known_chi,
           "reference_species": cfg.molecule.name,
           "max_voltage_V": cfg.deflector.max_voltage,
           "field_homogeneity": cfg.deflector.field_homogeneity,
           "per_voltage": [{"voltage_V": u, "K_per_m": k, "sigma_per_m": s} for u, k, s in result.per_voltage],
           "notes": list(result.deflector.notes)}
    write_json(out_dir / "deflector.json", doc, "calibration")
    return doc


# -- report -------------------------------------------------------------------

def report(estimate_paths, out_dir="."):
    if len(estimate_paths) < 2:
        raise ConfigurationError("report needs at least two estimate files")
    docs = [(str(p), read_json(p, "estimate")) for p in estimate_paths]
    estimates = [{"name": d["molecule"]["name"], "chi_A3": d["weighted_mean_chi_A3"],
                  "sigma_A3": d["weighted_mean_sigma_A3"], "source": p} for p, d in docs]
    pairwise = []
    for a, b in itertools.combinations(estimates, 2):
        diff = b["chi_A3"] - a["chi_A3"]
        combined = (a["sigma_A3"] ** 2 + b["sigma_A3"] ** 2) ** 0.5
        lo_a, hi_a = a["chi_A3"] - 3 * a["sigma_A3"], a["chi_A3"] + 3 * a["sigma_A3"]
        lo_b, hi_b = b["chi_A3"] - 3 * b["sigma_A3"], b["chi_A3"] + 3 * b["sigma_A3"]
        pairwise.append({"a": a["name"], "b": b["name"], "difference_A3": diff,
                         "separation_sigma": abs(diff) / combined if combined > 0 else 0.0,
                         "intervals_3sigma_disjoint": not intervals_overlap((lo_a, hi_a), (lo_b, hi_b))})
    vanvleck = []
    for _, d in docs:
        m = d["molecule"]
        thermal = consistency_interval(d["weighted_mean_chi_A3"], m["alpha_stat_A3"], m["alpha_stat_sigma_A3"])
        budget = side_chain_budget(m["side_chains"], *m["side_chain_range_A3"])
        vanvleck.append({"name": m["name"], "measured_chi_A3": d["weighted_mean_chi_A3"],
                         "alpha_stat_A3": m["alpha_stat_A3"], "alpha_stat_sigma_A3": m["alpha_stat_sigma_A3"],
                         "thermal_interval_A3": list(thermal), "side_chain_budget_A3": list(budget),
                         "status": "consistent" if intervals_overlap(thermal, budget) else "inconsistent"})
    doc = {"estimates": estimates, "pairwise": pairwise, "van_vleck": vanvleck,
           "systematic_sensitivity": {d["molecule"]["name"]: d["systematic_sensitivity"] for _, d in docs}}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "report.json", doc, "report")
    return doc


# -- entry point --------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="kdtl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="experiment config JSON")
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--seed", type=int, default=None, help="override master_seed")
        sp.add_argument("--exclude-voltage", type=float, action="append", default=[],
                        metavar="VOLTS", help="drop this voltage from the weighted mean (repeatable)")
        sp.add_argument("--vdist-file", default=None,
                        help="histogram CSV velocity_m_per_s,weight replacing the config distribution")

    s = sub.add_parser("simulate", help="synthesize scans and a manifest")
    common(s)
    s.add_argument("--jobs", type=int, default=1)
    f = sub.add_parser("fit", help="extract chi per voltage and the weighted mean")
    f.add_argument("scan_dir")
    common(f)
    c = sub.add_parser("calibrate", help="fit the deflector geometry factor on a reference species")
    c.add_argument("scan_dir")
    c.add_argument("--known-chi", type=float, required=True, help="reference susceptibility, A^3")
    common(c)
    r = sub.add_parser("report", help="compare two or more estimates")
    r.add_argument("estimates", nargs="+")
    r.add_argument("--out-dir", default=".")
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("KDTL_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            report(args.estimates, args.out_dir)
            return EXIT_OK
        cfg = _load(args.config, args.seed, args.exclude_voltage, args.vdist_file)
        if args.command == "simulate":
            simulate(cfg, args.out_dir or "scans", args.jobs)
        elif args.command == "fit":
            doc = fit(cfg, args.scan_dir, args.out_dir)
            print(f"{doc['molecule']['name']}: chi = {doc['weighted_mean_chi_A3']:.3f} "
                  f"+/- {doc['weighted_mean_sigma_A3']:.3f} A^3 x 4 pi eps0")
        elif args.command == "calibrate":
            doc = calibrate(cfg, args.scan_dir, args.known_chi, args.out_dir)
            print(f"K = {doc['geometry_factor_K_per_m']:.6g} +/- {doc['geometry_factor_sigma_per_m']:.2g} 1/m")
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
