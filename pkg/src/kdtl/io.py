"""Scan CSV, velocity-histogram CSV, and JSON emission."""

import csv
import json
from pathlib import Path

import numpy as np

from .beamline import FringeScan
from .config import validate_document
from .errors import ConfigurationError

SCAN_COLUMNS = ("position_nm", "counts", "voltage_V", "is_reference", "seed")
HISTOGRAM_COLUMNS = ("velocity_m_per_s", "weight")


def _num(x):
    return format(float(x), ".17g")


def _count(c):
    # Poisson counts are integers; noiseless expected values keep full float precision
    if isinstance(c, (int, np.integer)):
        return str(int(c))
    return repr(float(c))


def write_scan_csv(path, scan: FringeScan):
    """``position_nm,counts,voltage_V,is_reference,seed``; LF line endings, ASCII.

    Positions are written in nm to 12 significant digits, which is exact for
    grids built as ``nm * 1e-9``.
    """
    lines = [",".join(SCAN_COLUMNS)]
    for x, c in zip(scan.positions, scan.counts):
        lines.append(",".join([
            format(round(x * 1e9, 9), ".12g"),
            _count(c),
            _num(scan.voltage),
            "1" if scan.is_reference else "0",
            str(int(scan.seed)),
        ]))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_scan_csv(path, molecule_name="", integration_time=1.0) -> FringeScan:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != SCAN_COLUMNS:
            raise ConfigurationError(f"{path}: expected header {','.join(SCAN_COLUMNS)}")
        rows = [r for r in reader if r]
    if not rows:
        raise ConfigurationError(f"{path}: no data rows")
    try:
        positions = np.array([float(r[0]) for r in rows]) * 1e-9
        raw_counts = [r[1] for r in rows]
        noiseless = any(any(ch in c for ch in ".eE") for c in raw_counts)
        counts = np.array([float(c) for c in raw_counts]) if noiseless else np.array([int(c) for c in raw_counts])
        voltages = {float(r[2]) for r in rows}
        refs = {r[3] for r in rows}
        seeds = {int(r[4]) for r in rows}
    except (ValueError, IndexError) as exc:
        raise ConfigurationError(f"{path}: malformed row ({exc})") from exc
    if len(voltages) != 1 or len(refs) != 1 or len(seeds) != 1:
        raise ConfigurationError(f"{path}: voltage, is_reference and seed must be constant within a scan")
    return FringeScan(voltages.pop(), positions, counts, integration_time, molecule_name,
                      seeds.pop(), refs.pop() == "1", noiseless=noiseless)


def read_histogram_csv(path):
    """(velocity, weight) bins from a ``velocity_m_per_s,weight`` CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(h.strip() for h in header or ()) != HISTOGRAM_COLUMNS:
            raise ConfigurationError(f"{path}: expected header {','.join(HISTOGRAM_COLUMNS)}")
        try:
            return [(float(r[0]), float(r[1])) for r in reader if r]
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(f"{path}: malformed row ({exc})") from exc


def write_json(path, doc, schema=None):
    if schema is not None:
        validate_document(doc, schema)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def read_json(path, schema=None):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    if schema is not None:
        validate_document(doc, schema)
    return doc


def write_chi_table(path, estimate):
    lines = ["voltage_V,chi_A3,sigma_A3,included"]
    for e in estimate.per_voltage:
        lines.append(f"{_num(e.voltage)},{float(e.chi)!r},{float(e.sigma_stat)!r},{int(e.included)}")
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_chi_table(path):
    with open(path, newline="") as fh:
        return [(float(r["voltage_V"]), float(r["chi_A3"]), float(r["sigma_A3"]), r["included"] == "1")
                for r in csv.DictReader(fh)]
