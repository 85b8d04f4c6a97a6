"""CSV and manifest output.

``moments.csv`` columns (one row per filter, estimator and grid time, in
report order)::

    time,filter,estimator,replication_mean,simulation_variance,analytic_reference

Floats are written with ``repr`` so that reading them back is bit-exact;
undefined values (``NaN`` or no reference) are written as empty fields.

``particles.csv`` columns, for the first replication of each filter::

    time,filter,particle,x0[,x1,...]

``manifest.json`` records the command, root seed, package version, the
echoed configuration, the SHA-256 of every data file and the wall-clock
duration in seconds.
"""

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .experiments import ExperimentReport, Series

MOMENTS_HEADER = [
    "time",
    "filter",
    "estimator",
    "replication_mean",
    "simulation_variance",
    "analytic_reference",
]


@dataclass
class RunManifest:
    command: str
    seed: int
    version: str
    config: dict
    files: dict = field(default_factory=dict)
    duration_seconds: float = 0.0


def _fmt(x):
    if x is None:
        return ""
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _parse(text):
    return math.nan if text == "" else float(text)


def write_moments(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MOMENTS_HEADER)
        for s in report.series:
            ref = s.analytic_reference
            for k, t in enumerate(report.times):
                w.writerow(
                    [
                        _fmt(t),
                        s.filter,
                        s.estimator,
                        _fmt(s.replication_mean[k]),
                        _fmt(s.simulation_variance[k]),
                        "" if ref is None else _fmt(ref[k]),
                    ]
                )


def read_moments(path):
    """Inverse of :func:`write_moments`; ``replications`` is not stored and comes back as ``None``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != MOMENTS_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(reader)
    groups = {}
    for t, filt, est, mean, var, ref in rows:
        groups.setdefault((filt, est), []).append((float(t), _parse(mean), _parse(var), ref))
    series = []
    times = None
    for (filt, est), recs in groups.items():
        if times is None:
            times = np.array([r[0] for r in recs])
        refs = [r[3] for r in recs]
        ref = None if all(x == "" for x in refs) else np.array([_parse(x) for x in refs])
        series.append(
            Series(filt, est, np.array([r[1] for r in recs]), np.array([r[2] for r in recs]), ref)
        )
    return ExperimentReport(times if times is not None else np.empty(0), series, None)


def write_particles(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        d = next(iter(report.particles.values())).shape[-1] if report.particles else 1
        w.writerow(["time", "filter", "particle"] + [f"x{i}" for i in range(d)])
        for name, traj in report.particles.items():
            for k, t in enumerate(report.times):
                for i, p in enumerate(traj[k]):
                    w.writerow([_fmt(t), name, i] + [_fmt(v) for v in p])


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(manifest, out_dir):
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def emit_report(report, out_dir, *, command="", seed=None, config=None, particles=False, started=None):
    """Write ``moments.csv`` (and ``particles.csv`` if asked) plus ``manifest.json``.

    Raises ``OSError`` with the offending path if the directory is not writable.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest = RunManifest(command, seed, __version__, config or {})
    moments = os.path.join(out_dir, "moments.csv")
    write_moments(report, moments)
    manifest.files["moments.csv"] = sha256(moments)
    if particles:
        ppath = os.path.join(out_dir, "particles.csv")
        write_particles(report, ppath)
        manifest.files["particles.csv"] = sha256(ppath)
    if started is not None:
        manifest.duration_seconds = round(time.perf_counter() - started, 3)
    write_manifest(manifest, out_dir)
    return manifest
