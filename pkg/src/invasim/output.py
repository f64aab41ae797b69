"""Serialization: CSV writers, JSON reports, run manifests.

Writers are pure formatters.  Floats are written with 17 significant digits
(full double precision), line endings are LF and the decimal separator is
always a point.  Every run directory receives a manifest.json recording the
resolved parameter set; the manifest embedded inside report JSONs omits the
wall-clock duration and the output directory so that reruns with the same
flags and seed reproduce every data artifact byte for byte.
"""

from __future__ import annotations

import dataclasses
import decimal
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .experiments import EmpiricalDistribution, ExperimentReport, Metric, Verdict
from .flow import HSurface, Orbit, PhaseGrid
from .model import ModelParams
from .simulate import GluedPath, GWPath, PopulationPath, WSample
from .version import __version__

_VOLATILE_KEYS = ("out",)


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict
    seed: int
    version: str
    duration_s: float | None = None

    @classmethod
    def for_run(cls, command: str, parameters: dict, seed: int) -> "RunManifest":
        return cls(command=command, parameters=dict(parameters), seed=seed, version=__version__)

    def stable_dict(self) -> dict:
        """Manifest content without volatile fields, for embedding in reports."""
        params = {k: v for k, v in self.parameters.items() if k not in _VOLATILE_KEYS}
        return {
            "command": self.command,
            "parameters": _jsonable(params),
            "seed": self.seed,
            "version": self.version,
        }

    def full_dict(self) -> dict:
        d = self.stable_dict()
        d["parameters"] = _jsonable(self.parameters)
        d["duration_s"] = self.duration_s
        return d


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if isinstance(v, decimal.Decimal):
        return f"{v:.17g}"
    return f"{float(v):.17g}"


def _jsonable(obj):
    if isinstance(obj, decimal.Decimal):
        f = float(obj)
        return f if math.isfinite(f) else f"{obj:.17g}"
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _open_out(dest: str):
    parent = os.path.dirname(os.path.abspath(dest))
    os.makedirs(parent, exist_ok=True)
    return open(dest, "w", encoding="utf-8", newline="\n")


def write_rows_csv(dest: str, header: list[str], rows) -> str:
    with _open_out(dest) as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return dest


_write_csv = write_rows_csv


def write_path_csv(path: PopulationPath | GWPath, dest: str) -> str:
    """Counts and densities per generation: n,z1,z2,x1,x2."""
    K = path.config.K
    rows = (
        (n, int(z1), int(z2), z1 / K, z2 / K)
        for n, (z1, z2) in enumerate(path.counts)
    )
    return _write_csv(dest, ["n", "z1", "z2", "x1", "x2"], rows)


def read_path_csv(dest: str) -> np.ndarray:
    """Recover the integer counts from a path CSV."""
    data = np.loadtxt(dest, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1:3].astype(np.int64)


def write_orbit_csv(orbit: Orbit, dest: str) -> str:
    rows = ((n, x1, x2) for n, (x1, x2) in enumerate(orbit.points))
    return _write_csv(dest, ["n", "x1", "x2"], rows)


def write_glued_csv(path: GluedPath, dest: str) -> str:
    rows = ((n, x1, x2) for n, (x1, x2) in enumerate(path.densities))
    return _write_csv(dest, ["n", "x1", "x2"], rows)


def write_h_surface_csv(surface: HSurface, dest: str) -> str:
    rows = (
        (r.w, r.x1, r.H1, r.H2, r.iterations, r.residual)
        for r in surface.rows
    )
    return _write_csv(dest, ["w", "x1", "H1", "H2", "iterations", "residual"], rows)


def write_h_surface_errors_csv(surface: HSurface, dest: str) -> str | None:
    """Companion file listing grid nodes whose evaluation failed, if any."""
    bad = [r for r in surface.rows if r.error is not None]
    if not bad:
        return None
    with _open_out(dest) as fh:
        fh.write("w,x1,error\n")
        for r in bad:
            msg = r.error.replace('"', "'")
            fh.write(f'{_fmt(r.w)},{_fmt(r.x1)},"{msg}"\n')
    return dest


def write_phase_csv(grid: PhaseGrid, dest: str) -> str:
    rows = (
        (pt[0], pt[1], dv[0], dv[1])
        for pt, dv in zip(grid.points, grid.displacements)
    )
    return _write_csv(dest, ["x1", "x2", "dx1", "dx2"], rows)


def write_w_samples_csv(samples: list[WSample], dest: str) -> str:
    rows = (
        (r, s.value, s.extinct, s.truncation_n)
        for r, s in enumerate(samples)
    )
    return _write_csv(dest, ["replicate", "value", "extinct", "truncation_n"], rows)


def write_table_csv(rows: tuple[dict, ...], dest: str) -> str:
    """One experiment table (tuple of homogeneous dicts) as CSV."""
    if not rows:
        raise ValueError(f"refusing to write an empty table to {dest}")
    header = list(rows[0].keys())
    return _write_csv(dest, header, ([row[k] for k in header] for row in rows))


def rows_to_json(dest: str, header: list[str], rows) -> str:
    payload = {"columns": header, "rows": [_jsonable(list(r)) for r in rows]}
    with _open_out(dest) as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return dest


def report_to_dict(report: ExperimentReport, manifest: RunManifest | None = None) -> dict:
    d = {
        "name": report.name,
        "params": dataclasses.asdict(report.params),
        "grid": list(report.grid),
        "replicates": report.replicates,
        "seed": report.seed,
        "metrics": {
            k: {
                "value": m.value,
                "count": m.count,
                "stderr": m.stderr,
                "bound": m.bound,
            }
            for k, m in report.metrics.items()
        },
        "verdicts": {
            k: {
                "criterion": v.criterion,
                "threshold": v.threshold,
                "observed": v.observed,
                "pass": v.passed,
            }
            for k, v in report.verdicts.items()
        },
        "tables": {k: [dict(r) for r in rows] for k, rows in report.tables.items()},
        "notes": list(report.notes),
    }
    if manifest is not None:
        d["manifest"] = manifest.stable_dict()
    return _jsonable(d)


def report_from_dict(d: dict) -> ExperimentReport:
    return ExperimentReport(
        name=d["name"],
        params=ModelParams(**d["params"]),
        grid=tuple(d["grid"]),
        replicates=d["replicates"],
        seed=d["seed"],
        metrics={
            k: Metric(value=m["value"], count=m["count"], stderr=m["stderr"], bound=m["bound"])
            for k, m in d["metrics"].items()
        },
        verdicts={
            k: Verdict(
                criterion=v["criterion"],
                threshold=v["threshold"],
                observed=v["observed"],
                passed=v["pass"],
            )
            for k, v in d["verdicts"].items()
        },
        tables={k: tuple(dict(r) for r in rows) for k, rows in d["tables"].items()},
        notes=tuple(d["notes"]),
    )


def write_report_json(
    report: ExperimentReport, dest: str, manifest: RunManifest | None = None
) -> str:
    with _open_out(dest) as fh:
        json.dump(report_to_dict(report, manifest), fh, sort_keys=True, indent=1)
        fh.write("\n")
    return dest


def read_report_json(dest: str) -> ExperimentReport:
    with open(dest, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def write_manifest_json(manifest: RunManifest, dest: str) -> str:
    with _open_out(dest) as fh:
        json.dump(manifest.full_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    return dest


def empirical_cdf_rows(dist: EmpiricalDistribution):
    for i, v in enumerate(dist.values, start=1):
        yield v, i / dist.size
