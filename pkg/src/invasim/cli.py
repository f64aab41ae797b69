"""Command-line interface.

Every subcommand resolves its settings as CLI flag > config file (JSON with
the same key names) > built-in default, runs the requested computation, and
writes its artifacts into the output directory: delimited data (CSV by
default, --format json for a rows/columns JSON document), a report.json for
the experiment commands, a rendered PNG figure (suppress with --no-plot) and
a manifest.json recording the fully resolved run.

Exit codes: 0 success, 2 usage or validation error, 3 numerical
non-convergence, 4 draw budget or count overflow, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import experiments, plots
from .errors import BudgetExceeded, DomainError, NoConvergence, OverflowGuard
from .flow import (
    SchroederSolution,
    h_surface,
    iterate_orbit,
    phase_grid,
)
from .model import derived_constants, fixed_points, validate_params
from .output import (
    RunManifest,
    ensure_dir,
    rows_to_json,
    write_glued_csv,
    write_h_surface_csv,
    write_h_surface_errors_csv,
    write_manifest_json,
    write_orbit_csv,
    write_path_csv,
    write_phase_csv,
    write_report_json,
    write_rows_csv,
    write_table_csv,
    write_w_samples_csv,
)
from .simulate import SimConfig, glued_approx, simulate_coupled, simulate_population, time_indices

DEFAULTS = {
    "a1": 1.0,
    "a2": 1.0,
    "gamma": 0.5,
    "seed": 42,
    "out": "out",
    "format": "csv",
    "c": 0.75,
    "tol": 1e-10,
    "n_max": 400,
    "n_w": 60,
}

_CONFIG_KEYS = set(DEFAULTS) | {
    "plot", "K", "replicates", "horizon", "mode", "offsets", "j", "grid",
    "resolution", "eps", "x0", "w_range", "x1_range", "x2_range", "rho",
    "C", "x_max",
}


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.replace(":", ",").split(",")
    if len(parts) != 2:
        raise DomainError(f"expected two numbers like 'lo:hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_int_list(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(t) for t in str(value).split(","))


def _parse_offsets(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    text = str(value)
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return _parse_int_list(text)


class Resolver:
    """CLI flag > config file > built-in default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = {}
        cfg_path = getattr(args, "config", None)
        if cfg_path:
            with open(cfg_path, encoding="utf-8") as fh:
                self.config = json.load(fh)
            unknown = set(self.config) - _CONFIG_KEYS
            if unknown:
                raise DomainError(f"unknown config keys: {sorted(unknown)}")

    def get(self, key, fallback=None):
        v = getattr(self.args, key, None)
        if v is not None:
            return v
        if key in self.config:
            return self.config[key]
        if key in DEFAULTS:
            return DEFAULTS[key]
        return fallback

    @property
    def plot(self) -> bool:
        if getattr(self.args, "no_plot", False):
            return False
        return bool(self.config.get("plot", True))


def _params(res: Resolver):
    return validate_params(res.get("a1"), res.get("a2"), res.get("gamma"))


def _data_path(out: str, stem: str, fmt: str) -> str:
    return os.path.join(out, f"{stem}.{'json' if fmt == 'json' else 'csv'}")


def _write_rows(out, stem, fmt, header, rows) -> str:
    if fmt == "json":
        return rows_to_json(_data_path(out, stem, fmt), header, rows)
    return write_rows_csv(_data_path(out, stem, fmt), header, rows)


def _finish(res: Resolver, command: str, parameters: dict, t0: float) -> None:
    manifest = RunManifest.for_run(command, parameters, int(res.get("seed")))
    manifest = RunManifest(
        command=manifest.command,
        parameters=manifest.parameters,
        seed=manifest.seed,
        version=manifest.version,
        duration_s=time.perf_counter() - t0,
    )
    write_manifest_json(manifest, os.path.join(parameters["out"], "manifest.json"))


def _stable_manifest(res: Resolver, command: str, parameters: dict) -> RunManifest:
    return RunManifest.for_run(command, parameters, int(res.get("seed")))


def _base_parameters(res: Resolver, **extra) -> dict:
    d = {
        "a1": float(res.get("a1")),
        "a2": float(res.get("a2")),
        "gamma": float(res.get("gamma")),
        "seed": int(res.get("seed")),
        "out": str(res.get("out")),
        "format": str(res.get("format")),
        "plot": res.plot,
    }
    d.update(extra)
    return d


def run_fixed_points(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    fps = fixed_points(p)
    cons = derived_constants(p)
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    rows = [
        (name, fp.point[0], fp.point[1], fp.stability)
        for name, fp in zip(("ex", "re", "mu", "co"), fps)
    ]
    _write_rows(out, "fixed_points", fmt, ["name", "x1", "x2", "stability"], rows)
    const_rows = [
        ("rho", cons.rho),
        ("b", cons.b),
        ("rho_tilde", cons.rho_tilde),
        ("A11", cons.A[0, 0]),
        ("A12", cons.A[0, 1]),
        ("A21", cons.A[1, 0]),
        ("A22", cons.A[1, 1]),
    ]
    _write_rows(out, "constants", fmt, ["name", "value"], const_rows)
    print(f"{'point':8s} {'x1':>12s} {'x2':>12s}  stability")
    for name, x1, x2, stab in rows:
        print(f"{name:8s} {x1:12.8f} {x2:12.8f}  {stab}")
    print(f"rho = {cons.rho:.8f}, b = 1/ln(rho) = {cons.b:.8f}")
    params = _base_parameters(res)
    _finish(res, "fixed-points", params, t0)
    return 0


def run_flow(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    x0 = _parse_pair(str(res.get("x0", "1,0.01")))
    horizon = int(res.get("horizon", 200))
    orbit = iterate_orbit(p, x0, horizon)
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    if fmt == "json":
        rows_to_json(_data_path(out, "orbit", fmt), ["n", "x1", "x2"],
                     ((n, pt[0], pt[1]) for n, pt in enumerate(orbit.points)))
    else:
        write_orbit_csv(orbit, _data_path(out, "orbit", fmt))
    if res.plot:
        plots.plot_orbit(orbit, fixed_points(p), os.path.join(out, "flow.png"))
    fin = orbit.points[-1]
    print(f"orbit of {horizon} generations from {x0}; final point ({fin[0]:.8f}, {fin[1]:.8f})")
    params = _base_parameters(res, x0=list(x0), horizon=horizon)
    _finish(res, "flow", params, t0)
    return 0


def run_hfun(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    w_range = _parse_pair(str(res.get("w_range", "0:4")))
    x1_range = _parse_pair(str(res.get("x1_range", "-3:3")))
    resolution = int(res.get("resolution", 21))
    tol = float(res.get("tol"))
    n_max = int(res.get("n_max"))
    surface = h_surface(p, w_range, x1_range, resolution, tol=tol, n_max=n_max)
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    if fmt == "json":
        rows_to_json(
            _data_path(out, "h_surface", fmt),
            ["w", "x1", "H1", "H2", "iterations", "residual"],
            ((r.w, r.x1, r.H1, r.H2, r.iterations, r.residual) for r in surface.rows),
        )
    else:
        write_h_surface_csv(surface, _data_path(out, "h_surface", fmt))
    err_file = write_h_surface_errors_csv(surface, os.path.join(out, "h_surface_errors.csv"))
    if res.plot:
        plots.plot_h_surface(surface, os.path.join(out, "hfun.png"))
    bad = sum(1 for r in surface.rows if r.error is not None)
    worst = max((r.residual for r in surface.rows if r.error is None), default=float("nan"))
    print(f"{len(surface.rows)} nodes, {bad} failed, max residual {worst:.3e}"
          + (f" (failures in {err_file})" if err_file else ""))
    params = _base_parameters(res, w_range=list(w_range), x1_range=list(x1_range),
                              resolution=resolution, tol=tol, n_max=n_max)
    _finish(res, "hfun", params, t0)
    return 0


def run_phase(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    default_hi = 1.2 * max(p.a1, p.a2)
    x1_range = _parse_pair(str(res.get("x1_range", f"0:{default_hi}")))
    x2_range = _parse_pair(str(res.get("x2_range", f"0:{default_hi}")))
    resolution = int(res.get("resolution", 25))
    grid = phase_grid(p, x1_range, x2_range, resolution)
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    if fmt == "json":
        rows_to_json(_data_path(out, "phase", fmt), ["x1", "x2", "dx1", "dx2"],
                     ((pt[0], pt[1], dv[0], dv[1])
                      for pt, dv in zip(grid.points, grid.displacements)))
    else:
        write_phase_csv(grid, _data_path(out, "phase", fmt))
    if res.plot:
        plots.plot_phase(grid, fixed_points(p), p, os.path.join(out, "phase.png"))
    print(f"phase grid {resolution}x{resolution} on "
          f"[{x1_range[0]:g},{x1_range[1]:g}]x[{x2_range[0]:g},{x2_range[1]:g}]")
    params = _base_parameters(res, x1_range=list(x1_range), x2_range=list(x2_range),
                              resolution=resolution)
    _finish(res, "phase", params, t0)
    return 0


def _default_horizon(p, K: int) -> int:
    n1, _, _ = time_indices(derived_constants(p).rho, K, 0.75)
    return 2 * n1


def run_simulate(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    K = int(res.get("K", 1000))
    horizon = res.get("horizon")
    horizon = int(horizon) if horizon is not None else _default_horizon(p, K)
    mode = str(res.get("mode", "fast"))
    cfg = SimConfig(K=K, seed=int(res.get("seed")), horizon=horizon, mode=mode)
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    gw = None
    if mode == "coupled":
        zpath, gw = simulate_coupled(p, cfg)
    else:
        zpath = simulate_population(p, cfg)
    if fmt == "json":
        K_f = float(K)
        rows_to_json(_data_path(out, "path", fmt), ["n", "z1", "z2", "x1", "x2"],
                     ((n, int(z1), int(z2), z1 / K_f, z2 / K_f)
                      for n, (z1, z2) in enumerate(zpath.counts)))
        if gw is not None:
            rows_to_json(_data_path(out, "gw_path", fmt), ["n", "z1", "z2", "x1", "x2"],
                         ((n, int(z1), int(z2), z1 / K_f, z2 / K_f)
                          for n, (z1, z2) in enumerate(gw.counts)))
    else:
        write_path_csv(zpath, _data_path(out, "path", fmt))
        if gw is not None:
            write_path_csv(gw, _data_path(out, "gw_path", fmt))
    if res.plot:
        plots.plot_population(zpath, gw, os.path.join(out, "simulate.png"))
    z1, z2 = zpath.counts[-1]
    print(f"simulated {horizon} generations at K={K} ({mode}); final counts ({z1}, {z2})")
    params = _base_parameters(res, K=K, horizon=horizon, mode=mode)
    _finish(res, "simulate", params, t0)
    return 0


def run_glued(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    K = int(res.get("K", 1000))
    horizon = res.get("horizon")
    horizon = int(horizon) if horizon is not None else _default_horizon(p, K)
    c = float(res.get("c"))
    cfg = SimConfig(K=K, seed=int(res.get("seed")), horizon=horizon)
    glued = glued_approx(p, cfg, c=c)
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    if fmt == "json":
        rows_to_json(_data_path(out, "glued", fmt), ["n", "x1", "x2"],
                     ((n, x1, x2) for n, (x1, x2) in enumerate(glued.densities)))
    else:
        write_glued_csv(glued, _data_path(out, "glued", fmt))
    if res.plot:
        plots.plot_glued(glued, os.path.join(out, "glued.png"))
    print(f"glued path at K={K}: branching to n={glued.switch_index}, "
          f"deterministic to n={horizon}")
    params = _base_parameters(res, K=K, horizon=horizon, c=c)
    _finish(res, "glued", params, t0)
    return 0


def run_estimate_w(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    M = int(res.get("replicates", 1000))
    n_w = int(res.get("n_w"))
    report, samples = experiments.w_sample_report(p, M, n_w, int(res.get("seed")))
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    params = _base_parameters(res, replicates=M, n_w=n_w)
    if fmt == "json":
        rows_to_json(_data_path(out, "w_samples", fmt),
                     ["replicate", "value", "extinct", "truncation_n"],
                     ((r, s.value, s.extinct, s.truncation_n)
                      for r, s in enumerate(samples)))
    else:
        write_w_samples_csv(samples, _data_path(out, "w_samples", fmt))
    write_report_json(report, os.path.join(out, "report.json"),
                      _stable_manifest(res, "estimate-w", params))
    if res.plot:
        plots.plot_w_samples(samples, os.path.join(out, "estimate_w.png"))
    m = report.metrics
    print(f"{M} samples at depth {n_w}: mean {m['mean'].value:.4f} "
          f"(se {m['mean'].stderr:.4f}), zero fraction {m['extinct_fraction'].value:.4f} "
          f"(limit {m['target_extinct'].value:.4f})")
    _finish(res, "estimate-w", params, t0)
    return 0


def run_verify_theorem1(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    js = _parse_int_list(res.get("j", "25,30,35,40"))
    M = int(res.get("replicates", 4000))
    n_w = int(res.get("n_w"))
    tol = float(res.get("tol"))
    seed = int(res.get("seed"))
    if len(js) == 1:
        report = experiments.limit_law_check(p, js[0], M, seed, n_w=n_w, tol_h=tol)
        report.tables[f"samples_j{js[0]}"] = report.tables.pop("samples")
    else:
        report = experiments.limit_law_trend(p, js, M, seed, n_w=n_w, tol_h=tol,
                                             keep_samples=True)
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    params = _base_parameters(res, j=list(js), replicates=M, n_w=n_w, tol=tol)
    write_report_json(report, os.path.join(out, "report.json"),
                      _stable_manifest(res, "verify-theorem1", params))
    for key in sorted(k for k in report.tables if k.startswith("samples_")):
        rows = report.tables[key]
        _write_rows(out, key, fmt, list(rows[0].keys()),
                    ([r[k] for k in rows[0].keys()] for r in rows))
    if res.plot:
        plots.plot_limit_law(report, os.path.join(out, "verify_theorem1.png"))
    for k in sorted(report.metrics):
        if k.startswith("ks"):
            print(f"{k}: {report.metrics[k].value:.4f}")
    for name, v in report.verdicts.items():
        print(f"{name}: {'pass' if v.passed else 'FAIL'} "
              f"(observed {v.observed:.4g}, threshold {v.threshold:.4g})")
    _finish(res, "verify-theorem1", params, t0)
    return 0


def run_verify_corollary1(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    K = int(res.get("K", 10000))
    offsets = _parse_offsets(res.get("offsets", "-5..5"))
    M = int(res.get("replicates", 500))
    c = float(res.get("c"))
    tol = float(res.get("tol"))
    report = experiments.pathwise_prediction_check(
        p, K, M, offsets, c, int(res.get("seed")), tol_h=tol
    )
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    params = _base_parameters(res, K=K, offsets=list(offsets), replicates=M, c=c, tol=tol)
    write_report_json(report, os.path.join(out, "report.json"),
                      _stable_manifest(res, "verify-corollary1", params))
    rows = report.tables["errors_by_offset"]
    if fmt == "json":
        rows_to_json(_data_path(out, "errors_by_offset", fmt), list(rows[0].keys()),
                     ([r[k] for k in rows[0].keys()] for r in rows))
    else:
        write_table_csv(rows, _data_path(out, "errors_by_offset", fmt))
    if res.plot:
        plots.plot_prediction_errors(report, os.path.join(out, "verify_corollary1.png"))
    for r in rows:
        print(f"offset {r['offset']:+d}: mean error {r['mean_error']:.5f}, "
              f"p90 {r['p90_error']:.5f}")
    _finish(res, "verify-corollary1", params, t0)
    return 0


def run_establishment(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    K = int(res.get("K", 100000))
    M = int(res.get("replicates", 10000))
    eps = res.get("eps")
    eps = float(eps) if eps is not None else None
    horizon = res.get("horizon")
    horizon = int(horizon) if horizon is not None else None
    report = experiments.establishment_probability(
        p, K, M, eps, int(res.get("seed")), horizon=horizon
    )
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    params = _base_parameters(
        res, K=K, replicates=M,
        eps=report.metrics["threshold"].value,
        horizon=int(report.metrics["horizon"].value),
    )
    write_report_json(report, os.path.join(out, "report.json"),
                      _stable_manifest(res, "establishment", params))
    rows = report.tables["final_density_histogram"]
    if fmt == "json":
        rows_to_json(_data_path(out, "final_density_histogram", fmt),
                     list(rows[0].keys()), ([r[k] for k in rows[0].keys()] for r in rows))
    else:
        write_table_csv(rows, _data_path(out, "final_density_histogram", fmt))
    if res.plot:
        plots.plot_establishment(report, os.path.join(out, "establishment.png"))
    m = report.metrics
    print(f"established fraction {m['estimate'].value:.4f} "
          f"[{m['wilson_lo'].value:.4f}, {m['wilson_hi'].value:.4f}] "
          f"vs limit {m['target'].value:.4f}")
    _finish(res, "establishment", params, t0)
    return 0


def run_coupling_error(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    grid = tuple(int(k) for k in _parse_int_list(res.get("grid", "1000,10000,100000")))
    M = int(res.get("replicates", 400))
    c = float(res.get("c"))
    report = experiments.coupling_error_study(p, grid, M, c, int(res.get("seed")))
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    params = _base_parameters(res, grid=list(grid), replicates=M, c=c)
    write_report_json(report, os.path.join(out, "report.json"),
                      _stable_manifest(res, "coupling-error", params))
    rows = report.tables["errors_by_K"]
    if fmt == "json":
        rows_to_json(_data_path(out, "errors_by_K", fmt), list(rows[0].keys()),
                     ([r[k] for k in rows[0].keys()] for r in rows))
    else:
        write_table_csv(rows, _data_path(out, "errors_by_K", fmt))
    if res.plot:
        plots.plot_coupling(report, os.path.join(out, "coupling_error.png"))
    for r in rows:
        print(f"K={r['K']}: mutant median gap {r['median_scaled_gap_mutant']:.5f}")
    v = report.verdicts["medians_decreasing"]
    print(f"medians_decreasing: {'pass' if v.passed else 'FAIL'}")
    _finish(res, "coupling-error", params, t0)
    return 0


def run_schroeder(res: Resolver) -> int:
    t0 = time.perf_counter()
    p = _params(res)
    rho = res.get("rho")
    rho = float(rho) if rho is not None else derived_constants(p).rho
    C = float(res.get("C", 1.0))
    x_max = float(res.get("x_max", 10.0))
    resolution = int(res.get("resolution", 41))
    tol_arg = getattr(res.args, "tol", None)
    tol = float(tol_arg) if tol_arg is not None else float(res.config.get("tol", 1e-12))
    sol = SchroederSolution(rho, C, tol=tol)
    xs = np.linspace(0.0, x_max, resolution)
    rows = []
    log10_values = np.zeros_like(xs)
    for i, x in enumerate(xs):
        value = sol.phi_inverse_at(float(x))
        if value > 0:
            log10_values[i] = float(value.log10())
        rows.append((float(x), value, sol.n_used))
    out = ensure_dir(str(res.get("out")))
    fmt = str(res.get("format"))
    _write_rows(out, "schroeder", fmt, ["x", "value", "n_used"], rows)
    if res.plot:
        plots.plot_schroeder(xs, log10_values, rho, C, os.path.join(out, "schroeder.png"))
    print(f"recursion limit tabulated on [0, {x_max:g}] at {resolution} points "
          f"(rho={rho:g}, C={C:g}); value at x_max: {rows[-1][1]:.6E}")
    params = _base_parameters(res, rho=rho, C=C, x_max=x_max, resolution=resolution, tol=tol)
    _finish(res, "schroeder", params, t0)
    return 0


_RUNNERS = {
    "fixed-points": run_fixed_points,
    "flow": run_flow,
    "hfun": run_hfun,
    "phase": run_phase,
    "simulate": run_simulate,
    "glued": run_glued,
    "estimate-w": run_estimate_w,
    "verify-theorem1": run_verify_theorem1,
    "verify-corollary1": run_verify_corollary1,
    "establishment": run_establishment,
    "coupling-error": run_coupling_error,
    "schroeder": run_schroeder,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a1", type=float, help="resident capacity coefficient")
    common.add_argument("--a2", type=float, help="mutant capacity coefficient")
    common.add_argument("--gamma", type=float, help="interaction coefficient in (0,1)")
    common.add_argument("--seed", type=int, help="master seed (default 42)")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("--format", choices=("csv", "json"), help="data file format")
    common.add_argument("--config", help="JSON config file with the same key names")
    common.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="invasim",
        description="Two-type density-dependent splitting process: "
                    "simulation, deterministic limits, verification experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fixed-points", parents=[common],
                        help="equilibria, stability classes and derived constants")

    sp = sub.add_parser("flow", parents=[common], help="iterate the deterministic dynamics")
    sp.add_argument("--x0", help="start point 'x1,x2' (default 1,0.01)")
    sp.add_argument("--horizon", type=int, help="generations (default 200)")

    sp = sub.add_parser("hfun", parents=[common],
                        help="tabulate the scaling-limit function H on a grid")
    sp.add_argument("--w-range", help="seed-mass range 'lo:hi' (default 0:4)")
    sp.add_argument("--x1-range", help="first-coordinate range (default -3:3)")
    sp.add_argument("--resolution", type=int, help="grid nodes per axis (default 21)")
    sp.add_argument("--tol", type=float, help="evaluation tolerance (default 1e-10)")
    sp.add_argument("--n-max", type=int, help="iteration cap (default 400)")

    sp = sub.add_parser("phase", parents=[common], help="phase-portrait vector field")
    sp.add_argument("--x1-range", help="resident range 'lo:hi'")
    sp.add_argument("--x2-range", help="mutant range 'lo:hi'")
    sp.add_argument("--resolution", type=int, help="grid nodes per axis (default 25)")

    sp = sub.add_parser("simulate", parents=[common], help="simulate the exact process")
    sp.add_argument("--K", type=int, help="carrying capacity (default 1000)")
    sp.add_argument("--horizon", type=int, help="generations (default 2*n1)")
    sp.add_argument("--mode", choices=("fast", "coupled"),
                    help="fast binomial or per-individual coupled")

    sp = sub.add_parser("glued", parents=[common],
                        help="branching segment glued to deterministic iteration")
    sp.add_argument("--K", type=int, help="carrying capacity (default 1000)")
    sp.add_argument("--horizon", type=int, help="generations (default 2*n1)")
    sp.add_argument("--c", type=float, help="switch exponent in (1/2,1] (default 0.75)")

    sp = sub.add_parser("estimate-w", parents=[common],
                        help="sample the mutant martingale limit")
    sp.add_argument("--replicates", type=int, help="sample count (default 1000)")
    sp.add_argument("--n-w", type=int, help="truncation depth (default 60)")

    sp = sub.add_parser("verify-theorem1", parents=[common],
                        help="mutant density at the establishment depth vs its limit law")
    sp.add_argument("--j", help="comma list of exponents (default 25,30,35,40)")
    sp.add_argument("--replicates", type=int, help="paths per exponent (default 4000)")
    sp.add_argument("--n-w", type=int, help="truncation depth (default 60)")
    sp.add_argument("--tol", type=float, help="limit-function tolerance (default 1e-10)")

    sp = sub.add_parser("verify-corollary1", parents=[common],
                        help="pathwise forecast error around the establishment depth")
    sp.add_argument("--K", type=int, help="carrying capacity (default 10000)")
    sp.add_argument("--offsets", help="offsets as 'lo..hi' or comma list (default -5..5)")
    sp.add_argument("--replicates", type=int, help="coupled paths (default 500)")
    sp.add_argument("--c", type=float, help="switch exponent (default 0.75)")
    sp.add_argument("--tol", type=float, help="limit-function tolerance")

    sp = sub.add_parser("establishment", parents=[common],
                        help="establishment probability vs the 2(1-1/rho) limit")
    sp.add_argument("--K", type=int, help="carrying capacity (default 100000)")
    sp.add_argument("--replicates", type=int, help="paths (default 10000)")
    sp.add_argument("--eps", type=float, help="density threshold (default co2/2)")
    sp.add_argument("--horizon", type=int, help="generations (default 2*n1)")

    sp = sub.add_parser("coupling-error", parents=[common],
                        help="scaled gap between the exact and branching processes")
    sp.add_argument("--grid", help="comma list of K values (default 1000,10000,100000)")
    sp.add_argument("--replicates", type=int, help="coupled paths per K (default 400)")
    sp.add_argument("--c", type=float, help="switch exponent (default 0.75)")

    sp = sub.add_parser("schroeder", parents=[common],
                        help="limit of the auxiliary quadratic recursion")
    sp.add_argument("--rho", type=float, help="growth rate (default: derived from params)")
    sp.add_argument("--C", type=float, help="quadratic coefficient (default 1)")
    sp.add_argument("--x-max", type=float, help="tabulation endpoint (default 10)")
    sp.add_argument("--resolution", type=int, help="tabulation points (default 41)")
    sp.add_argument("--tol", type=float, help="convergence tolerance (default 1e-12)")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        res = Resolver(args)
        return _RUNNERS[args.command](res)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (BudgetExceeded, OverflowGuard) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
