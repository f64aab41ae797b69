"""Figure rendering for the CLI report paths.

All figures are rendered with the Agg backend straight to PNG files next to
the delimited output.  Rendering is deterministic: no timestamps, fixed dpi,
fixed layout.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import ExperimentReport  # noqa: E402
from .flow import HSurface, Orbit, PhaseGrid  # noqa: E402
from .model import FixedPointSet, ModelParams  # noqa: E402
from .simulate import GluedPath, GWPath, PopulationPath, WSample  # noqa: E402

_DPI = 150


def _save(fig, dest: str) -> str:
    fig.savefig(dest, dpi=_DPI)
    plt.close(fig)
    return dest


def plot_orbit(orbit: Orbit, fps: FixedPointSet, dest: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = np.arange(len(orbit.points))
    ax.plot(n, orbit.points[:, 0], label="resident density", color="tab:blue")
    ax.plot(n, orbit.points[:, 1], label="mutant density", color="tab:red")
    ax.axhline(fps.co.point[0], color="tab:blue", ls=":", lw=0.8)
    ax.axhline(fps.co.point[1], color="tab:red", ls=":", lw=0.8)
    ax.set_xlabel("generation")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)


def plot_phase(grid: PhaseGrid, fps: FixedPointSet, p: ModelParams, dest: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 6))
    pts = grid.points
    dv = grid.displacements
    ax.quiver(
        pts[:, 0], pts[:, 1], dv[:, 0], dv[:, 1],
        angles="xy", width=0.0025, color="0.4",
    )
    x1max = grid.x1_axis[-1]
    x2max = grid.x2_axis[-1]
    # displacement sign changes happen across these two lines
    xs = np.linspace(0.0, x1max, 100)
    ax.plot(xs, np.clip((p.a1 - xs) / p.gamma, 0, None), "b--", lw=1,
            label="resident stationarity")
    ax.plot(xs, np.clip(p.a2 - p.gamma * xs, 0, None), "r--", lw=1,
            label="mutant stationarity")
    marks = {"ex": "o", "re": "s", "mu": "D", "co": "*"}
    for name, fp in zip(("ex", "re", "mu", "co"), fps):
        ax.plot(*fp.point, marks[name], color="k", ms=9 if name == "co" else 6)
        ax.annotate(name, fp.point, textcoords="offset points", xytext=(6, 6))
    ax.set_xlim(-0.05, x1max * 1.05)
    ax.set_ylim(-0.05, x2max * 1.05)
    ax.set_xlabel("resident density")
    ax.set_ylabel("mutant density")
    ax.legend(frameon=False, loc="upper right")
    fig.tight_layout()
    return _save(fig, dest)


def plot_h_surface(surface: HSurface, dest: str) -> str:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5), sharex=True)
    by_x1: dict[float, list] = {}
    for r in surface.rows:
        by_x1.setdefault(r.x1, []).append(r)
    for x1, rows in sorted(by_x1.items()):
        rows = sorted(rows, key=lambda r: r.w)
        ws = [r.w for r in rows]
        axes[0].plot(ws, [r.H1 for r in rows], label=f"x1={x1:g}")
        axes[1].plot(ws, [r.H2 for r in rows], label=f"x1={x1:g}")
    axes[0].set_ylabel("first component")
    axes[1].set_ylabel("second component")
    for ax in axes:
        ax.set_xlabel("mutant seed mass w")
    if len(by_x1) <= 8:
        axes[1].legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)


def plot_population(path: PopulationPath, gw: GWPath | None, dest: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    dens = path.densities
    n = np.arange(len(dens))
    ax.plot(n, dens[:, 0], color="tab:blue", label="resident")
    ax.plot(n, dens[:, 1], color="tab:red", label="mutant")
    if gw is not None:
        gd = gw.densities
        ax.plot(n, gd[:, 0], color="tab:blue", ls="--", lw=1, label="resident (branching)")
        ax.plot(n, gd[:, 1], color="tab:red", ls="--", lw=1, label="mutant (branching)")
    ax.set_xlabel("generation")
    ax.set_ylabel("density")
    ax.set_title(f"K={path.config.K}, seed={path.config.seed}")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)


def plot_glued(path: GluedPath, dest: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = np.arange(len(path.densities))
    ax.plot(n, path.densities[:, 0], color="tab:blue", label="resident")
    ax.plot(n, path.densities[:, 1], color="tab:red", label="mutant")
    ax.axvline(path.switch_index, color="k", ls=":", lw=1,
               label=f"switch at n={path.switch_index}")
    ax.set_xlabel("generation")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)


def plot_w_samples(samples: list[WSample], dest: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    vals = np.array([s.value for s in samples])
    pos = vals[vals > 0]
    atom = float(np.mean(vals == 0))
    if pos.size:
        ax.hist(pos, bins=min(60, max(10, pos.size // 20)), density=True,
                color="tab:purple", alpha=0.75)
    ax.set_xlabel("martingale limit estimate")
    ax.set_ylabel("density (positive part)")
    ax.set_title(f"atom at 0: {atom:.3f} of {len(samples)} samples")
    fig.tight_layout()
    return _save(fig, dest)


def plot_limit_law(report: ExperimentReport, dest: str) -> str:
    sample_tables = {k: v for k, v in report.tables.items() if k.startswith("samples")}
    trend = report.tables.get("ks_by_j")
    ncols = 2 if trend is not None and sample_tables else 1
    fig, axes = plt.subplots(1, ncols, figsize=(6 * ncols, 4.5))
    axes = np.atleast_1d(axes)
    ax = axes[0]
    for key in sorted(sample_tables):
        rows = sample_tables[key]
        sim = np.sort([r["x2_sim"] for r in rows])
        ref = np.sort([r["h2_ref"] for r in rows])
        q = np.arange(1, len(sim) + 1) / len(sim)
        label = key.replace("samples_", "") or "sample"
        (line,) = ax.plot(sim, q, lw=1.2, label=f"simulated, {label}")
        ax.plot(ref, q, lw=1.2, ls="--", color=line.get_color())
    ax.set_xlabel("mutant density at establishment depth")
    ax.set_ylabel("empirical CDF")
    ax.legend(frameon=False, fontsize=8)
    if trend is not None and len(axes) > 1:
        ax2 = axes[1]
        ax2.plot([r["j"] for r in trend], [r["ks"] for r in trend], "o-")
        ax2.set_xlabel("j (capacity = growth-rate^j)")
        ax2.set_ylabel("KS distance")
    fig.tight_layout()
    return _save(fig, dest)


def plot_prediction_errors(report: ExperimentReport, dest: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    rows = report.tables["errors_by_offset"]
    offs = [r["offset"] for r in rows]
    means = [r["mean_error"] for r in rows]
    p90 = [r["p90_error"] for r in rows]
    ax.plot(offs, means, "o-", label="mean error")
    ax.plot(offs, p90, "s--", label="90th percentile")
    ax.set_yscale("log")
    ax.set_xlabel("offset from establishment depth")
    ax.set_ylabel("sup-norm forecast error")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)


def plot_establishment(report: ExperimentReport, dest: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    rows = report.tables["final_density_histogram"]
    lo = np.array([r["bin_lo"] for r in rows])
    hi = np.array([r["bin_hi"] for r in rows])
    counts = np.array([r["count"] for r in rows])
    ax.bar(lo, counts, width=hi - lo, align="edge", color="tab:red", alpha=0.7)
    ax.axvline(report.metrics["threshold"].value, color="k", ls=":",
               label="establishment threshold")
    ax.set_xlabel("final mutant density")
    ax.set_ylabel("paths")
    est = report.metrics["estimate"].value
    tgt = report.metrics["target"].value
    ax.set_title(f"established fraction {est:.4f} (limit {tgt:.4f})")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)


def plot_coupling(report: ExperimentReport, dest: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    rows = report.tables["errors_by_K"]
    Ks = [r["K"] for r in rows]
    ax.loglog(Ks, [r["median_scaled_gap_mutant"] for r in rows], "o-", label="mutant median")
    ax.loglog(Ks, [r["mean_scaled_gap_mutant"] for r in rows], "o--", label="mutant mean")
    ax.loglog(Ks, [r["median_scaled_gap_resident"] for r in rows], "s-",
              label="resident median")
    ax.set_xlabel("carrying capacity K")
    ax.set_ylabel("scaled coupling gap")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)


def plot_schroeder(xs: np.ndarray, log10_values: np.ndarray, rho: float, C: float, dest: str) -> str:
    """Limit of the quadratic recursion on a log10 scale (it grows like
    exp of a power of x, far beyond the linear identity baseline)."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    pos = xs > 0
    ax.plot(xs[pos], log10_values[pos], color="tab:green", label="recursion limit")
    ax.plot(xs[pos], np.log10(xs[pos]), color="0.5", ls=":", label="identity")
    ax.set_xlabel("x")
    ax.set_ylabel("log10 of the value")
    ax.set_title(f"growth rate {rho:g}, quadratic coefficient {C:g}")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)


def plot_noise(residuals: np.ndarray, dest: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = np.arange(len(residuals))
    ax.plot(n, residuals[:, 0], lw=0.8, label="resident")
    ax.plot(n, residuals[:, 1], lw=0.8, label="mutant")
    ax.set_xlabel("generation")
    ax.set_ylabel("rescaled one-step noise")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, dest)
