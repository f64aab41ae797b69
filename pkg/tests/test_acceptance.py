"""Acceptance suite: twelve end-to-end checks of the package's contracts.

Each test prints one `ACCEPTANCE nn <slug>: PASS|FAIL` line (visible even
under pytest's capture) and then asserts, so a failing criterion still
reports its verdict.  All stochastic criteria run from master seed 42.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np

from conftest import random_params
from invasim import (
    SchroederSolution,
    SimConfig,
    density_step,
    derived_constants,
    eval_h,
    fixed_points,
    simulate_gw,
    simulate_population,
    splitting_probs,
    validate_params,
)
from invasim.cli import main
from invasim.experiments import (
    coupling_error_study,
    establishment_probability,
    limit_law_trend,
    pathwise_prediction_check,
)
from invasim.seeds import derive_seed

MASTER_SEED = 42


def _params():
    return validate_params(1.0, 1.0, 0.5)


def _report(capsys, number: int, slug: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"ACCEPTANCE {number:02d} {slug}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_acceptance_01_fixed_points(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(MASTER_SEED)
    expected = ("unstable", "saddle", "saddle", "stable")
    worst = 0.0
    classes_ok = True
    for _ in range(100):
        p = random_params(rng)
        fps = fixed_points(p)
        for fp, want in zip(fps, expected):
            fx = density_step(p, fp.point)
            worst = max(worst, abs(fx[0] - fp.point[0]), abs(fx[1] - fp.point[1]))
            classes_ok = classes_ok and fp.stability == want
    dt = time.perf_counter() - t0
    ok = worst < 1e-12 and classes_ok and dt < 1.0
    _report(capsys, 1, "fixed-point-suite", ok,
            f"max residual {worst:.2e}, classes {'ok' if classes_ok else 'WRONG'}, {dt:.2f}s")
    assert ok


def test_acceptance_02_abel_equation(capsys):
    t0 = time.perf_counter()
    p = _params()
    rho = derived_constants(p).rho
    rng = np.random.default_rng(MASTER_SEED)
    worst = 0.0
    for _ in range(200):
        x = (float(rng.uniform(-5.0, 5.0)), float(rng.uniform(0.0, 5.0)))
        left = eval_h(p, x, tol=1e-10).value
        inner = eval_h(p, (x[0] / rho, x[1] / rho), tol=1e-10).value
        right = density_step(p, inner)
        worst = max(worst, abs(left[0] - right[0]), abs(left[1] - right[1]))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 10.0
    _report(capsys, 2, "abel-equation", ok, f"max residual {worst:.2e}, {dt:.2f}s")
    assert ok


def test_acceptance_03_telescoping_decay(capsys):
    t0 = time.perf_counter()
    p = _params()
    rho = derived_constants(p).rho
    cap = 1.0 / rho + 0.05
    rng = np.random.default_rng(MASTER_SEED)
    worst_ratio = 0.0
    for _ in range(20):
        x = (float(rng.uniform(-5.0, 5.0)), float(rng.uniform(0.05, 5.0)))
        incs = eval_h(p, x, tol=1e-10).increments[-21:]
        for a, b in zip(incs, incs[1:]):
            if a > 0.0:
                worst_ratio = max(worst_ratio, b / a)
    dt = time.perf_counter() - t0
    ok = worst_ratio <= cap and dt < 5.0
    _report(capsys, 3, "telescoping-decay", ok,
            f"worst ratio {worst_ratio:.4f} vs cap {cap:.4f}, {dt:.2f}s")
    assert ok


def test_acceptance_04_resident_component_invariance(capsys):
    t0 = time.perf_counter()
    p = _params()
    worst = 0.0
    for w in (0.25, 0.5, 1.0, 2.0, 4.0):
        base = eval_h(p, (0.0, w)).value[1]
        for x1 in (-3.0, 0.0, 3.0):
            worst = max(worst, abs(eval_h(p, (x1, w)).value[1] - base))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 5.0
    _report(capsys, 4, "seed-mass-only-dependence", ok, f"max deviation {worst:.2e}, {dt:.2f}s")
    assert ok


def test_acceptance_05_parabolic_recursion_limit(capsys):
    t0 = time.perf_counter()
    rho = 4.0 / 3.0
    sol = SchroederSolution(rho, 1.0, tol=1e-9)
    residuals = []
    for x in (0.1, 1.0, 10.0):
        sol.phi_inverse_at(x)
        residuals.append(sol.residual)
    conv_ok = all(r < 1e-9 for r in residuals)
    inv = SchroederSolution(rho, 1.0, tol=1e-12)
    conj = max(
        abs(inv.phi_at(rho * y * (1.0 + y)) - rho * inv.phi_at(y))
        for y in (0.25, 0.5, 1.0, 2.0, 4.0)
    )
    lin = SchroederSolution(rho, 0.0)
    exact_ok = all(lin.phi_inverse_at(x) == x for x in (0.1, 1.0, 10.0))
    dt = time.perf_counter() - t0
    ok = conv_ok and conj < 1e-8 and exact_ok and dt < 2.0
    _report(capsys, 5, "recursion-machinery", ok,
            f"max residual {max(residuals):.2e}, conjugacy defect {conj:.2e}, "
            f"C=0 {'exact' if exact_ok else 'WRONG'}, {dt:.2f}s")
    assert ok


def test_acceptance_06_branching_identities(capsys):
    t0 = time.perf_counter()
    p = _params()
    rho = derived_constants(p).rho
    M = 100000
    phase = derive_seed(MASTER_SEED, 2)
    checkpoints = (10, 30, 60)
    vals = np.empty((M, len(checkpoints)))
    for r in range(M):
        gw = simulate_gw(p, SimConfig(K=1, seed=derive_seed(phase, r), horizon=60))
        for c, n in enumerate(checkpoints):
            vals[r, c] = gw.counts[n, 1] / rho**n
    extinct = float(np.mean(vals[:, -1] == 0.0))
    se_ext = math.sqrt(0.25 / M)
    ext_ok = abs(extinct - 0.5) < 3.0 * se_ext
    mean_ok = True
    details = [f"extinct {extinct:.4f} (3SE {3*se_ext:.4f})"]
    for c, n in enumerate(checkpoints):
        m = float(vals[:, c].mean())
        se = float(vals[:, c].std(ddof=1) / math.sqrt(M))
        mean_ok = mean_ok and abs(m - 1.0) < 3.0 * se
        details.append(f"mean@{n} {m:.4f} (3SE {3*se:.4f})")
    dt = time.perf_counter() - t0
    ok = ext_ok and mean_ok and dt < 30.0
    _report(capsys, 6, "branching-identities", ok, ", ".join(details) + f", {dt:.1f}s")
    assert ok


def test_acceptance_07_one_step_moments(capsys):
    t0 = time.perf_counter()
    p = _params()
    M = 100000
    phase = derive_seed(MASTER_SEED, 7)
    draws = np.empty((M, 2))
    for r in range(M):
        path = simulate_population(
            p, SimConfig(K=1000, seed=derive_seed(phase, r), horizon=1, initial=(1000, 100))
        )
        draws[r] = path.counts[1]
    p1, p2 = splitting_probs(p, (1.0, 0.1))
    ok = True
    details = []
    for i, (n0, pi) in enumerate(((1000, p1), (100, p2))):
        mean_t = 2.0 * n0 * pi
        var_t = 4.0 * n0 * pi * (1.0 - pi)
        m = draws[:, i].mean()
        s2 = draws[:, i].var(ddof=1)
        se_m = math.sqrt(var_t / M)
        m4 = np.mean((draws[:, i] - m) ** 4)
        se_v = math.sqrt(max(m4 - s2 * s2, 0.0) / M)
        ok = ok and abs(m - mean_t) < 3.0 * se_m and abs(s2 - var_t) < 3.0 * se_v
        details.append(
            f"type{i+1} mean {abs(m-mean_t)/se_m:.2f}SE var {abs(s2-var_t)/se_v:.2f}SE"
        )
    dt = time.perf_counter() - t0
    ok = ok and dt < 30.0
    _report(capsys, 7, "one-step-moments", ok, ", ".join(details) + f", {dt:.1f}s")
    assert ok


def test_acceptance_08_establishment_probability(capsys):
    t0 = time.perf_counter()
    p = _params()
    rep = establishment_probability(p, 100000, 10000, 1.0 / 3.0, MASTER_SEED)
    est = rep.metrics["estimate"].value
    width = rep.metrics["wilson_hi"].value - rep.metrics["wilson_lo"].value
    dt = time.perf_counter() - t0
    ok = abs(est - 0.5) <= 0.03 and width < 0.02 and dt < 180.0
    _report(capsys, 8, "establishment-probability", ok,
            f"estimate {est:.4f} (target 0.5), interval width {width:.4f}, {dt:.1f}s")
    assert ok


def test_acceptance_09_limit_law_trend(capsys):
    t0 = time.perf_counter()
    p = _params()
    rep = limit_law_trend(p, (25, 30, 35, 40), 4000, MASTER_SEED)
    ks_seq = [row["ks"] for row in rep.tables["ks_by_j"]]
    trend = rep.verdicts["trend"].passed
    final = rep.verdicts["final_ks"].passed
    atoms = rep.verdicts["atoms_agree_all"].passed
    dt = time.perf_counter() - t0
    ok = trend and final and atoms and dt < 600.0
    _report(capsys, 9, "limit-law-trend", ok,
            "KS " + "->".join(f"{k:.4f}" for k in ks_seq)
            + f", trend {trend}, final {final}, atoms {atoms}, {dt:.1f}s")
    assert ok


def test_acceptance_10_pathwise_prediction(capsys):
    t0 = time.perf_counter()
    p = _params()
    offsets = tuple(range(-5, 6))
    small = pathwise_prediction_check(p, 1000, 500, offsets, 0.75, MASTER_SEED)
    large = pathwise_prediction_check(p, 100000, 500, offsets, 0.75, MASTER_SEED)
    worse = []
    for o in offsets:
        e_small = small.metrics[f"mean_error_offset_{o}"].value
        e_large = large.metrics[f"mean_error_offset_{o}"].value
        if not e_large < e_small:
            worse.append(o)
    dt = time.perf_counter() - t0
    ok = not worse and dt < 600.0
    _report(capsys, 10, "pathwise-prediction", ok,
            ("errors shrink at every offset" if not worse else f"offsets not improved: {worse}")
            + f", {dt:.1f}s")
    assert ok


def test_acceptance_11_coupling_error(capsys):
    t0 = time.perf_counter()
    p = _params()
    rep = coupling_error_study(p, (1000, 10000, 100000), 400, 0.75, MASTER_SEED)
    medians = [row["median_scaled_gap_mutant"] for row in rep.tables["errors_by_K"]]
    decreasing = all(b < a for a, b in zip(medians, medians[1:]))
    dt = time.perf_counter() - t0
    ok = decreasing and rep.verdicts["medians_decreasing"].passed and dt < 600.0
    _report(capsys, 11, "coupling-error-decay", ok,
            "medians " + "->".join(f"{m:.6f}" for m in medians) + f", {dt:.1f}s")
    assert ok


REPRO_COMMANDS = [
    ["fixed-points"],
    ["flow", "--x0", "1,0.01", "--horizon", "60"],
    ["hfun", "--w-range", "0:2", "--x1-range=-1:1", "--resolution", "3"],
    ["phase", "--resolution", "5"],
    ["simulate", "--K", "500", "--horizon", "30", "--mode", "coupled"],
    ["glued", "--K", "500", "--horizon", "30"],
    ["estimate-w", "--replicates", "150", "--n-w", "25"],
    ["verify-theorem1", "--j", "18", "--replicates", "100"],
    ["verify-corollary1", "--K", "2000", "--offsets=-1..1", "--replicates", "100"],
    ["establishment", "--K", "2000", "--replicates", "150"],
    ["coupling-error", "--grid", "500,2000", "--replicates", "100"],
    ["schroeder", "--x-max", "2", "--resolution", "5"],
]


def test_acceptance_12_reproducibility(capsys, tmp_path):
    t0 = time.perf_counter()
    failures = []
    for i, argv in enumerate(REPRO_COMMANDS):
        out1 = tmp_path / f"a{i}"
        out2 = tmp_path / f"b{i}"
        code1 = main(argv + ["--seed", "42", "--out", str(out1)])
        code2 = main(argv + ["--seed", "42", "--out", str(out2)])
        if code1 != 0 or code2 != 0:
            failures.append(f"{argv[0]} exited {code1}/{code2}")
            continue
        names1 = {f.name for f in out1.iterdir()}
        names2 = {f.name for f in out2.iterdir()}
        if names1 != names2:
            failures.append(f"{argv[0]} artifact sets differ")
            continue
        for name in sorted(names1):
            b1 = (out1 / name).read_bytes()
            b2 = (out2 / name).read_bytes()
            if name == "manifest.json":
                d1, d2 = json.loads(b1), json.loads(b2)
                d1.pop("duration_s"), d2.pop("duration_s")
                d1["parameters"].pop("out"), d2["parameters"].pop("out")
                if d1 != d2:
                    failures.append(f"{argv[0]}/{name} stable content differs")
            elif b1 != b2:
                failures.append(f"{argv[0]}/{name} bytes differ")
    dt = time.perf_counter() - t0
    ok = not failures
    _report(capsys, 12, "byte-reproducibility", ok,
            (f"{len(REPRO_COMMANDS)} commands byte-stable" if ok else "; ".join(failures))
            + f", {dt:.1f}s")
    assert ok
