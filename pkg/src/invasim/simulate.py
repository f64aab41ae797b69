"""Exact simulation of the two-type splitting process and its approximations.

Three engines share one convention: populations are pairs of even counts
(after generation 0), each individual independently splits in two or dies,
and a dead type stays dead.

* simulate_population: the exact density-dependent process Z.  In fast mode
  each generation draws one binomial per living type.  In coupled mode it is
  driven by per-individual uniforms shared with the approximating process.
* simulate_gw: the branching approximation Y with state-independent success
  probabilities 1/2 (resident) and rho/2 (mutant).
* simulate_coupled: Z and Y advanced together from the same uniforms, one
  block per type per generation of size max(Z_i, Y_i); individual j of Z
  splits iff its uniform is at or below the density-dependent threshold, of
  Y iff at or below the constant one.

Draw order is fixed and documented: within a generation, type 1 before
type 2; a type consumes nothing in fast mode once extinct, while in coupled
mode a block is sized by the larger of the two processes.  Thresholds are
computed from densities Z/K, numerically equal to the count form
a_i*K / (a_i*K + ...).

The normalized mutant line rho^(-n) Y_2(n) is a nonnegative martingale; its
terminal value at a fixed truncation depth estimates the limit mass W that
seeds the deterministic approximation (estimate_w, glued_approx).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, DomainError, OverflowGuard
from .flow import split_log
from .model import DensityPoint, ModelParams, density_step, splitting_probs
from .seeds import make_rng

# Per-path cap on uniforms consumed in coupled mode.
BUDGET_DRAWS = 2_000_000_000
# Counts above this raise OverflowGuard (2^62; doubling still fits in int64).
MAX_COUNT = 1 << 62
# Uniform blocks are generated in chunks of this size to bound memory.
_CHUNK = 1 << 22

MODES = ("fast", "coupled")


@dataclass(frozen=True)
class SimConfig:
    """Run configuration for one simulated path.

    The canonical start is (floor(a1*K), 1); passing ``initial`` overrides it
    and marks the run non-canonical in reports.
    """

    K: int
    seed: int
    horizon: int
    mode: str = "fast"
    initial: tuple[int, int] | None = None

    def __post_init__(self):
        if self.K < 1:
            raise DomainError(f"K must be >= 1, got {self.K}")
        if self.horizon < 0:
            raise DomainError(f"horizon must be >= 0, got {self.horizon}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.initial is not None:
            z1, z2 = self.initial
            if z1 < 0 or z2 < 0:
                raise DomainError(f"initial counts must be >= 0, got {self.initial}")

    @property
    def canonical(self) -> bool:
        return self.initial is None


@dataclass(frozen=True)
class PopulationPath:
    counts: np.ndarray  # shape (horizon+1, 2), int64
    config: SimConfig
    params: ModelParams

    @property
    def densities(self) -> np.ndarray:
        return self.counts / self.config.K


@dataclass(frozen=True)
class GWPath:
    counts: np.ndarray
    config: SimConfig
    params: ModelParams

    @property
    def densities(self) -> np.ndarray:
        return self.counts / self.config.K


@dataclass(frozen=True)
class WSample:
    value: float
    truncation_n: int
    extinct: bool


@dataclass(frozen=True)
class GluedPath:
    """Branching densities up to switch_index, deterministic iteration after."""

    densities: np.ndarray  # shape (horizon+1, 2)
    switch_index: int
    c: float
    config: SimConfig
    params: ModelParams


def _initial_counts(p: ModelParams, cfg: SimConfig) -> tuple[int, int]:
    if cfg.initial is not None:
        return int(cfg.initial[0]), int(cfg.initial[1])
    return int(math.floor(p.a1 * cfg.K)), 1


def _checked_double(splits: int) -> int:
    if splits > MAX_COUNT // 2:
        raise OverflowGuard(f"count 2*{splits} would exceed {MAX_COUNT}")
    return 2 * splits


def simulate_population(p: ModelParams, cfg: SimConfig) -> PopulationPath:
    """Exact path of the density-dependent process Z.

    Fast mode: per generation one binomial draw per living type, type 1
    first.  Coupled mode delegates to simulate_coupled and returns
    its Z component.
    """
    if cfg.mode == "coupled":
        return simulate_coupled(p, cfg)[0]
    rng = make_rng(cfg.seed)
    z1, z2 = _initial_counts(p, cfg)
    out = np.zeros((cfg.horizon + 1, 2), dtype=np.int64)
    out[0] = (z1, z2)
    K = float(cfg.K)
    for n in range(1, cfg.horizon + 1):
        p1, p2 = splitting_probs(p, (z1 / K, z2 / K))
        if z1 > 0:
            z1 = _checked_double(int(rng.binomial(z1, p1)))
        if z2 > 0:
            z2 = _checked_double(int(rng.binomial(z2, p2)))
        out[n] = (z1, z2)
    return PopulationPath(counts=out, config=cfg, params=p)


def simulate_gw(p: ModelParams, cfg: SimConfig) -> GWPath:
    """Branching approximation Y: success probabilities 1/2 and rho/2."""
    rng = make_rng(cfg.seed)
    y1, y2 = _initial_counts(p, cfg)
    t2 = p.a2 / (p.a2 + p.gamma * p.a1)  # rho/2
    out = np.zeros((cfg.horizon + 1, 2), dtype=np.int64)
    out[0] = (y1, y2)
    for n in range(1, cfg.horizon + 1):
        if y1 > 0:
            y1 = _checked_double(int(rng.binomial(y1, 0.5)))
        if y2 > 0:
            y2 = _checked_double(int(rng.binomial(y2, t2)))
        out[n] = (y1, y2)
    return GWPath(counts=out, config=cfg, params=p)


def _coupled_block(rng, n_a: int, n_b: int, t_a: float, t_b: float, budget_left: int):
    """Split counts for two processes sharing one uniform block.

    Draws max(n_a, n_b) uniforms in chunks; individual j of process A splits
    iff u_j <= t_a (j <= n_a), of B iff u_j <= t_b (j <= n_b).
    """
    k = max(n_a, n_b)
    if k > budget_left:
        raise BudgetExceeded(
            f"coupled path needs {k} more uniforms with only {budget_left} left "
            f"in the {BUDGET_DRAWS} budget"
        )
    splits_a = 0
    splits_b = 0
    off = 0
    while off < k:
        m = min(_CHUNK, k - off)
        u = rng.random(m)
        if off < n_a:
            splits_a += int(np.count_nonzero(u[: min(m, n_a - off)] <= t_a))
        if off < n_b:
            splits_b += int(np.count_nonzero(u[: min(m, n_b - off)] <= t_b))
        off += m
    return splits_a, splits_b, k


def simulate_coupled(p: ModelParams, cfg: SimConfig) -> tuple[PopulationPath, GWPath]:
    """Z and Y driven by shared per-individual uniforms.

    Each generation consumes one type-1 block of max(Z1, Y1) uniforms, then
    one type-2 block of max(Z2, Y2); a block is skipped only when both
    processes have lost the type.  Marginally each path has the same law as
    its uncoupled simulator.
    """
    rng = make_rng(cfg.seed)
    z1, z2 = _initial_counts(p, cfg)
    y1, y2 = z1, z2
    ty1 = 0.5
    ty2 = p.a2 / (p.a2 + p.gamma * p.a1)
    zs = np.zeros((cfg.horizon + 1, 2), dtype=np.int64)
    ys = np.zeros((cfg.horizon + 1, 2), dtype=np.int64)
    zs[0] = (z1, z2)
    ys[0] = (y1, y2)
    K = float(cfg.K)
    budget_left = BUDGET_DRAWS
    for n in range(1, cfg.horizon + 1):
        tz1, tz2 = splitting_probs(p, (z1 / K, z2 / K))
        if z1 > 0 or y1 > 0:
            sz, sy, used = _coupled_block(rng, z1, y1, tz1, ty1, budget_left)
            budget_left -= used
            z1 = _checked_double(sz)
            y1 = _checked_double(sy)
        if z2 > 0 or y2 > 0:
            sz, sy, used = _coupled_block(rng, z2, y2, tz2, ty2, budget_left)
            budget_left -= used
            z2 = _checked_double(sz)
            y2 = _checked_double(sy)
        zs[n] = (z1, z2)
        ys[n] = (y1, y2)
    return (
        PopulationPath(counts=zs, config=cfg, params=p),
        GWPath(counts=ys, config=cfg, params=p),
    )


def estimate_w(p: ModelParams, seed: int, n_w: int = 60) -> WSample:
    """Terminal value of the normalized mutant martingale at depth n_w.

    Runs the single-ancestor mutant line for n_w generations (one binomial
    per generation while alive) and returns rho^(-n_w) times the final count.
    """
    if n_w < 1:
        raise DomainError(f"n_w must be >= 1, got {n_w}")
    rng = make_rng(seed)
    t2 = p.a2 / (p.a2 + p.gamma * p.a1)
    rho = 2.0 * t2
    y = 1
    for _ in range(n_w):
        if y == 0:
            break
        y = _checked_double(int(rng.binomial(y, t2)))
    return WSample(value=rho ** (-n_w) * y, truncation_n=n_w, extinct=(y == 0))


def glued_approx(p: ModelParams, cfg: SimConfig, c: float = 0.75) -> GluedPath:
    """Branching density path up to n_c = floor(c*log_rho(K)), then f-iteration."""
    if not (0.5 < c <= 1.0):
        raise DomainError(f"c must lie in (1/2, 1], got {c}")
    if cfg.K < 2:
        raise DomainError(f"glued approximation needs K >= 2, got {cfg.K}")
    rho = 2.0 * p.a2 / (p.a2 + p.gamma * p.a1)
    n1, fr = split_log(rho, cfg.K)
    n_c = math.floor(c * (n1 + fr))
    gw = simulate_gw(p, SimConfig(K=cfg.K, seed=cfg.seed, horizon=min(cfg.horizon, n_c),
                                  mode=cfg.mode, initial=cfg.initial))
    dens = np.empty((cfg.horizon + 1, 2))
    upto = min(cfg.horizon, n_c)
    dens[: upto + 1] = gw.counts[: upto + 1] / cfg.K
    x = (dens[upto, 0], dens[upto, 1])
    for n in range(upto + 1, cfg.horizon + 1):
        x = density_step(p, x)
        dens[n] = x
    return GluedPath(densities=dens, switch_index=n_c, c=c, config=cfg, params=p)


def noise_residual(p: ModelParams, path: PopulationPath) -> np.ndarray:
    """Rescaled one-step deviations sqrt(K) * (X(n+1) - f(X(n)))."""
    X = path.densities
    if len(X) < 2:
        raise DomainError("need a path of length >= 2")
    out = np.empty((len(X) - 1, 2))
    root_k = math.sqrt(path.config.K)
    for n in range(len(X) - 1):
        f1, f2 = density_step(p, (X[n, 0], X[n, 1]))
        out[n, 0] = root_k * (X[n + 1, 0] - f1)
        out[n, 1] = root_k * (X[n + 1, 1] - f2)
    return out


def time_indices(rho: float, K: int, c: float) -> tuple[int, int, float]:
    """(n1, nc, frac): establishment depth, switch depth, fractional part.

    n1 = floor(log_rho K), nc = floor(c * log_rho K); the fractional part is
    snapped to 0 within 1e-12 of an integer so exact powers of rho stay exact.
    """
    if K < 2:
        raise DomainError(f"K must be >= 2, got {K}")
    if not (0.5 < c <= 1.0):
        raise DomainError(f"c must lie in (1/2, 1], got {c}")
    if not rho > 1.0:
        raise DomainError(f"rho must exceed 1, got {rho}")
    n1, fr = split_log(rho, K)
    nc = math.floor(c * (n1 + fr))
    return n1, nc, fr
