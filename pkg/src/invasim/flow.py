"""Deterministic dynamics: orbits, the scaling-limit function H, and the
one-dimensional Schroeder machinery certifying its growth bound.

H is the pointwise limit of n-fold applications of the density map f to a
point started a distance x / rho^n from the resident-only equilibrium:

    H(x) = lim_n  f^n((a1, 0) + x / rho^n),      x in R x R+,

equivalently (a1, 0) + lim_n g^n(x / rho^n) in translated coordinates.  It
satisfies the functional equation H(x) = f(H(x / rho)) and maps the mutant
seed mass onto the nonlinear phase of the invasion.  The evaluator below
forms the iterates directly and stops once successive increments, which decay
geometrically at rate 1/rho, fall below tolerance.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoConvergence
from .model import DensityPoint, Deviation, ModelParams, density_step

FRAC_SNAP = 1e-12


def split_log(rho: float, K: float) -> tuple[int, float]:
    """Integer and fractional part of log_rho(K), snapped at exact powers.

    A fractional part within 1e-12 of 0 or 1 collapses to 0 (rounding the
    integer part accordingly) so runs at K = rho^j do not pick up rounding
    dust.
    """
    t = math.log(K) / math.log(rho)
    n = math.floor(t)
    fr = t - n
    if fr < FRAC_SNAP:
        return n, 0.0
    if fr > 1.0 - FRAC_SNAP:
        return n + 1, 0.0
    return n, fr


@dataclass(frozen=True)
class Orbit:
    """Forward orbit of the density map, points[n+1] = f(points[n])."""

    points: np.ndarray  # shape (N+1, 2)

    def __len__(self):
        return len(self.points)


def iterate_orbit(p: ModelParams, x0: DensityPoint, N: int) -> Orbit:
    if N < 0:
        raise DomainError(f"orbit length must be >= 0, got {N}")
    x1, x2 = float(x0[0]), float(x0[1])
    if x1 < 0.0 or x2 < 0.0:
        raise DomainError(f"orbit start must lie in the positive quadrant, got {x0}")
    out = np.empty((N + 1, 2))
    out[0] = (x1, x2)
    for n in range(N):
        x1, x2 = density_step(p, (x1, x2))
        out[n + 1] = (x1, x2)
    return Orbit(points=out)


@dataclass(frozen=True)
class HEvaluation:
    """Result of one H evaluation.

    increments holds the successive iterate gaps ||a_{n+1} - a_n||_inf in the
    order they were observed; residual is the last of them.
    """

    input: Deviation
    value: DensityPoint
    iterations_used: int
    residual: float
    increments: tuple[float, ...] = field(repr=False)


def _g_orbit_end(p: ModelParams, d1: float, d2: float, n: int) -> tuple[float, float]:
    # n applications of the translated map, inlined for speed
    a1, a2, gam = p.a1, p.a2, p.gamma
    u, v = d1, d2
    for _ in range(n):
        x1 = a1 + u
        u = 2.0 * x1 * a1 / (a1 + x1 + gam * v) - a1
        v = 2.0 * v * a2 / (a2 + gam * x1 + v)
    return u, v


def eval_h(p: ModelParams, x: Deviation, tol: float = 1e-10, n_max: int = 400) -> HEvaluation:
    """Evaluate H(x) for x in R x R+ by direct iteration.

    Starts at the smallest n0 for which x / rho^n0 lies inside the forward
    invariant region E = [co1 - a1, inf) x [0, co2] with sup-norm below 0.1,
    then advances n, recomputing the full orbit g^n(x / rho^n) each time.
    Stops when two consecutive increments fall below tol and the last ratio
    is at most 0.9; raises NoConvergence at n_max otherwise.
    """
    d1, d2 = float(x[0]), float(x[1])
    if d2 < 0.0 or not (math.isfinite(d1) and math.isfinite(d2)):
        raise DomainError(f"H is defined on R x R+, got ({d1}, {d2})")
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")

    denom = 1.0 - p.gamma**2
    lo1 = (p.a1 - p.gamma * p.a2) / denom - p.a1
    hi2 = (p.a2 - p.gamma * p.a1) / denom
    rho = 2.0 * p.a2 / (p.a2 + p.gamma * p.a1)

    n0 = 0
    scale = 1.0
    while not (d1 * scale >= lo1 and d2 * scale <= hi2 and max(abs(d1), abs(d2)) * scale < 0.1):
        n0 += 1
        scale /= rho
        if n0 > n_max:
            raise DomainError(f"({d1}, {d2}) cannot be scaled into the invariant region")

    prev = _g_orbit_end(p, d1 * scale, d2 * scale, n0)
    d_prev = None
    increments: list[float] = []
    n = n0
    while n + 1 <= n_max:
        n += 1
        scale /= rho
        cur = _g_orbit_end(p, d1 * scale, d2 * scale, n)
        d_cur = max(abs(cur[0] - prev[0]), abs(cur[1] - prev[1]))
        increments.append(d_cur)
        if d_prev is not None and d_prev < tol and d_cur < tol:
            ratio = 0.0 if d_prev == 0.0 else d_cur / d_prev
            if ratio <= 0.9:
                return HEvaluation(
                    input=(d1, d2),
                    value=(p.a1 + cur[0], cur[1]),
                    iterations_used=n,
                    residual=d_cur,
                    increments=tuple(increments),
                )
        prev = cur
        d_prev = d_cur
    raise NoConvergence(
        f"H evaluation at ({d1}, {d2}) did not meet tol={tol} within n_max={n_max}"
    )


def abel_residual(p: ModelParams, x: Deviation, tol: float = 1e-10) -> float:
    """Sup-norm defect of H(x) = f(H(x / rho)) at the given point."""
    rho = 2.0 * p.a2 / (p.a2 + p.gamma * p.a1)
    left = eval_h(p, x, tol=tol).value
    inner = eval_h(p, (x[0] / rho, x[1] / rho), tol=tol).value
    right = density_step(p, inner)
    return max(abs(left[0] - right[0]), abs(left[1] - right[1]))


def limit_initial_condition(
    p: ModelParams, w: float, K: float, tol: float = 1e-10, n_max: int = 400
) -> DensityPoint:
    """Initial point of the limiting deterministic orbit at capacity K.

    Evaluates H at the mutant seed (0, w) rescaled by rho to the negative
    fractional part of log_rho(K); w = 0 returns the resident-only point.
    """
    if w < 0.0:
        raise DomainError(f"seed mass must be >= 0, got {w}")
    if not K > 1.0:
        raise DomainError(f"capacity must exceed 1, got {K}")
    rho = 2.0 * p.a2 / (p.a2 + p.gamma * p.a1)
    _, fr = split_log(rho, K)
    return eval_h(p, (0.0, rho ** (-fr) * w), tol=tol, n_max=n_max).value


class SchroederSolution:
    """Limit of the rescaled quadratic recursion p(y) = rho*y*(1 + C*y).

    phi_inverse_at(x) returns lim_n p^n(x / rho^n) as a Decimal.  The limit
    grows roughly like exp(x^(log2/log rho)) and overflows binary64 already
    for moderate x, so the orbit is evaluated in adaptive-precision decimal
    arithmetic, with the precision and depth sized by a fast log-space
    pre-pass in binary64.  Convergence is certified by comparing the full
    orbits at the successive depths n-1 and n: their difference must fall
    below tol, and is recorded in `residual` with the accepted depth in
    `n_used`.  The value is 0 at 0, nondecreasing in x and at least x;
    C = 0 makes the recursion exactly linear, so the value equals x.

    phi_at(t) inverts the limit by monotone bisection (the conjugacy is
    strictly increasing), so phi_at(phi_inverse_at(x)) recovers x.
    """

    def __init__(self, rho: float, C: float, tol: float = 1e-12, n_max: int = 50000):
        if not rho > 1.0:
            raise DomainError(f"growth rate must exceed 1, got {rho}")
        if C < 0.0:
            raise DomainError(f"quadratic coefficient must be >= 0, got {C}")
        if not tol > 0.0:
            raise DomainError(f"tol must be positive, got {tol}")
        self.rho = rho
        self.C = C
        self.tol = tol
        self.n_max = n_max
        self.n_used = 0
        self.residual = 0.0

    def _log_limit(self, x: float) -> float:
        """Natural log of the C = 1 limit at x, via the log-space recursion."""
        lnrho = math.log(self.rho)
        n = max(1, math.ceil((math.log(x) + 12.0 * math.log(10.0)) / lnrho) + 5)
        lam = math.log(x) - n * lnrho
        for _ in range(n):
            if lam > 0.0:
                lam = lnrho + 2.0 * lam + math.log1p(math.exp(-lam))
            else:
                lam = lnrho + lam + math.log1p(math.exp(lam))
        return lam

    def phi_inverse_at(self, x: float) -> decimal.Decimal:
        if x < 0.0:
            raise DomainError(f"query must be >= 0, got {x}")
        if x == 0.0:
            self.n_used = 0
            self.residual = 0.0
            return decimal.Decimal(0)
        if self.C == 0.0:
            self.n_used = 0
            self.residual = 0.0
            return decimal.Decimal(x)
        # rescaling by C reduces to the C = 1 recursion
        cx = self.C * x
        lnrho = math.log(self.rho)
        lam = self._log_limit(cx)
        digits = max(40, int(lam / math.log(10.0)) + 30)
        # successive-depth differences decay like exp(lam) * cx * rho^-n
        n = max(
            2,
            math.ceil(
                (lam + math.log(cx) - math.log(self.rho - 1.0) - math.log(self.tol))
                / lnrho
            )
            + 8
            + math.ceil(3.0 * math.log(10.0) / lnrho),
        )
        with decimal.localcontext() as ctx:
            ctx.prec = digits
            rho_d = decimal.Decimal(self.rho)
            one = decimal.Decimal(1)
            cx_d = decimal.Decimal(self.C) * decimal.Decimal(x)
            tol_d = decimal.Decimal(self.tol)

            def depth_value(depth: int) -> decimal.Decimal:
                y = cx_d / rho_d**depth
                for _ in range(depth):
                    y = rho_d * y * (one + y)
                return y

            while n <= self.n_max:
                prev, cur = depth_value(n - 1), depth_value(n)
                diff = abs(cur - prev)
                if diff < tol_d:
                    self.n_used = n
                    self.residual = float(diff)
                    return cur / decimal.Decimal(self.C)
                # use the measured difference to extend the depth
                n += max(1, math.ceil(float((diff / tol_d).ln()) / lnrho)) + 5
        raise NoConvergence(
            f"recursion limit at x={x} (rho={self.rho}, C={self.C}) "
            f"did not meet tol={self.tol} within n_max={self.n_max}"
        )

    def phi_at(self, value, tol: float = 1e-12) -> float:
        """Inverse query: the u with phi_inverse_at(u) = value, by bisection.

        A float log-space pass brackets the root cheaply first: the limit
        grows double-exponentially, so probing the high-precision evaluator
        far above the root would demand absurd depth and precision.  The
        bracket is then widened by its own width to absorb the float pass's
        rounding and refined with full-precision probes.
        """
        t = decimal.Decimal(value)
        if t < 0:
            raise DomainError(f"target must be >= 0, got {value}")
        if t == 0 or self.C == 0.0:
            return float(t)
        ln_ct = float(t.ln()) + math.log(self.C)
        hi = 1.0
        while self._log_limit(self.C * hi) < ln_ct:
            hi *= 2.0
        lo = 0.0
        while hi - lo > 1e-6 * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if self._log_limit(self.C * mid) < ln_ct:
                lo = mid
            else:
                hi = mid
        span = hi - lo
        lo = max(0.0, lo - span)
        hi = hi + span
        while hi - lo > tol * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if self.phi_inverse_at(mid) < t:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def schroeder_limit(
    rho: float, C: float, x: float, tol: float = 1e-12, n_max: int = 50000
) -> decimal.Decimal:
    return SchroederSolution(rho, C, tol=tol, n_max=n_max).phi_inverse_at(x)


def growth_bound_probe(p: ModelParams, x: Deviation, n: int) -> float:
    """Empirical witness for the geometric growth bound of translated orbits.

    Returns max over m = 1..n of ||g^m(x / rho^n)||_inf / rho^(m - n); the
    theory guarantees this stays bounded as n grows, with the bound monotone
    in ||x||.
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    d1, d2 = float(x[0]), float(x[1])
    if d2 < 0.0:
        raise DomainError(f"second coordinate must be >= 0, got {d2}")
    rho = 2.0 * p.a2 / (p.a2 + p.gamma * p.a1)
    a1, a2, gam = p.a1, p.a2, p.gamma
    u, v = d1 / rho**n, d2 / rho**n
    best = 0.0
    for m in range(1, n + 1):
        x1 = a1 + u
        u = 2.0 * x1 * a1 / (a1 + x1 + gam * v) - a1
        v = 2.0 * v * a2 / (a2 + gam * x1 + v)
        best = max(best, max(abs(u), abs(v)) / rho ** (m - n))
    return best


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid of density points with one-step displacements f(x) - x."""

    x1_axis: np.ndarray
    x2_axis: np.ndarray
    points: np.ndarray  # shape (len(x2_axis) * len(x1_axis), 2), x1 fastest
    displacements: np.ndarray


def phase_grid(
    p: ModelParams,
    x1_range: tuple[float, float],
    x2_range: tuple[float, float],
    resolution: int,
) -> PhaseGrid:
    if resolution < 2:
        raise DomainError(f"resolution must be >= 2, got {resolution}")
    if x1_range[0] < 0.0 or x2_range[0] < 0.0:
        raise DomainError("phase grid ranges must lie in the positive quadrant")
    x1_axis = np.linspace(x1_range[0], x1_range[1], resolution)
    x2_axis = np.linspace(x2_range[0], x2_range[1], resolution)
    pts = np.empty((resolution * resolution, 2))
    disp = np.empty_like(pts)
    k = 0
    for x2 in x2_axis:
        for x1 in x1_axis:
            f1, f2 = density_step(p, (x1, x2))
            pts[k] = (x1, x2)
            disp[k] = (f1 - x1, f2 - x2)
            k += 1
    return PhaseGrid(x1_axis=x1_axis, x2_axis=x2_axis, points=pts, displacements=disp)


@dataclass(frozen=True)
class HSurfaceRow:
    w: float
    x1: float
    H1: float
    H2: float
    iterations: int
    residual: float
    error: str | None = None


@dataclass(frozen=True)
class HSurface:
    rows: tuple[HSurfaceRow, ...]


def h_surface(
    p: ModelParams,
    w_range: tuple[float, float],
    x1_range: tuple[float, float],
    resolution: int,
    tol: float = 1e-10,
    n_max: int = 400,
) -> HSurface:
    """Tabulate H over a (w, x1) grid; per-node failures are recorded, not fatal."""
    if resolution < 2:
        raise DomainError(f"resolution must be >= 2, got {resolution}")
    if w_range[0] < 0.0:
        raise DomainError(f"seed-mass range must start at >= 0, got {w_range[0]}")
    ws = np.linspace(w_range[0], w_range[1], resolution)
    x1s = np.linspace(x1_range[0], x1_range[1], resolution)
    rows = []
    for w in ws:
        for x1 in x1s:
            try:
                ev = eval_h(p, (x1, w), tol=tol, n_max=n_max)
                rows.append(
                    HSurfaceRow(
                        w=float(w),
                        x1=float(x1),
                        H1=ev.value[0],
                        H2=ev.value[1],
                        iterations=ev.iterations_used,
                        residual=ev.residual,
                    )
                )
            except (DomainError, NoConvergence) as exc:
                rows.append(
                    HSurfaceRow(
                        w=float(w),
                        x1=float(x1),
                        H1=float("nan"),
                        H2=float("nan"),
                        iterations=0,
                        residual=float("nan"),
                        error=str(exc),
                    )
                )
    return HSurface(rows=tuple(rows))
