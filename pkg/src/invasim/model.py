"""Core model definitions for the two-type density-dependent splitting process.

A habitat of scale K carries two cell types.  Each generation every cell
either splits in two or dies, with success probabilities that decay with the
current crowding felt by its type:

    p1(x) = a1 / (a1 + x1 + gamma * x2)
    p2(x) = a2 / (a2 + gamma * x1 + x2)

where x = (x1, x2) are the population sizes relative to K.  The expected
densities follow the planar map

    f(x) = (2 x1 a1 / (a1 + x1 + gamma * x2),  2 x2 a2 / (a2 + gamma * x1 + x2)).

This module owns the parameter triple and its validation, the maps in raw and
in translated coordinates, fixed points with stability classes, the Jacobian,
and the derived constants used throughout: the mutant growth rate rho at the
resident-only equilibrium, the time-scale coefficient b = 1/ln(rho), the
linearization A at that equilibrium, and a global bound rho_tilde on the
Jacobian norm.

All operations are pure; every returned object is immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Points and deviations travel as plain (float, float) tuples.
DensityPoint = tuple[float, float]
Deviation = tuple[float, float]

# |eigenvalue modulus - 1| below this is reported as marginal rather than
# silently classified to one side.
STABILITY_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Parameter triple (a1, a2, gamma).

    a1, a2 are the per-type capacity coefficients, gamma in (0, 1) the
    cross-type interaction weight.  Construction enforces positivity and the
    coexistence condition a1 - gamma*a2 > 0, a2 - gamma*a1 > 0; violations
    raise DomainError listing every failed constraint.
    """

    a1: float
    a2: float
    gamma: float

    def __post_init__(self):
        problems = []
        if not (self.a1 > 0 and math.isfinite(self.a1)):
            problems.append(f"a1 must be positive and finite, got {self.a1}")
        if not (self.a2 > 0 and math.isfinite(self.a2)):
            problems.append(f"a2 must be positive and finite, got {self.a2}")
        if not (0.0 < self.gamma < 1.0):
            problems.append(f"gamma must lie in (0, 1), got {self.gamma}")
        if not problems:
            if not self.a1 - self.gamma * self.a2 > 0:
                problems.append(
                    f"coexistence requires a1 - gamma*a2 > 0, "
                    f"got {self.a1 - self.gamma * self.a2}"
                )
            if not self.a2 - self.gamma * self.a1 > 0:
                problems.append(
                    f"coexistence requires a2 - gamma*a1 > 0, "
                    f"got {self.a2 - self.gamma * self.a1}"
                )
        if problems:
            raise DomainError("; ".join(problems))


def validate_params(a1: float, a2: float, gamma: float) -> ModelParams:
    """Coerce to float and construct a validated ModelParams."""
    return ModelParams(float(a1), float(a2), float(gamma))


@dataclass(frozen=True)
class FixedPoint:
    point: DensityPoint
    stability: str  # stable | unstable | saddle | marginal


@dataclass(frozen=True)
class FixedPointSet:
    """The four equilibria of the density map.

    ex: total extinction (0, 0); re: resident-only (a1, 0); mu: mutant-only
    (0, a2); co: coexistence.  Under the coexistence condition ex is
    unstable, re and mu are saddles and co is stable.
    """

    ex: FixedPoint
    re: FixedPoint
    mu: FixedPoint
    co: FixedPoint

    def __iter__(self):
        return iter((self.ex, self.re, self.mu, self.co))


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from the parameter triple.

    rho: mutant offspring mean at the resident-only equilibrium, > 1.
    b: 1/ln(rho); the mutant needs about b*ln(K) generations to establish.
    A: Jacobian of the density map at the resident-only equilibrium.
    rho_tilde: supremum of the row-sum norm of the Jacobian over the positive
        quadrant; equals 2, attained at the origin.
    """

    rho: float
    b: float
    A: np.ndarray
    rho_tilde: float


def splitting_probs(p: ModelParams, x: DensityPoint) -> tuple[float, float]:
    """Success probabilities (p1, p2) at density x, both in (0, 1]."""
    x1, x2 = x
    p1 = p.a1 / (p.a1 + x1 + p.gamma * x2)
    p2 = p.a2 / (p.a2 + p.gamma * x1 + x2)
    return p1, p2


def offspring_means(p: ModelParams, x: DensityPoint) -> tuple[float, float]:
    """Mean offspring numbers (m1, m2) = (2*p1, 2*p2) at density x."""
    p1, p2 = splitting_probs(p, x)
    return 2.0 * p1, 2.0 * p2


def density_step(p: ModelParams, x: DensityPoint) -> DensityPoint:
    """One generation of the deterministic density dynamics, f(x)."""
    x1, x2 = x
    return (
        2.0 * x1 * p.a1 / (p.a1 + x1 + p.gamma * x2),
        2.0 * x2 * p.a2 / (p.a2 + p.gamma * x1 + x2),
    )


def deviation_step(p: ModelParams, d: Deviation) -> Deviation:
    """The density dynamics in coordinates centered at the resident-only point.

    g(d) = f((a1, 0) + d) - (a1, 0).  Requires d1 > -a1 and d2 >= 0 so the
    shifted point stays in the domain of f.  The region
    E = [co1 - a1, inf) x [0, co2] is forward invariant.
    """
    d1, d2 = d
    if d1 <= -p.a1 or d2 < 0.0:
        raise DomainError(
            f"deviation ({d1}, {d2}) leaves the domain: need d1 > {-p.a1}, d2 >= 0"
        )
    f1, f2 = density_step(p, (p.a1 + d1, d2))
    return f1 - p.a1, f2


def jacobian_at(p: ModelParams, x: DensityPoint) -> np.ndarray:
    """Exact Jacobian of the density map at x."""
    x1, x2 = x
    d1 = p.a1 + x1 + p.gamma * x2
    d2 = p.a2 + p.gamma * x1 + x2
    return np.array(
        [
            [2.0 * p.a1 * (p.a1 + p.gamma * x2) / d1**2, -2.0 * p.a1 * x1 * p.gamma / d1**2],
            [-2.0 * p.a2 * x2 * p.gamma / d2**2, 2.0 * p.a2 * (p.a2 + p.gamma * x1) / d2**2],
        ]
    )


def _classify(moduli: np.ndarray) -> str:
    if np.any(np.abs(moduli - 1.0) < STABILITY_TOL):
        return "marginal"
    if np.all(moduli < 1.0):
        return "stable"
    if np.all(moduli > 1.0):
        return "unstable"
    return "saddle"


def fixed_points(p: ModelParams) -> FixedPointSet:
    """The four equilibria with eigenvalue-based stability classes."""
    denom = 1.0 - p.gamma**2
    points = {
        "ex": (0.0, 0.0),
        "re": (p.a1, 0.0),
        "mu": (0.0, p.a2),
        "co": ((p.a1 - p.gamma * p.a2) / denom, (p.a2 - p.gamma * p.a1) / denom),
    }
    classified = {}
    for name, pt in points.items():
        moduli = np.abs(np.linalg.eigvals(jacobian_at(p, pt)))
        classified[name] = FixedPoint(point=pt, stability=_classify(moduli))
    return FixedPointSet(**classified)


def derived_constants(p: ModelParams) -> DerivedConstants:
    """rho, b = 1/ln(rho), the linearization A at (a1, 0), and rho_tilde.

    A = [[1/2, -gamma/2], [0, rho]]; its row-sum norm equals rho and it
    contracts the mutant-free axis by exactly 1/2.  rho_tilde = 2: the
    row sums of the Jacobian are 2*a_i*(a_i + gamma*(x1 + x2)) / D_i^2 with
    D_i the respective denominators; each is maximal at the origin where the
    Jacobian is diag(2, 2).
    """
    rho = 2.0 * p.a2 / (p.a2 + p.gamma * p.a1)
    A = np.array([[0.5, -p.gamma / 2.0], [0.0, rho]])
    return DerivedConstants(rho=rho, b=1.0 / math.log(rho), A=A, rho_tilde=2.0)
