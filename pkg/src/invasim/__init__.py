"""Two-type density-dependent binary splitting: simulation and limit analysis.

A resident population near its equilibrium is invaded by a single mutant.
Each individual splits in two or dies, with a success probability that
decays with the scaled population densities.  This package provides

- the exact finite-population simulation and a coupled branching-process
  approximation driven by shared uniforms (:mod:`invasim.simulate`),
- the deterministic density map, its fixed points, linearization and
  derived growth constants (:mod:`invasim.model`),
- the deterministic flow, the scaling-limit function that maps a martingale
  limit to the state reached at the establishment depth, and the auxiliary
  quadratic recursion (:mod:`invasim.flow`),
- Monte Carlo experiments that confront simulated paths with the limit
  predictions (:mod:`invasim.experiments`),
- delimited/JSON writers, manifests and figure rendering
  (:mod:`invasim.output`, :mod:`invasim.plots`), and a CLI
  (``invasim <subcommand>``, :mod:`invasim.cli`).
"""

from .errors import (
    BudgetExceeded,
    DomainError,
    EmptySample,
    NoConvergence,
    OverflowGuard,
)
from .experiments import (
    EmpiricalDistribution,
    ExperimentReport,
    Metric,
    Verdict,
    coupling_error_study,
    establishment_probability,
    ks_distance,
    limit_law_check,
    limit_law_trend,
    pathwise_prediction_check,
    w_sample_report,
    wilson_interval,
)
from .flow import (
    HEvaluation,
    HSurface,
    HSurfaceRow,
    Orbit,
    PhaseGrid,
    SchroederSolution,
    abel_residual,
    eval_h,
    growth_bound_probe,
    h_surface,
    iterate_orbit,
    limit_initial_condition,
    phase_grid,
    schroeder_limit,
    split_log,
)
from .model import (
    DerivedConstants,
    FixedPoint,
    FixedPointSet,
    ModelParams,
    density_step,
    derived_constants,
    deviation_step,
    fixed_points,
    jacobian_at,
    offspring_means,
    splitting_probs,
    validate_params,
)
from .seeds import derive_seed, make_rng
from .simulate import (
    GluedPath,
    GWPath,
    PopulationPath,
    SimConfig,
    WSample,
    estimate_w,
    glued_approx,
    noise_residual,
    simulate_coupled,
    simulate_gw,
    simulate_population,
    time_indices,
)
from .version import __version__

__all__ = [
    "BudgetExceeded",
    "DomainError",
    "EmptySample",
    "NoConvergence",
    "OverflowGuard",
    "EmpiricalDistribution",
    "ExperimentReport",
    "Metric",
    "Verdict",
    "coupling_error_study",
    "establishment_probability",
    "ks_distance",
    "limit_law_check",
    "limit_law_trend",
    "pathwise_prediction_check",
    "w_sample_report",
    "wilson_interval",
    "HEvaluation",
    "HSurface",
    "HSurfaceRow",
    "Orbit",
    "PhaseGrid",
    "SchroederSolution",
    "abel_residual",
    "eval_h",
    "growth_bound_probe",
    "h_surface",
    "iterate_orbit",
    "limit_initial_condition",
    "phase_grid",
    "schroeder_limit",
    "split_log",
    "DerivedConstants",
    "FixedPoint",
    "FixedPointSet",
    "ModelParams",
    "density_step",
    "derived_constants",
    "deviation_step",
    "fixed_points",
    "jacobian_at",
    "offspring_means",
    "splitting_probs",
    "validate_params",
    "derive_seed",
    "make_rng",
    "GluedPath",
    "GWPath",
    "PopulationPath",
    "SimConfig",
    "WSample",
    "estimate_w",
    "glued_approx",
    "noise_residual",
    "simulate_coupled",
    "simulate_gw",
    "simulate_population",
    "time_indices",
    "__version__",
]
