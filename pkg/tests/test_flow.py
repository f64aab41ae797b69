"""Unit tests for the deterministic flow, the limit function H, and the
parabolic-recursion machinery."""

from __future__ import annotations

import decimal
import math

import numpy as np
import pytest

from conftest import random_params
from invasim import (
    DomainError,
    NoConvergence,
    SchroederSolution,
    abel_residual,
    density_step,
    derived_constants,
    eval_h,
    fixed_points,
    growth_bound_probe,
    h_surface,
    iterate_orbit,
    limit_initial_condition,
    phase_grid,
    schroeder_limit,
    validate_params,
)
from invasim.flow import split_log


# ---------------------------------------------------------------------------
# split_log


def test_split_log_frozen_values():
    assert split_log(2.0, 1024.0) == (10, 0.0)
    n, fr = split_log(4.0 / 3.0, 100000.0)
    assert n == 40
    assert abs(fr - 0.019613898255478546) < 1e-15


def test_split_log_snaps_exact_powers_from_both_sides():
    assert split_log(2.0, 2**30 * (1 + 5e-13)) == (30, 0.0)
    assert split_log(2.0, 2**30 * (1 - 5e-13)) == (30, 0.0)


def test_split_log_generic_fraction_in_unit_interval():
    rng = np.random.default_rng(11)
    for _ in range(50):
        rho = float(rng.uniform(1.1, 1.9))
        K = float(rng.uniform(10.0, 1e6))
        n, fr = split_log(rho, K)
        assert 0.0 <= fr < 1.0
        assert abs(n + fr - math.log(K) / math.log(rho)) < 1e-9


# ---------------------------------------------------------------------------
# orbits of the density map


def test_orbit_length_and_start(p):
    orb = iterate_orbit(p, (1.0, 0.01), 37)
    assert len(orb) == 38
    assert tuple(orb.points[0]) == (1.0, 0.01)


def test_orbit_stays_at_fixed_points(p):
    for fp in fixed_points(p):
        orb = iterate_orbit(p, fp.point, 50)
        assert np.max(np.abs(orb.points - np.array(fp.point))) < 1e-12


def test_orbit_converges_to_coexistence_point(p):
    co = np.array(fixed_points(p).co.point)
    orb = iterate_orbit(p, (1.0, 0.01), 200)
    assert np.max(np.abs(orb.points[-1] - co)) < 1e-8


def test_interior_orbits_reach_coexistence_from_500_random_starts():
    rng = np.random.default_rng(12)
    p = validate_params(1.0, 1.0, 0.5)
    co = np.array(fixed_points(p).co.point)
    for _ in range(500):
        x = (float(rng.uniform(1e-3, 5.0)), float(rng.uniform(1e-3, 5.0)))
        for _ in range(10000):
            if max(abs(x[0] - co[0]), abs(x[1] - co[1])) < 1e-6:
                break
            x = density_step(p, x)
        else:
            pytest.fail(f"orbit from {x} did not reach the interior equilibrium")


# ---------------------------------------------------------------------------
# the limit function H


def test_eval_h_at_origin_is_resident_point(p):
    ev = eval_h(p, (0.0, 0.0))
    assert ev.value == (1.0, 0.0)


def test_eval_h_frozen_value(p):
    ev = eval_h(p, (0.0, 1.0))
    assert abs(ev.value[0] - 0.8594248158113569) < 1e-12
    assert abs(ev.value[1] - 0.37602010370932054) < 1e-12
    assert ev.iterations_used == 72
    assert ev.residual < 1e-10


def test_eval_h_residual_and_increment_decay(p):
    rho = derived_constants(p).rho
    rng = np.random.default_rng(21)
    for _ in range(10):
        x = (float(rng.uniform(-2.0, 3.0)), float(rng.uniform(0.0, 4.0)))
        ev = eval_h(p, x)
        assert ev.residual < 1e-10
        tail = ev.increments[-10:]
        for a, b in zip(tail, tail[1:]):
            if a > 0.0:
                assert b / a <= 1.0 / rho + 0.05


def test_eval_h_lands_in_invariant_region():
    # random triples can sit close to rho = 1, where convergence is slow, so
    # this property check runs with a generous iteration budget
    rng = np.random.default_rng(22)
    for _ in range(10):
        p = random_params(rng)
        co1, co2 = fixed_points(p).co.point
        x = (float(rng.uniform(-1.0, 2.0)), float(rng.uniform(0.0, 3.0)))
        h1, h2 = eval_h(p, x, tol=1e-9, n_max=5000).value
        assert h1 >= co1 - 1e-9
        assert -1e-12 <= h2 <= co2 + 1e-9


def test_eval_h_functional_equation(p):
    rng = np.random.default_rng(23)
    for _ in range(20):
        x = (float(rng.uniform(-2.0, 3.0)), float(rng.uniform(0.0, 4.0)))
        assert abel_residual(p, x) < 1e-8


def test_abel_residual_exact_at_dyadic_point(p):
    # 0.5/rho and 1.5/rho are dyadic-exact for rho = 4/3, so the two orbits
    # coincide bitwise and the defect vanishes identically.
    assert abel_residual(p, (0.5, 1.5)) <= 1e-14


def test_eval_h_mutant_component_ignores_resident_offset(p):
    for w in (0.5, 2.0):
        vals = [eval_h(p, (x1, w)).value[1] for x1 in (-1.0, 0.0, 2.0)]
        assert max(vals) - min(vals) < 1e-6


def test_eval_h_tolerance_consistency(p):
    for x in ((0.0, 1.0), (1.0, 0.5), (-0.5, 2.0)):
        loose = eval_h(p, x, tol=1e-8).value
        tight = eval_h(p, x, tol=1e-10).value
        assert max(abs(loose[0] - tight[0]), abs(loose[1] - tight[1])) < 1e-7


def test_eval_h_rejects_bad_inputs(p):
    with pytest.raises(DomainError):
        eval_h(p, (0.0, -0.1))
    with pytest.raises(DomainError):
        eval_h(p, (float("nan"), 1.0))
    with pytest.raises(DomainError):
        eval_h(p, (0.0, 1.0), tol=0.0)


def test_eval_h_raises_no_convergence_when_budget_too_small(p):
    with pytest.raises(NoConvergence):
        eval_h(p, (0.0, 1.0), tol=1e-10, n_max=30)


def test_eval_h_domain_error_when_scaling_budget_too_small(p):
    with pytest.raises(DomainError):
        eval_h(p, (0.0, 1.0), n_max=5)


# ---------------------------------------------------------------------------
# scaled initial condition


def test_limit_initial_condition_at_zero_seed(p):
    assert limit_initial_condition(p, 0.0, 12345.0) == (1.0, 0.0)


def test_limit_initial_condition_matches_h_at_exact_power(p):
    rho = derived_constants(p).rho
    direct = eval_h(p, (0.0, 1.0)).value
    chi = limit_initial_condition(p, 1.0, rho**20)
    assert max(abs(chi[0] - direct[0]), abs(chi[1] - direct[1])) < 1e-12


def test_limit_initial_condition_is_log_periodic(p):
    rho = derived_constants(p).rho
    for K in (777.0, 31415.0):
        a = limit_initial_condition(p, 1.0, K)
        b = limit_initial_condition(p, 1.0, rho * K)
        assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) < 1e-8


def test_limit_initial_condition_rejects_bad_inputs(p):
    with pytest.raises(DomainError):
        limit_initial_condition(p, -1.0, 100.0)
    with pytest.raises(DomainError):
        limit_initial_condition(p, 1.0, 1.0)


# ---------------------------------------------------------------------------
# growth bound probe


def test_growth_bound_probe_saturates_in_depth(p):
    for x in ((0.0, 1.0), (1.0, 2.0), (-2.0, 3.0)):
        vals = [growth_bound_probe(p, x, n) for n in (10, 20, 30, 40)]
        assert vals == sorted(vals)
        assert vals[-1] <= vals[-2] * 1.01 + 1e-9
        assert vals[-1] <= 1.1 * max(abs(x[0]), abs(x[1]))


def test_growth_bound_probe_monotone_in_seed_mass(p):
    vals = [growth_bound_probe(p, (0.0, s), 30) for s in (0.5, 1.0, 2.0, 4.0)]
    assert vals == sorted(vals)


def test_growth_bound_probe_rejects_bad_inputs(p):
    with pytest.raises(DomainError):
        growth_bound_probe(p, (0.0, 1.0), 0)
    with pytest.raises(DomainError):
        growth_bound_probe(p, (0.0, -1.0), 10)


# ---------------------------------------------------------------------------
# phase grid


def test_phase_grid_shapes_and_ordering(p):
    g = phase_grid(p, (0.0, 2.0), (0.0, 1.0), 3)
    assert g.points.shape == (9, 2) and g.displacements.shape == (9, 2)
    # x1 varies fastest
    assert np.allclose(g.points[:3, 0], [0.0, 1.0, 2.0])
    assert np.allclose(g.points[:3, 1], [0.0, 0.0, 0.0])


def test_phase_grid_vanishes_at_fixed_points(p):
    g = phase_grid(p, (0.0, 2.0), (0.0, 1.0), 3)
    # node (1, 0) is the resident-only equilibrium: exact zero displacement
    idx = np.where((g.points == (1.0, 0.0)).all(axis=1))[0]
    assert idx.size == 1
    assert tuple(g.displacements[idx[0]]) == (0.0, 0.0)


def test_phase_grid_zero_resident_displacement_on_null_cline(p):
    # On a1 - x1 - gamma*x2 = 0 the resident displacement is exactly zero.
    g = phase_grid(p, (0.9, 0.9), (0.2, 0.2), 2)
    assert np.all(g.displacements[:, 0] == 0.0)


def test_phase_grid_rejects_bad_inputs(p):
    with pytest.raises(DomainError):
        phase_grid(p, (0.0, 1.0), (0.0, 1.0), 1)
    with pytest.raises(DomainError):
        phase_grid(p, (-0.1, 1.0), (0.0, 1.0), 3)


# ---------------------------------------------------------------------------
# H surface tabulation


def test_h_surface_shape_and_resident_row(p):
    surf = h_surface(p, (0.0, 4.0), (-1.0, 1.0), 5)
    assert len(surf.rows) == 25
    zero_w = [r for r in surf.rows if r.w == 0.0]
    assert len(zero_w) == 5
    for r in zero_w:
        assert r.error is None
        assert abs(r.H1 - 1.0) < 1e-8
        assert abs(r.H2) < 1e-12


def test_h_surface_mutant_value_increases_with_seed_mass(p):
    surf = h_surface(p, (0.0, 4.0), (0.0, 0.0), 9)
    # the x1 axis is degenerate here: stride over the 9 duplicate columns
    h2 = [r.H2 for r in surf.rows[::9]]
    assert all(b >= a - 1e-12 for a, b in zip(h2, h2[1:]))
    assert h2[-1] > h2[1] > h2[0]


def test_h_surface_nodes_agree_across_resolutions(p):
    coarse = h_surface(p, (0.0, 4.0), (-1.0, 1.0), 3)
    fine = h_surface(p, (0.0, 4.0), (-1.0, 1.0), 5)
    fine_map = {(r.w, r.x1): (r.H1, r.H2) for r in fine.rows}
    for r in coarse.rows:
        assert fine_map[(r.w, r.x1)] == (r.H1, r.H2)


def test_h_surface_records_failures_per_node(p):
    surf = h_surface(p, (0.0, 4.0), (0.0, 0.0), 5, tol=1e-10, n_max=30)
    failed = [r for r in surf.rows if r.error is not None]
    ok = [r for r in surf.rows if r.error is None]
    assert failed, "expected at least one node to miss the tiny budget"
    assert ok, "the w = 0 node needs no iterations and must succeed"
    for r in failed:
        assert math.isnan(r.H1) and math.isnan(r.H2)


# ---------------------------------------------------------------------------
# parabolic recursion limit (Schroeder machinery)


def test_schroeder_zero_and_linear_cases():
    sol = SchroederSolution(4.0 / 3.0, 1.0)
    assert sol.phi_inverse_at(0.0) == decimal.Decimal(0)
    lin = SchroederSolution(4.0 / 3.0, 0.0)
    for x in (0.0, 0.5, 2.0, 10.0):
        assert lin.phi_inverse_at(x) == decimal.Decimal(x)


def test_schroeder_limit_converges_at_unit_coefficient():
    sol = SchroederSolution(4.0 / 3.0, 1.0, tol=1e-9)
    for x in (0.1, 1.0):
        val = sol.phi_inverse_at(x)
        assert sol.residual < 1e-9
        assert sol.n_used > 0
        assert val > 0


def test_schroeder_value_dominates_argument_and_is_monotone():
    sol = SchroederSolution(4.0 / 3.0, 1.0, tol=1e-9)
    grid = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0]
    vals = [sol.phi_inverse_at(x) for x in grid]
    for x, v in zip(grid, vals):
        assert v >= decimal.Decimal(x) * decimal.Decimal("0.999999999")
    for a, b in zip(vals, vals[1:]):
        assert b >= a


def test_schroeder_limit_has_unit_slope_at_origin():
    sol = SchroederSolution(4.0 / 3.0, 1.0, tol=1e-12)
    x = 1e-6
    assert abs(float(sol.phi_inverse_at(x)) / x - 1.0) < 1e-4


def test_schroeder_conjugacy_identity():
    # phi(rho*y*(1 + y)) = rho * phi(y) with phi recovered by bisection.
    rho = 4.0 / 3.0
    sol = SchroederSolution(rho, 1.0, tol=1e-12)
    for v in (0.2, 0.8, 2.0):
        lhs = sol.phi_at(rho * v * (1.0 + v))
        rhs = rho * sol.phi_at(v)
        assert abs(lhs - rhs) <= 1e-8


def test_schroeder_bisection_inverts_the_limit():
    sol = SchroederSolution(4.0 / 3.0, 1.0, tol=1e-12)
    for x in (0.3, 1.0, 2.5):
        v = sol.phi_inverse_at(x)
        assert abs(sol.phi_at(v) - x) < 1e-9 * max(1.0, x)


def test_schroeder_convenience_wrapper_matches_class():
    direct = schroeder_limit(4.0 / 3.0, 1.0, 0.7, tol=1e-10)
    via_class = SchroederSolution(4.0 / 3.0, 1.0, tol=1e-10).phi_inverse_at(0.7)
    assert direct == via_class


def test_schroeder_rejects_bad_inputs():
    with pytest.raises(DomainError):
        SchroederSolution(1.0, 1.0)
    with pytest.raises(DomainError):
        SchroederSolution(4.0 / 3.0, -0.5)
    sol = SchroederSolution(4.0 / 3.0, 1.0)
    with pytest.raises(DomainError):
        sol.phi_inverse_at(-1.0)


def test_schroeder_raises_no_convergence_when_budget_too_small():
    sol = SchroederSolution(4.0 / 3.0, 1.0, tol=1e-12, n_max=5)
    with pytest.raises(NoConvergence):
        sol.phi_inverse_at(1.0)
