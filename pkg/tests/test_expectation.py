import numpy as np
import pytest

from agrifin import REFERENCE, build_grid, evaluate_F, solve_gamma, solve_gamma_multistart, solve_gamma_naive
from agrifin.clearing import gamma_floor
from agrifin.errors import DomainError, InfeasibleScenario
from agrifin.expectation import price_schedule, schedule_expectation


@pytest.mark.parametrize("alpha", [0.0, 0.05])
def test_gamma_matches_independent_root(frozen, alpha):
    p = REFERENCE.with_(alpha=alpha)
    sol = solve_gamma(p, build_grid(p), tol=1e-12, inner_tol=1e-12)
    ref = frozen["cases"][f"grid133_alpha{alpha:g}"]["gamma"]
    assert sol.gamma == pytest.approx(ref, rel=1e-10)


def test_default_tolerance_meets_residual(sol0):
    assert sol0.residual < 1e-7
    assert abs(sol0.gamma - evaluate_F(sol0.gamma, sol0.schedule.grid, REFERENCE)) < 1e-7


def test_secant_agrees_with_damped_picard(grid):
    g = 1.0
    for _ in range(500):
        g_new = 0.5 * g + 0.5 * evaluate_F(g, grid, REFERENCE, tol=1e-12)
        if abs(g_new - g) < 1e-13:
            break
        g = g_new
    sol = solve_gamma(REFERENCE, grid, tol=1e-12, inner_tol=1e-12)
    assert sol.gamma == pytest.approx(g, rel=1e-9)


def test_grid_rule_close_to_continuum(frozen, grid):
    sol = solve_gamma(REFERENCE, grid, tol=1e-12, inner_tol=1e-12)
    assert sol.gamma == pytest.approx(frozen["cases"]["dense_alpha0"]["gamma"], rel=1e-5)


def test_multistart_spread(grid):
    best, sols = solve_gamma_multistart(REFERENCE, grid, n_starts=20, seed=3)
    assert len(sols) == 20
    assert best.multistart_spread < 1e-6
    assert best.gamma == sols[0].gamma


def test_naive_expectation_ignores_integration(grid):
    p = REFERENCE.with_(alpha=0.05)
    naive = solve_gamma_naive(p, grid)
    assert naive.mode == "naive"
    assert naive.schedule.alpha == 0.0
    assert naive.gamma == pytest.approx(solve_gamma(REFERENCE, grid).gamma, abs=1e-9)


def test_guess_below_floor_is_lifted():
    p = REFERENCE.with_(alpha=0.1)
    grid = build_grid(p)
    floor = gamma_floor(grid.nodes, p)
    a = solve_gamma(p, grid, guess=0.5 * floor, tol=1e-10)
    b = solve_gamma(p, grid, guess=1.0, tol=1e-10)
    assert a.gamma == pytest.approx(b.gamma, rel=1e-8)


def test_infeasible_schedule_is_never_averaged():
    p = REFERENCE.with_(alpha=0.5)
    grid = build_grid(p)
    sched = price_schedule(0.5 * gamma_floor(grid.nodes, p), grid, p)
    assert not sched.feasible.all()
    assert np.all(np.isnan(sched.prices[~sched.feasible]))
    with pytest.raises(InfeasibleScenario) as exc:
        schedule_expectation(sched)
    assert len(exc.value.nodes) == int((~sched.feasible).sum())


def test_arguments_validated(grid):
    with pytest.raises(DomainError):
        solve_gamma(REFERENCE, grid, guess=0.0)
    with pytest.raises(DomainError):
        solve_gamma(REFERENCE, grid, tol=-1.0)
    with pytest.raises(DomainError):
        evaluate_F(0.0, grid, REFERENCE)


def test_degenerate_grid_solves():
    p = REFERENCE.with_(sigma_bar=0.0)
    sol = solve_gamma(p, build_grid(p))
    assert len(sol.schedule.prices) == 1
    assert sol.gamma == pytest.approx(sol.schedule.prices[0] * 0.5, rel=1e-6)
