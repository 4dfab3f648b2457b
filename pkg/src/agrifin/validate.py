"""Invariant checks across all modules, collected into one machine-readable report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .analytic import analytic_gamma, analytic_mu_S, gamma_leading, single_farmer_params
from .expectation import solve_gamma, solve_gamma_multistart
from .metrics import compute_metrics
from .model import ScenarioParams, build_grid
from .sweep import GridConfig, alpha_sweep_spec, run_sweep


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    relation: str  # "<", "<=", ">=", "within", "true"
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _lt(name, measured, tol, detail=""):
    return Check(name, float(measured), float(tol), "<", bool(measured < tol), detail)


def _true(name, ok, measured=math.nan, detail=""):
    return Check(name, float(measured), 0.0, "true", bool(ok), detail)


def run_checks(params: ScenarioParams, gc: GridConfig = GridConfig(), n_starts: int = 20, high: float = 10_000.0, seed: int = 0, sweep_points: int = 51, threads=1) -> list[Check]:
    """Solver, conservation, analytic-oracle and monotonicity checks at ``params``."""
    checks = []
    grid = gc.grid(params)
    kw = dict(tol=gc.tol, inner_tol=gc.inner_tol)

    checks.append(_lt("quadrature weights sum to one", abs(grid.weights.sum() - 1.0), 1e-12))

    sol = solve_gamma(params, grid, guess=gc.guess, **kw)
    checks.append(_lt("outer residual |gamma - F(gamma)|", sol.residual, 1e-7))
    checks.append(_lt("max clearing residual over nodes", float(np.max(sol.schedule.residuals)), 1e-6))

    integrated = params.with_(alpha=params.alpha if params.alpha > 0 else 0.05)
    q_s = integrated.alpha * (integrated.theta0 - grid.nodes)
    checks.append(_lt("zero net supply |E[Q_S]|", abs(grid.expect(q_s)), 1e-12, f"alpha={integrated.alpha:g}"))

    best, _ = solve_gamma_multistart(params, grid, n_starts=n_starts, high=high, seed=seed, **kw)
    checks.append(_lt(f"multi-start gamma spread ({n_starts} starts in (0, {high:g}])", best.multistart_spread, 1e-6))

    fine = build_grid(params, 2 * gc.n_points, gc.truncation)
    g_fine = solve_gamma(params, fine, guess=gc.guess, **kw).gamma
    checks.append(_lt(f"grid refinement {gc.n_points}->{2 * gc.n_points} relative gamma change", abs(g_fine - sol.gamma) / sol.gamma, 0.01))

    m = compute_metrics(sol, params)
    checks.append(Check("mean default fraction", m.default_frac, 0.05, "within", bool(abs(m.default_frac - 0.30) <= 0.05), "target 0.30"))

    seg = params.with_(alpha=0.0)
    s0 = solve_gamma(seg, gc.grid(seg), guess=gc.guess, **kw).schedule
    checks.append(_true("price strictly decreasing in theta at alpha=0", bool(np.all(np.diff(s0.prices) < 0))))

    worst = 0.0
    for x in (0.02, 0.05, 0.1):
        sf = single_farmer_params(params).with_(sigma_bar=x * params.theta0)
        # without idiosyncratic noise large guesses fall on the all-default branch
        g_num = solve_gamma(sf, gc.grid(sf), guess=gamma_leading(sf), **kw).gamma
        worst = max(worst, abs(g_num - analytic_gamma(sf)) / analytic_gamma(sf))
    checks.append(_lt("single-farmer numeric vs closed-form gamma (x <= 0.1)", worst, 0.01))
    checks.append(_lt("closed-form investor return at alpha=0 equals -1", abs(analytic_mu_S(params, 0.0) + 1.0), 1e-15))

    spec = alpha_sweep_spec(params, n=sweep_points, gc=gc)
    res = run_sweep(spec, threads=threads)
    ps = res.series("price_std")
    qs = res.series("q_std")
    checks.append(_true("sweep fully feasible", not res.failures, res.feasible_fraction()))
    checks.append(_true("price_std nonincreasing in alpha", bool(np.all(np.diff(ps) <= 0)), float(np.max(np.diff(ps)))))
    checks.append(_true("q_std nondecreasing in alpha", bool(np.all(np.diff(qs) >= 0)), float(np.min(np.diff(qs)))))
    if res.alpha_c is not None and res.alpha_star is not None:
        checks.append(_true("alpha_c <= alpha_star", res.alpha_c <= res.alpha_star, res.alpha_star - res.alpha_c))
    else:
        checks.append(_true("alpha_c and alpha_star detected", False, detail="; ".join(res.notes)))
    return checks


def report(checks: list[Check]) -> dict:
    return {
        "passed": all(c.passed for c in checks),
        "n_checks": len(checks),
        "n_failed": sum(not c.passed for c in checks),
        "checks": [c.to_dict() for c in checks],
    }
