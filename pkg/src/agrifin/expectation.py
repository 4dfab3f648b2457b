"""Self-consistent farmer expectation ``gamma = E[p(theta) theta]``.

The right-hand side ``F(gamma)`` clears the market at every grid node for the
candidate ``gamma`` and averages ``p * theta``. The fixed point is found by a
secant iteration on ``gamma - F(gamma)`` with a damped Picard fallback.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .clearing import DEFAULT_MAXITER, DEFAULT_TOL, clear_schedule, gamma_floor
from .errors import ConvergenceFailure, DomainError, InfeasibleScenario
from .model import QuadratureGrid, ScenarioParams

log = logging.getLogger(__name__)

OUTER_MAXITER = 10_000


@dataclass(frozen=True, eq=False)
class PriceSchedule:
    """Clearing prices on the grid for one (gamma, alpha)."""

    grid: QuadratureGrid
    gamma: float
    alpha: float
    prices: np.ndarray
    feasible: np.ndarray
    iterations: np.ndarray
    residuals: np.ndarray

    @property
    def infeasible_nodes(self) -> np.ndarray:
        return self.grid.nodes[~self.feasible]


@dataclass(frozen=True, eq=False)
class GammaSolution:
    gamma: float
    schedule: PriceSchedule
    outer_iterations: int
    residual: float
    params: ScenarioParams
    mode: str = "rational"
    multistart_spread: float = math.nan
    tol: float = DEFAULT_TOL
    inner_tol: float = DEFAULT_TOL


def price_schedule(
    gamma: float,
    grid: QuadratureGrid,
    params: ScenarioParams,
    tol: float = DEFAULT_TOL,
    maxiter: int = DEFAULT_MAXITER,
) -> PriceSchedule:
    """Clear every node; infeasible nodes are flagged, never filled."""
    prices, iters, resid, status = clear_schedule(grid.nodes, gamma, params, tol, maxiter)
    if np.any(status == kernels.MAX_ITER):
        bad = np.flatnonzero(status == kernels.MAX_ITER)
        raise ConvergenceFailure(
            f"clearing hit the iteration cap at {bad.size} node(s), gamma={gamma:.6g}",
            float(np.nanmax(np.abs(resid[bad]))),
            int(iters[bad].max()),
        )
    feasible = status == kernels.OK
    return PriceSchedule(grid, float(gamma), params.alpha, prices, feasible, iters, np.abs(resid))


def schedule_expectation(schedule: PriceSchedule) -> float:
    """Grid average of ``p * theta``; requires every node feasible."""
    if not schedule.feasible.all():
        raise InfeasibleScenario(schedule.infeasible_nodes, schedule.gamma, schedule.alpha)
    return schedule.grid.expect(schedule.prices * schedule.grid.nodes)


def evaluate_F(
    gamma: float,
    grid: QuadratureGrid,
    params: ScenarioParams,
    tol: float = DEFAULT_TOL,
    maxiter: int = DEFAULT_MAXITER,
) -> float:
    """``F(gamma) = sum_k weight_k p(node_k; gamma) node_k``."""
    if not gamma > 0:
        raise DomainError(f"gamma must be > 0, got {gamma!r}")
    return schedule_expectation(price_schedule(gamma, grid, params, tol, maxiter))


def solve_gamma(
    params: ScenarioParams,
    grid: QuadratureGrid,
    guess: float = 1.0,
    tol: float = DEFAULT_TOL,
    inner_tol: float = DEFAULT_TOL,
    max_iter: int = OUTER_MAXITER,
    inner_maxiter: int = DEFAULT_MAXITER,
    mode: str = "rational",
) -> GammaSolution:
    """Secant iteration on ``h(gamma) = gamma - F(gamma)`` until ``|h| < tol``.

    Start pair is ``(guess, 1.01 guess)``. A secant step is replaced by the
    damped Picard step ``0.5 gamma + 0.5 F(gamma)`` when it leaves
    ``(0, 10 * gamma_max]`` or does not reduce ``|h|``. Trial points below the
    existence floor (some node cannot clear) are pulled halfway back towards
    the floor from the current iterate.
    """
    if not guess > 0:
        raise DomainError(f"guess must be > 0, got {guess!r}")
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol!r}")

    floor = gamma_floor(grid.nodes, params)
    if not math.isfinite(floor):
        raise InfeasibleScenario(grid.nodes[grid.nodes > params.theta0], guess, params.alpha)

    def admissible(g, ref):
        if g > floor:
            return g
        return floor + 0.5 * (ref - floor)

    def evaluate(g):
        sched = price_schedule(g, grid, params, inner_tol, inner_maxiter)
        f = schedule_expectation(sched)
        return g - f, f, sched

    x0 = guess if guess > floor else 2.0 * floor
    h0, f0, s0 = evaluate(x0)
    if abs(h0) < tol:
        return GammaSolution(x0, s0, 0, abs(h0), params, mode, tol=tol, inner_tol=inner_tol)
    x1 = 1.01 * x0
    h1, f1, s1 = evaluate(x1)
    upper = 10.0 * max(x0, x1, f0, f1)

    for n in range(1, max_iter + 1):
        if abs(h1) < tol:
            log.debug("gamma converged: %.12g after %d iterations", x1, n)
            return GammaSolution(x1, s1, n, abs(h1), params, mode, tol=tol, inner_tol=inner_tol)
        x2 = math.nan
        if h1 != h0:
            x2 = x1 - h1 * (x1 - x0) / (h1 - h0)
        accepted = False
        if math.isfinite(x2) and floor < x2 <= upper:
            h2, f2, s2 = evaluate(x2)
            accepted = abs(h2) < abs(h1)
        if not accepted:
            x2 = admissible(0.5 * x1 + 0.5 * f1, x1)
            h2, f2, s2 = evaluate(x2)
        x0, h0 = x1, h1
        x1, h1, f1, s1 = x2, h2, f2, s2
    raise ConvergenceFailure("gamma secant iteration hit the cap", abs(h1), max_iter)


def solve_gamma_naive(params: ScenarioParams, grid: QuadratureGrid, **kwargs) -> GammaSolution:
    """Expectation of a farmer who ignores market integration (alpha forced to 0)."""
    kwargs["mode"] = "naive"
    return solve_gamma(params.with_(alpha=0.0), grid, **kwargs)


def solve_gamma_multistart(
    params: ScenarioParams,
    grid: QuadratureGrid,
    n_starts: int = 20,
    high: float = 10_000.0,
    seed: int = 0,
    **kwargs,
) -> tuple[GammaSolution, list[GammaSolution]]:
    """Solve from ``n_starts`` guesses uniform on (0, high]; report the spread.

    Returns the solution from the first start (with ``multistart_spread`` set)
    and the list of all per-start solutions.
    """
    rng = np.random.default_rng(seed)
    guesses = high * (1.0 - rng.random(n_starts))
    sols = [solve_gamma(params, grid, guess=float(g), **kwargs) for g in guesses]
    gammas = np.array([s.gamma for s in sols])
    spread = float(gammas.max() - gammas.min())
    first = sols[0]
    best = GammaSolution(
        first.gamma, first.schedule, first.outer_iterations, first.residual,
        first.params, first.mode, spread, first.tol, first.inner_tol,
    )
    return best, sols
