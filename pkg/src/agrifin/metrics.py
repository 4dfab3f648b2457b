"""Equilibrium observables from a converged expectation.

Per-node quantities come from closed-form idiosyncratic averages; aggregate
averages and dispersions use the quadrature weights.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .clearing import financial_demand, threshold_numerator
from .expectation import GammaSolution, PriceSchedule, price_schedule
from .errors import InfeasibleScenario
from .gaussian import gaussian_partial_moment, gaussian_partial_second_moment, survival_probability
from .model import ScenarioParams

MODES = ("rational", "naive")


@dataclass(frozen=True)
class EquilibriumMetrics:
    alpha: float
    mode: str
    gamma: float
    q_mean: float
    q_std: float
    price_mean: float
    price_std: float
    default_frac: float
    default_frac_std: float
    pi_F: float
    M_F: float
    mu_F: float
    sigma_F: float
    sigma_F_aggregate: float
    pi_S: float
    M_S: float
    mu_S: float
    sigma_S: float
    investor_degenerate: bool
    q_fin_mean: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class NodeValues:
    """Per-node building blocks shared by all metric groups."""

    schedule: PriceSchedule
    gamma: float
    fixed_cost: float
    theta_star: np.ndarray
    survival: np.ndarray
    pm1: np.ndarray
    pm2: np.ndarray
    supply: np.ndarray
    q_fin: np.ndarray


def node_values(schedule: PriceSchedule, params: ScenarioParams) -> NodeValues:
    if not schedule.feasible.all():
        raise InfeasibleScenario(schedule.infeasible_nodes, schedule.gamma, schedule.alpha)
    gamma = schedule.gamma
    nodes = schedule.grid.nodes
    ts = np.maximum(threshold_numerator(gamma, params) / schedule.prices, 0.0)
    sig = params.idiosyncratic_std
    if sig > 0:
        surv = np.asarray(survival_probability(ts, nodes, sig), dtype=float)
        pm1 = np.asarray(gaussian_partial_moment(ts, nodes, sig), dtype=float)
        pm2 = np.asarray(gaussian_partial_second_moment(ts, nodes, sig), dtype=float)
    else:
        alive = nodes > ts
        surv = alive.astype(float)
        pm1 = np.where(alive, nodes, 0.0)
        pm2 = np.where(alive, nodes * nodes, 0.0)
    return NodeValues(
        schedule, gamma, params.fixed_cost(gamma), ts, surv, pm1, pm2,
        0.5 * gamma * pm1, np.asarray(financial_demand(nodes, params), dtype=float),
    )


def compute_default_fraction(sol_or_nodes, params: ScenarioParams) -> tuple[float, float]:
    """Mean and aggregate-law dispersion of the per-node default fraction."""
    nv = _as_nodes(sol_or_nodes, params)
    grid = nv.schedule.grid
    d = 1.0 - nv.survival
    return grid.expect(d), grid.std(d)


def compute_farmer_metrics(sol_or_nodes, params: ScenarioParams) -> dict:
    """Profit, capital, return and return dispersion of the farmers.

    A surviving farmer earns ``(gamma/2) p theta_i - gamma^2/4 - c``; a
    defaulting one loses ``gamma^2/4 + c``. The joint dispersion uses exact
    truncated second moments per node and the law of total variance.
    """
    nv = _as_nodes(sol_or_nodes, params)
    grid = nv.schedule.grid
    g = nv.gamma
    M_F = 0.25 * g * g + nv.fixed_cost
    revenue = 0.5 * g * nv.schedule.prices
    loss = -M_F
    mean_k = revenue * nv.pm1 + loss
    second_k = revenue * revenue * nv.pm2 + 2.0 * revenue * loss * nv.pm1 + loss * loss
    pi_F = grid.expect(mean_k)
    var = max(grid.expect(second_k) - pi_F * pi_F, 0.0)
    return {
        "pi_F": pi_F,
        "M_F": M_F,
        "mu_F": pi_F / M_F,
        "sigma_F": math.sqrt(var) / M_F,
        "sigma_F_aggregate": grid.std(mean_k) / M_F,
    }


def compute_investor_metrics(sol_or_nodes, params: ScenarioParams) -> dict:
    """Capital gain, long-side capital and return of the financial investor.

    With ``alpha == 0`` the investor only pays transaction costs; the ratio is
    reported but flagged as degenerate. ``M_S == 0`` yields ``mu_S = nan``.
    """
    nv = _as_nodes(sol_or_nodes, params)
    grid = nv.schedule.grid
    nodes = grid.nodes
    gain = nv.q_fin * nv.schedule.prices
    pi_k = gain - params.c_s
    pi_S = grid.expect(pi_k)
    M_S = grid.expect(np.where(nodes < params.theta0, gain + params.c_s, 0.0))
    degenerate = params.alpha == 0.0 or M_S == 0.0
    if M_S == 0.0:
        mu_S = sigma_S = math.nan
    else:
        mu_S = pi_S / M_S
        sigma_S = grid.std(pi_k / M_S)
    return {
        "pi_S": pi_S,
        "M_S": M_S,
        "mu_S": mu_S,
        "sigma_S": sigma_S,
        "investor_degenerate": bool(degenerate),
        "q_fin_mean": grid.expect(nv.q_fin),
    }


def market_schedule(sol: GammaSolution, params: ScenarioParams, mode: str = "rational") -> PriceSchedule:
    """Schedule at the true integration level: reused for rational, re-cleared for naive."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    sched = sol.schedule
    if mode == "naive" or sched.alpha != params.alpha:
        sched = price_schedule(sol.gamma, sched.grid, params, sol.inner_tol)
    return sched


def compute_metrics(sol: GammaSolution, params: ScenarioParams, mode: str = "rational") -> EquilibriumMetrics:
    """All observables for one scenario.

    In naive mode ``sol`` comes from :func:`solve_gamma_naive` and the market is
    re-cleared at ``params.alpha`` with that expectation.
    """
    sched = market_schedule(sol, params, mode)
    nv = node_values(sched, params)
    grid = sched.grid
    d_mean, d_std = compute_default_fraction(nv, params)
    return EquilibriumMetrics(
        alpha=params.alpha,
        mode=mode,
        gamma=sol.gamma,
        q_mean=grid.expect(nv.supply),
        q_std=grid.std(nv.supply),
        price_mean=grid.expect(sched.prices),
        price_std=grid.std(sched.prices),
        default_frac=d_mean,
        default_frac_std=d_std,
        **compute_farmer_metrics(nv, params),
        **compute_investor_metrics(nv, params),
    )


def _as_nodes(obj, params) -> NodeValues:
    if isinstance(obj, NodeValues):
        return obj
    if isinstance(obj, GammaSolution):
        return node_values(market_schedule(obj, params, obj.mode), params)
    if isinstance(obj, PriceSchedule):
        return node_values(obj, params)
    raise TypeError(f"expected GammaSolution, PriceSchedule or NodeValues, got {type(obj).__name__}")
