"""Market clearing at a single aggregate-fitness realisation.

Consumer demand ``w / p**beta`` must equal survivor supply plus the financial
investor's contingent position. Demand falls and supply rises in ``p``, so a
positive root exists iff maximal supply exceeds the investor's net demand, and
it is unique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._accel import HAS_NUMBA
from .errors import ConvergenceFailure, DomainError, NoEquilibrium
from .gaussian import gaussian_partial_moment
from .model import ScenarioParams

DEFAULT_TOL = 1e-7
DEFAULT_MAXITER = 200
PRICE_CAP = 1e12

if HAS_NUMBA:
    _clear_nodes = kernels.clear_nodes
else:
    from .kernels_numpy import clear_nodes as _clear_nodes


@dataclass(frozen=True)
class ClearingPoint:
    theta: float
    price: float
    q_supply: float
    q_financial: float
    theta_star: float
    iterations: int
    residual: float


def financial_demand(theta, params: ScenarioParams):
    """Investor position ``alpha (theta0 - theta)``: extra supply below theta0, extra demand above."""
    q = params.alpha * (params.theta0 - np.asarray(theta, dtype=float))
    return float(q) if np.ndim(q) == 0 else q


def _check_gamma(gamma):
    if not gamma > 0:
        raise DomainError(f"gamma must be > 0, got {gamma!r}")


def threshold_numerator(gamma: float, params: ScenarioParams) -> float:
    """``gamma/2 + 2 c / gamma``; dividing by the price gives the break-even fitness."""
    _check_gamma(gamma)
    return 0.5 * gamma + 2.0 * params.fixed_cost(gamma) / gamma


def default_threshold(price, gamma: float, params: ScenarioParams):
    """Minimum idiosyncratic fitness with nonnegative profit, clamped at zero."""
    price = np.asarray(price, dtype=float)
    if np.any(~(price > 0)):
        raise DomainError(f"price must be > 0, got {price!r}")
    ts = np.maximum(threshold_numerator(gamma, params) / price, 0.0)
    return float(ts) if ts.ndim == 0 else ts


def survivor_supply(theta, price, gamma: float, params: ScenarioParams):
    """Output brought to market by farmers that do not default."""
    ts = default_threshold(price, gamma, params)
    theta = np.asarray(theta, dtype=float)
    sig = params.idiosyncratic_std
    if sig > 0:
        pm = gaussian_partial_moment(ts, theta, sig)
    else:
        pm = np.where(theta > ts, theta, 0.0)
    q = 0.5 * gamma * np.asarray(pm)
    return float(q) if q.ndim == 0 else q


def max_supply(theta, gamma: float, params: ScenarioParams):
    """Supply as price -> infinity (zero threshold)."""
    _check_gamma(gamma)
    theta = np.asarray(theta, dtype=float)
    sig = params.idiosyncratic_std
    pm = gaussian_partial_moment(0.0, theta, sig) if sig > 0 else np.where(theta > 0, theta, 0.0)
    q = 0.5 * gamma * np.asarray(pm)
    return float(q) if q.ndim == 0 else q


def check_existence(theta, gamma: float, params: ScenarioParams):
    """Maximal survivor supply covers the investor's net demand."""
    if params.alpha == 0.0:
        ok = np.ones(np.shape(theta), dtype=bool)
    else:
        ok = max_supply(theta, gamma, params) >= params.alpha * (np.asarray(theta, dtype=float) - params.theta0)
    return bool(ok) if np.ndim(ok) == 0 else ok


def gamma_floor(nodes, params: ScenarioParams) -> float:
    """Smallest gamma for which every node satisfies the existence condition (0 if none binds)."""
    nodes = np.asarray(nodes, dtype=float)
    above = nodes[nodes > params.theta0]
    if params.alpha == 0.0 or above.size == 0:
        return 0.0
    sig = params.idiosyncratic_std
    pm = gaussian_partial_moment(0.0, above, sig) if sig > 0 else np.where(above > 0, above, 0.0)
    pm = np.asarray(pm, dtype=float)
    if np.any(pm <= 0):
        return math.inf
    return float(np.max(2.0 * params.alpha * (above - params.theta0) / pm))


def solve_price(
    theta: float,
    gamma: float,
    params: ScenarioParams,
    tol: float = DEFAULT_TOL,
    method: str = "bracket",
    maxiter: int = DEFAULT_MAXITER,
    p_start: float = 1.0,
) -> ClearingPoint:
    """Clearing price at fitness ``theta`` for farmer expectation ``gamma``.

    ``method="bracket"`` (default) runs safeguarded regula falsi on log price;
    ``method="fixed_point"`` iterates ``p <- (w / (Q(p) + Q_S))**(1/beta)``.
    """
    _check_gamma(gamma)
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol!r}")
    theta = float(theta)
    q_fin = financial_demand(theta, params)
    half_gamma = 0.5 * gamma
    cost_num = threshold_numerator(gamma, params)
    sig = params.idiosyncratic_std
    if method == "bracket":
        p, it, r, st = kernels.clear_bracketed(
            theta, half_gamma, cost_num, sig, q_fin, params.w, params.beta, tol, maxiter, PRICE_CAP
        )
    elif method == "fixed_point":
        p, it, r, st = kernels.clear_fixed_point(
            theta, half_gamma, cost_num, sig, q_fin, params.w, params.beta, tol, maxiter, PRICE_CAP, p_start
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    if st == kernels.NO_EQUILIBRIUM:
        raise NoEquilibrium(theta, params.alpha, gamma)
    if st == kernels.MAX_ITER:
        raise ConvergenceFailure(f"clearing at theta={theta:.6g} ({method})", abs(r), int(it))
    ts = max(cost_num / p, 0.0)
    q = half_gamma * kernels.partial_moment(ts, theta, sig)
    return ClearingPoint(theta, float(p), float(q), float(q_fin), float(ts), int(it), float(abs(r)))


def clear_schedule(nodes, gamma: float, params: ScenarioParams, tol: float = DEFAULT_TOL, maxiter: int = DEFAULT_MAXITER):
    """Bracketed clearing at every node with the active backend.

    Returns ``(prices, iterations, residuals, status)``; nodes without an
    equilibrium have ``status == kernels.NO_EQUILIBRIUM`` and NaN price.
    """
    _check_gamma(gamma)
    nodes = np.ascontiguousarray(nodes, dtype=float)
    q_fin = np.ascontiguousarray(params.alpha * (params.theta0 - nodes))
    return _clear_nodes(
        nodes,
        q_fin,
        0.5 * gamma,
        threshold_numerator(gamma, params),
        params.idiosyncratic_std,
        params.w,
        params.beta,
        float(tol),
        int(maxiter),
        PRICE_CAP,
    )
