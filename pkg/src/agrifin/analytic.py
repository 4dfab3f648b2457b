"""Closed-form single-farmer market.

With one farmer and only aggregate uncertainty the clearing price is
``(2w / (gamma theta))**(1/beta)`` at ``alpha = 0`` and the expectation has a
second-order cumulant solution in the relative volatility
``x = sigma_bar sqrt(tau) / theta0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import OutOfValidity, SingularDenominator
from .model import ScenarioParams

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AnalyticSolution:
    x: float
    gamma_exact: float
    gamma0: float
    gamma1_coef: float
    gamma2: float
    A: float
    B: float
    mu_S_approx: float


def relative_volatility(params: ScenarioParams) -> float:
    return params.aggregate_std / params.theta0


def single_farmer_params(params: ScenarioParams) -> ScenarioParams:
    """The configuration the closed form describes: no idiosyncratic noise,
    no fixed cost, no integration."""
    return params.with_(sigma=0.0, c_f=0.0, alpha=0.0)


def gamma_leading(params: ScenarioParams) -> float:
    """``gamma0 = (2w)**(1/(1+beta)) theta0**((beta-1)/(beta+1))``."""
    b = params.beta
    return (2.0 * params.w) ** (1.0 / (1.0 + b)) * params.theta0 ** ((b - 1.0) / (b + 1.0))


def analytic_gamma(params: ScenarioParams) -> float:
    b = params.beta
    x = relative_volatility(params)
    bracket = 1.0 - (1.0 / (2.0 * b)) * (1.0 - 1.0 / b) * x * x
    if not bracket > 0:
        raise OutOfValidity(f"cumulant bracket {bracket:.6g} <= 0 at x={x:.6g}, beta={b:.6g}")
    return gamma_leading(params) * bracket ** (b / (b + 1.0))


def series_coefficients(params: ScenarioParams) -> tuple[float, float, float]:
    """Taylor terms of ``analytic_gamma`` about ``x = 0`` up to second order.

    The first-order term vanishes identically (the law is symmetric), and the
    second-order term is ``-gamma0 (beta-1) / (2 beta (beta+1)) x**2``.
    """
    b = params.beta
    x = relative_volatility(params)
    g0 = gamma_leading(params)
    g1 = 0.0
    g2 = -g0 * (b - 1.0) / (2.0 * b * (b + 1.0)) * x * x
    return g0, g1, g2


def investor_coefficients(params: ScenarioParams, alpha: float | None = None) -> tuple[float, float]:
    """``A = alpha gamma0 / beta - 2 alpha**2 / beta`` and ``B = alpha gamma0 / sqrt(2 pi)``."""
    a = params.alpha if alpha is None else alpha
    b = params.beta
    g0 = gamma_leading(params)
    return a * g0 / b - 2.0 * a * a / b, a * g0 / SQRT_2PI


def analytic_mu_S(params: ScenarioParams, alpha: float | None = None) -> float:
    """Approximate investor return ``(A x^2 - c_S) / (B x - A x^2 + c_S)``."""
    A, B = investor_coefficients(params, alpha)
    x = relative_volatility(params)
    num = A * x * x - params.c_s
    den = B * x - A * x * x + params.c_s
    if abs(den) < 1e-12:
        raise SingularDenominator(f"denominator {den:.3e} at alpha={params.alpha if alpha is None else alpha!r}, x={x:.6g}")
    return num / den


def analytic_alpha_c(params: ScenarioParams) -> float:
    """Smallest alpha with ``A x^2 = c_S`` (investor break-even); NaN if none."""
    x = relative_volatility(params)
    g0 = gamma_leading(params)
    if x == 0.0:
        return math.nan
    # 2 a^2 - g0 a + beta c_S / x^2 = 0
    disc = g0 * g0 - 8.0 * params.beta * params.c_s / (x * x)
    if disc < 0:
        return math.nan
    return (g0 - math.sqrt(disc)) / 4.0


@dataclass(frozen=True)
class AlphaStar:
    alpha: float
    mu_S: float
    boundary: bool
    singular: bool = False


def analytic_alpha_star(params: ScenarioParams, alpha_max: float | None = None, tol: float = 1e-6, n_grid: int = 401) -> AlphaStar:
    """Maximiser of the approximate investor return over ``(0, alpha_max]``.

    Grid localisation followed by bounded Brent search. ``alpha_max``
    defaults to ``gamma0 / 2``, where the numerator coefficient ``A`` returns
    to zero. Only alphas with a positive denominator (positive long-side
    capital) are admissible. ``boundary`` is set when the maximum sits at an
    end of the bracket, ``singular`` when it sits next to an inadmissible
    alpha, where the approximation diverges.
    """
    g0 = gamma_leading(params)
    hi = g0 / 2.0 if alpha_max is None else float(alpha_max)
    grid = np.linspace(hi / (n_grid - 1), hi, n_grid)
    vals = np.array([_admissible_mu(params, a) for a in grid])
    if np.all(np.isnan(vals)):
        raise SingularDenominator("approximate return undefined on the whole bracket")
    k = int(np.nanargmax(vals))
    if k == 0 or k == n_grid - 1:
        return AlphaStar(float(grid[k]), float(vals[k]), True)
    if np.isnan(vals[k - 1]) or np.isnan(vals[k + 1]):
        return AlphaStar(float(grid[k]), float(vals[k]), False, True)
    res = minimize_scalar(
        lambda a: -_admissible_mu(params, a),
        bounds=(grid[k - 1], grid[k + 1]),
        method="bounded",
        options={"xatol": tol},
    )
    return AlphaStar(float(res.x), float(-res.fun), False)


def _admissible_mu(params, alpha):
    A, B = investor_coefficients(params, alpha)
    x = relative_volatility(params)
    den = B * x - A * x * x + params.c_s
    if den <= 1e-12:
        return math.nan
    return (A * x * x - params.c_s) / den


def analytic_solution(params: ScenarioParams) -> AnalyticSolution:
    g0, g1, g2 = series_coefficients(params)
    A, B = investor_coefficients(params)
    return AnalyticSolution(
        x=relative_volatility(params),
        gamma_exact=analytic_gamma(params),
        gamma0=g0,
        gamma1_coef=g1,
        gamma2=g2,
        A=A,
        B=B,
        mu_S_approx=analytic_mu_S(params),
    )
