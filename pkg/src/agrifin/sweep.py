"""Comparative statics over one parameter.

Sweep points are independent solves dispatched to a thread pool (the
clearing kernels release the GIL). Results are collected by index so the
output never depends on completion order or worker count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .clearing import DEFAULT_TOL
from .errors import AgrifinError, CalibrationFailure, DomainError, NotFound
from .expectation import solve_gamma, solve_gamma_naive
from .gaussian import gaussian_partial_moment
from .metrics import EquilibriumMetrics, compute_metrics
from .model import ScenarioParams, build_grid

log = logging.getLogger(__name__)

SWEEPABLE = ("alpha", "beta", "sigma_bar", "w")
SWEEP_MODES = ("rational", "naive", "both")
ALPHA_TOL = 1e-4


@dataclass(frozen=True)
class GridConfig:
    n_points: int = 133
    truncation: float = 4.0
    tol: float = DEFAULT_TOL
    inner_tol: float = DEFAULT_TOL
    guess: float = 1.0

    def grid(self, params: ScenarioParams):
        return build_grid(params, self.n_points, self.truncation)


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioParams
    swept_parameter: str
    values: tuple
    mode: str = "rational"
    grid: GridConfig = field(default_factory=GridConfig)

    def __post_init__(self):
        if self.swept_parameter not in SWEEPABLE:
            raise DomainError(f"swept_parameter must be one of {SWEEPABLE}, got {self.swept_parameter!r}")
        if self.mode not in SWEEP_MODES:
            raise DomainError(f"mode must be one of {SWEEP_MODES}, got {self.mode!r}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("values must not be empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainError("values must be strictly increasing")
        for v in vals:
            # validates sign and finiteness through the parameter type
            self.base.with_(**{self.swept_parameter: v})
        object.__setattr__(self, "values", vals)

    @property
    def modes(self) -> tuple:
        return ("rational", "naive") if self.mode == "both" else (self.mode,)

    def params_at(self, value: float) -> ScenarioParams:
        return self.base.with_(**{self.swept_parameter: value})


@dataclass(frozen=True)
class SweepFailure:
    value: float
    mode: str
    kind: str
    message: str


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: dict  # mode -> list of EquilibriumMetrics or None, aligned with spec.values
    alpha_c: float | None = None
    alpha_star: float | None = None
    mu_S_star: float | None = None
    infeasible: list = field(default_factory=list)  # (value, theta node)
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def series(self, name: str, mode: str = "rational") -> np.ndarray:
        """Column ``name`` for one mode with NaN at failed points."""
        return np.array([math.nan if r is None else getattr(r, name) for r in self.rows[mode]], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.spec.values, dtype=float)

    def feasible_fraction(self) -> float:
        n = sum(len(rows) for rows in self.rows.values())
        ok = sum(r is not None for rows in self.rows.values() for r in rows)
        return ok / n if n else 0.0


def solve_point(params: ScenarioParams, mode: str, gc: GridConfig, naive_params: ScenarioParams | None = None) -> EquilibriumMetrics:
    """Metrics for one scenario in one expectation mode."""
    grid = gc.grid(params)
    kw = dict(guess=gc.guess, tol=gc.tol, inner_tol=gc.inner_tol)
    if mode == "rational":
        sol = solve_gamma(params, grid, **kw)
    else:
        sol = solve_gamma_naive(naive_params or params, grid, **kw)
    return compute_metrics(sol, params, mode)


def _resolve_threads(threads) -> int:
    if threads in (None, "auto"):
        return os.cpu_count() or 1
    n = int(threads)
    if n < 1:
        raise DomainError(f"threads must be >= 1, got {threads!r}")
    return n


def run_sweep(spec: SweepSpec, threads=1, refine: bool = True) -> SweepResult:
    """Solve every (value, mode) point; failures are recorded, not raised.

    For an alpha sweep with a rational row set, ``alpha_c`` and ``alpha_star``
    are located on the grid and refined with fresh solves when ``refine``.
    """
    tasks = [(i, v, m) for m in spec.modes for i, v in enumerate(spec.values)]

    def work(task):
        i, v, m = task
        params = spec.params_at(v)
        try:
            return solve_point(params, m, spec.grid)
        except AgrifinError as exc:
            return exc

    n_workers = min(_resolve_threads(threads), len(tasks))
    if n_workers == 1:
        outcomes = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(work, tasks))

    rows = {m: [None] * len(spec.values) for m in spec.modes}
    result = SweepResult(spec, rows)
    for (i, v, m), out in zip(tasks, outcomes):
        if isinstance(out, EquilibriumMetrics):
            rows[m][i] = out
            continue
        result.failures.append(SweepFailure(v, m, type(out).__name__, str(out)))
        for theta in getattr(out, "nodes", []):
            result.infeasible.append((v, float(theta)))

    if spec.swept_parameter == "alpha" and "rational" in spec.modes:
        try:
            result.alpha_c = detect_alpha_c(result, refine=refine)
        except NotFound as exc:
            result.notes.append(f"alpha_c: {exc}")
        try:
            result.alpha_star, result.mu_S_star = detect_alpha_star(result, refine=refine)
        except NotFound as exc:
            result.notes.append(f"alpha_star: {exc}")
    return result


def _mu_S_at(spec: SweepSpec, alpha: float) -> float:
    return solve_point(spec.base.with_(alpha=alpha), "rational", spec.grid).mu_S


def detect_alpha_c(result: SweepResult, refine: bool = True, tol: float = ALPHA_TOL) -> float:
    """Smallest alpha with ``mu_S >= 0``.

    Locates the first sign change on the sweep grid (skipping points without a
    finite return) and bisects it on fresh solves until the bracket is below
    ``tol``. A nonnegative return at the first usable point reports the first
    grid value.
    """
    alphas = result.values
    mu = result.series("mu_S", "rational")
    usable = np.flatnonzero(np.isfinite(mu))
    if usable.size == 0:
        raise NotFound("no finite investor return on the grid")
    if mu[usable[0]] >= 0:
        return float(alphas[0])
    for a, b in zip(usable, usable[1:]):
        if mu[a] < 0 <= mu[b]:
            lo, hi = float(alphas[a]), float(alphas[b])
            break
    else:
        raise NotFound("investor return never turns nonnegative on the grid")
    if not refine:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        try:
            m = _mu_S_at(result.spec, mid)
        except AgrifinError:
            lo = mid
            continue
        if m >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def detect_alpha_star(result: SweepResult, refine: bool = True, tol: float = ALPHA_TOL) -> tuple[float, float]:
    """Interior maximiser of ``mu_S`` over alpha.

    Grid localisation (the degenerate ``alpha = 0`` row is excluded) followed
    by golden-section search on fresh solves between the neighbouring grid
    values. Returns ``(alpha_star, mu_S(alpha_star))``.
    """
    alphas = result.values
    mu = result.series("mu_S", "rational")
    degenerate = np.array([r is None or r.investor_degenerate for r in result.rows["rational"]])
    mu = np.where(degenerate, np.nan, mu)
    if not np.isfinite(mu).any():
        raise NotFound("no usable investor return on the grid")
    k = int(np.nanargmax(mu))
    if k == 0 or k == len(alphas) - 1 or not (np.isfinite(mu[k - 1]) and np.isfinite(mu[k + 1])):
        raise NotFound(f"maximum of the investor return on the grid boundary at alpha={alphas[k]:.6g}")
    if not refine:
        return float(alphas[k]), float(mu[k])
    a, b, c = float(alphas[k - 1]), float(alphas[k]), float(alphas[k + 1])
    res = minimize_scalar(
        lambda x: -_mu_S_at(result.spec, float(x)),
        bracket=(a, b, c),
        method="golden",
        options={"xtol": tol / (2.0 * b)},
    )
    x, fx = float(res.x), float(-res.fun)
    if fx < mu[k]:
        return float(alphas[k]), float(mu[k])
    return x, fx


def feasibility_alpha_limit(params: ScenarioParams, gamma: float, n_points: int = 133, truncation: float = 4.0) -> float:
    """Largest alpha keeping the extreme node ``theta0 + truncation sigma_bar sqrt(tau)`` clearable at ``gamma``."""
    s = params.aggregate_std
    if s == 0.0:
        return math.inf
    top = params.theta0 + truncation * s
    sig = params.idiosyncratic_std
    pm = float(gaussian_partial_moment(0.0, top, sig)) if sig > 0 else top
    return 0.5 * gamma * pm / (top - params.theta0)


def default_alpha_range(
    params: ScenarioParams,
    gc: GridConfig = GridConfig(),
    cap: str = "integration",
) -> tuple[float, float]:
    """Default alpha axis ``[0, alpha_max]``.

    ``alpha_max = min(1, feasibility limit at the segmented-market gamma)``; with
    ``cap="integration"`` it is further capped at ``gamma0 / 2``, the level at
    which the investor's position fully offsets the first-order aggregate
    supply shock. Beyond it the price schedule turns non-monotone and the
    equilibrium approaches the existence boundary.
    """
    if cap not in ("integration", "feasibility"):
        raise DomainError(f"cap must be 'integration' or 'feasibility', got {cap!r}")
    base = params.with_(alpha=0.0)
    g0 = solve_gamma(base, gc.grid(base), guess=gc.guess, tol=gc.tol, inner_tol=gc.inner_tol).gamma
    hi = min(1.0, feasibility_alpha_limit(params, g0, gc.n_points, gc.truncation))
    if cap == "integration":
        hi = min(hi, 0.5 * g0)
    return 0.0, hi


def alpha_sweep_spec(params: ScenarioParams, n: int = 51, mode: str = "rational", gc: GridConfig = GridConfig(), cap: str = "integration") -> SweepSpec:
    lo, hi = default_alpha_range(params, gc, cap)
    return SweepSpec(params, "alpha", tuple(np.linspace(lo, hi, n)), mode, gc)


@dataclass(frozen=True)
class Calibration:
    params: ScenarioParams
    default_frac: float
    target: float
    reached: bool
    w_bracket: tuple
    floor: float


def _default_at(params: ScenarioParams, gc: GridConfig) -> float:
    p0 = params.with_(alpha=0.0)
    return solve_point(p0, "rational", gc).default_frac


def calibrate_w(
    base: ScenarioParams,
    target_default: float,
    sigma_multiplier: float = 2.0,
    anchor_fixed_cost: bool = True,
    w_max_factor: float = 1e4,
    tolerance: float = 0.005,
    gc: GridConfig = GridConfig(),
) -> Calibration:
    """Scale ``sigma_bar`` and bisect ``w`` towards a segmented-market default rate.

    With ``anchor_fixed_cost`` the fixed cost is frozen in absolute units at
    the base market's segmented-market level, so that a larger demand scale
    lowers the relative weight of the fixed cost. (With the cost proportional
    to the investment the default rate does not depend on ``w`` at all.)
    Bisection runs in ``log w`` over ``[w_base, w_max_factor * w_base]`` and
    always returns the closest point found; ``reached`` tells whether it lies
    within ``tolerance`` of the target.
    """
    if not 0.0 < target_default < 1.0:
        raise DomainError(f"target_default must be in (0, 1), got {target_default!r}")
    if not sigma_multiplier > 0:
        raise DomainError(f"sigma_multiplier must be > 0, got {sigma_multiplier!r}")
    params = base.with_(sigma_bar=base.sigma_bar * sigma_multiplier)
    if anchor_fixed_cost and base.fixed_cost_units == "investment":
        b0 = base.with_(alpha=0.0)
        g = solve_gamma(b0, gc.grid(b0), guess=gc.guess, tol=gc.tol, inner_tol=gc.inner_tol).gamma
        params = params.with_(c_f=base.fixed_cost(g), fixed_cost_units="absolute")

    lo, hi = math.log(base.w), math.log(base.w * w_max_factor)
    d_lo = _default_at(params.with_(w=math.exp(lo)), gc)
    d_hi = _default_at(params.with_(w=math.exp(hi)), gc)
    best = min(((d_lo, lo), (d_hi, hi)), key=lambda t: abs(t[0] - target_default))
    bracket = (math.exp(lo), math.exp(hi))
    floor = min(d_lo, d_hi)
    if (d_lo - target_default) * (d_hi - target_default) <= 0:
        for _ in range(60):
            if abs(best[0] - target_default) < 0.1 * tolerance or hi - lo < 1e-10:
                break
            mid = 0.5 * (lo + hi)
            d = _default_at(params.with_(w=math.exp(mid)), gc)
            if abs(d - target_default) < abs(best[0] - target_default):
                best = (d, mid)
            if (d_lo - target_default) * (d - target_default) <= 0:
                hi, d_hi = mid, d
            else:
                lo, d_lo = mid, d
    d, u = best
    return Calibration(
        params.with_(w=math.exp(u)), float(d), float(target_default),
        abs(d - target_default) <= tolerance, bracket, float(floor),
    )


def calibrate_market_B(
    base: ScenarioParams,
    target_default: float = 0.02,
    sigma_multiplier: float = 2.0,
    anchor_fixed_cost: bool = True,
    w_max_factor: float = 1e4,
    tolerance: float = 0.005,
    gc: GridConfig = GridConfig(),
) -> ScenarioParams:
    """Low-default comparison market; raises :class:`CalibrationFailure` if unreachable."""
    cal = calibrate_w(base, target_default, sigma_multiplier, anchor_fixed_cost, w_max_factor, tolerance, gc)
    if not cal.reached:
        raise CalibrationFailure(
            f"default rate {target_default:.4g} unreachable for w in "
            f"[{cal.w_bracket[0]:.4g}, {cal.w_bracket[1]:.4g}]: closest {cal.default_frac:.4g} "
            f"at w={cal.params.w:.4g} (lowest bracket-end rate {cal.floor:.4g})"
        )
    return cal.params
