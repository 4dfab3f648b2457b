"""Equilibrium solver for an agricultural commodity market in which a
financial investor takes a position contingent on aggregate fitness."""

from ._accel import BACKEND, HAS_NUMBA
from .analytic import analytic_alpha_c, analytic_alpha_star, analytic_gamma, analytic_mu_S, analytic_solution
from .clearing import check_existence, default_threshold, solve_price, survivor_supply
from .errors import (
    AgrifinError,
    CalibrationFailure,
    ConvergenceFailure,
    DomainError,
    InfeasibleScenario,
    NoEquilibrium,
    NotFound,
    OutOfValidity,
    SingularDenominator,
)
from .expectation import GammaSolution, PriceSchedule, evaluate_F, solve_gamma, solve_gamma_multistart, solve_gamma_naive
from .metrics import EquilibriumMetrics, compute_metrics
from .model import REFERENCE, QuadratureGrid, ScenarioParams, build_grid
from .sweep import GridConfig, SweepResult, SweepSpec, calibrate_market_B, detect_alpha_c, run_sweep

__version__ = "0.1.0"
