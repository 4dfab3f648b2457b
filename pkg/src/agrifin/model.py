"""Scenario parameters, fitness laws and the outer quadrature grid."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import DomainError

FIXED_COST_UNITS = ("investment", "absolute")


@dataclass(frozen=True)
class ScenarioParams:
    """Exogenous parameters of one market.

    ``c_f`` is read in units of the optimal investment ``m = (gamma/2)**2`` when
    ``fixed_cost_units == "investment"`` (the default), so the fixed cost paid
    is ``c_f * (gamma/2)**2``. With ``"absolute"`` it is paid as given.
    """

    beta: float = 0.6
    w: float = 0.02
    sigma_bar: float = 0.1
    sigma: float = 0.2
    theta0: float = 0.5
    c_f: float = 0.6
    c_s: float = 0.0002
    alpha: float = 0.0
    tau: float = 1.0
    fixed_cost_units: str = "investment"

    def __post_init__(self):
        for f in fields(self):
            if f.name == "fixed_cost_units":
                continue
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise DomainError(f"{f.name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise DomainError(f"{f.name} must be finite, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        positive = ("beta", "w", "theta0", "tau")
        nonneg = ("sigma_bar", "sigma", "c_f", "c_s", "alpha")
        for name in positive:
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in nonneg:
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if self.fixed_cost_units not in FIXED_COST_UNITS:
            raise DomainError(
                f"fixed_cost_units must be one of {FIXED_COST_UNITS}, "
                f"got {self.fixed_cost_units!r}"
            )

    @property
    def aggregate_std(self) -> float:
        return self.sigma_bar * math.sqrt(self.tau)

    @property
    def idiosyncratic_std(self) -> float:
        return self.sigma * math.sqrt(self.tau)

    def fixed_cost(self, gamma: float) -> float:
        """Fixed cost in capital units for a farmer expecting ``gamma``."""
        if self.fixed_cost_units == "investment":
            return self.c_f * (0.5 * gamma) ** 2
        return self.c_f

    def with_(self, **changes) -> "ScenarioParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


REFERENCE = ScenarioParams()


@dataclass(frozen=True)
class FitnessDistributions:
    """Marginal laws at the clearing date: aggregate N(theta0, sigma_bar^2 tau)
    and, conditional on the aggregate draw, idiosyncratic N(theta, sigma^2 tau)."""

    aggregate_mean: float
    aggregate_std: float
    idiosyncratic_std: float

    @classmethod
    def from_params(cls, params: ScenarioParams) -> "FitnessDistributions":
        return cls(params.theta0, params.aggregate_std, params.idiosyncratic_std)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Uniform nodes over the truncated aggregate law with probability weights."""

    nodes: np.ndarray
    weights: np.ndarray
    n_points: int
    truncation: float

    def expect(self, values) -> float:
        """Grid average of per-node values, summed in node order."""
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def std(self, values) -> float:
        v = np.asarray(values, dtype=float)
        m = self.expect(v)
        return math.sqrt(max(self.expect((v - m) ** 2), 0.0))

    def __len__(self):
        return len(self.nodes)


def build_grid(params: ScenarioParams, n_points: int = 133, truncation: float = 4.0) -> QuadratureGrid:
    """Nodes at ``theta0 + k h`` spanning ``theta0 +/- truncation * sigma_bar sqrt(tau)``.

    Each node carries the normal density times the spacing (piecewise-constant
    interpolation of the integrand), renormalised over the truncated support.
    Offsets are built antisymmetrically so odd moments cancel to rounding.
    """
    if int(n_points) != n_points or n_points < 3:
        raise DomainError(f"n_points must be an integer >= 3, got {n_points!r}")
    if not truncation > 0:
        raise DomainError(f"truncation must be > 0, got {truncation!r}")
    n_points = int(n_points)
    s = params.aggregate_std
    if s == 0.0:
        return QuadratureGrid(np.array([params.theta0]), np.array([1.0]), 1, float(truncation))
    z = (np.arange(n_points) - 0.5 * (n_points - 1)) * (2.0 * truncation / (n_points - 1))
    density = np.exp(-0.5 * z * z)
    weights = density / density.sum()
    nodes = params.theta0 + s * z
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureGrid(nodes, weights, n_points, float(truncation))
