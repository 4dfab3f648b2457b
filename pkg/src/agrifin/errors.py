"""Exception hierarchy."""


class AgrifinError(Exception):
    """Base class for all solver errors."""


class DomainError(AgrifinError, ValueError):
    """An argument lies outside the domain of a primitive."""


class NoEquilibrium(AgrifinError):
    """The clearing equation has no positive price for this node."""

    def __init__(self, theta: float, alpha: float, gamma: float, msg: str = ""):
        self.theta = theta
        self.alpha = alpha
        self.gamma = gamma
        super().__init__(
            msg or f"no clearing price: theta={theta!r}, alpha={alpha!r}, gamma={gamma!r}"
        )


class ConvergenceFailure(AgrifinError):
    """An iteration hit its cap before meeting the stopping rule."""

    def __init__(self, msg: str, residual: float = float("nan"), iterations: int = 0):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{msg} (residual={residual:.3e}, iterations={iterations})")


class InfeasibleScenario(AgrifinError):
    """One or more quadrature nodes violate the existence condition."""

    def __init__(self, nodes, gamma: float, alpha: float):
        self.nodes = list(nodes)
        self.gamma = gamma
        self.alpha = alpha
        shown = ", ".join(f"{t:.6g}" for t in self.nodes[:5])
        more = "" if len(self.nodes) <= 5 else f" (+{len(self.nodes) - 5} more)"
        super().__init__(
            f"{len(self.nodes)} infeasible node(s) at gamma={gamma:.6g}, "
            f"alpha={alpha:.6g}: {shown}{more}"
        )


class OutOfValidity(AgrifinError):
    """The closed-form approximation is outside its range of validity."""


class SingularDenominator(AgrifinError):
    """A closed-form ratio has a vanishing denominator."""


class CalibrationFailure(AgrifinError):
    """A calibration target cannot be reached inside the search bracket."""


class NotFound(AgrifinError):
    """A searched-for feature (sign change, interior maximum) is absent."""
