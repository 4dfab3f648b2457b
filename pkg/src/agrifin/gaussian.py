"""Closed-form Gaussian integrals.

Every idiosyncratic average in the model reduces to upper partial moments of a
normal law, so nothing here uses quadrature.
"""

import math

import numpy as np
from scipy.special import ndtr

from .errors import DomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_std(std):
    std = np.asarray(std, dtype=float)
    if np.any(~(std > 0)):
        raise DomainError(f"std must be > 0, got {std!r}")
    return std


def _finite(x, name):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def normal_cdf(z):
    """Standard normal CDF, accurate to ~1e-16 absolute."""
    z = _finite(z, "z")
    return _out(ndtr(z))


def normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return _out(np.exp(-0.5 * z * z) / SQRT_2PI)


def survival_probability(a, mean, std):
    """P(X > a) for X ~ N(mean, std^2)."""
    std = _check_std(std)
    u = (np.asarray(a, dtype=float) - mean) / std
    return _out(ndtr(-u))


def gaussian_partial_moment(a, mean, std):
    """Upper partial first moment: integral of x N(x; mean, std^2) over (a, inf).

    Equals ``mean * (1 - Phi(u)) + std * phi(u)`` with ``u = (a - mean) / std``.
    """
    std = _check_std(std)
    mean = np.asarray(mean, dtype=float)
    u = (np.asarray(a, dtype=float) - mean) / std
    return _out(mean * ndtr(-u) + std * np.exp(-0.5 * u * u) / SQRT_2PI)


def gaussian_partial_second_moment(a, mean, std):
    """Upper partial second moment: integral of x^2 N(x; mean, std^2) over (a, inf)."""
    std = _check_std(std)
    mean = np.asarray(mean, dtype=float)
    a = np.asarray(a, dtype=float)
    u = (a - mean) / std
    pdf = np.exp(-0.5 * u * u) / SQRT_2PI
    with np.errstate(invalid="ignore"):
        tail = np.where(pdf > 0, std * (a + mean) * pdf, 0.0)
    return _out((mean * mean + std * std) * ndtr(-u) + tail)
