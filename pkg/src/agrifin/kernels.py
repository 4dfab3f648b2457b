"""Per-node clearing kernels (numba-compiled when available).

All functions take plain floats so they compile in nopython mode. The supply
side is parameterised by ``half_gamma = gamma/2`` and ``cost_num`` such that
the default threshold is ``max(0, cost_num / price)``; for the model
``cost_num = gamma/2 + 2 c / gamma`` with ``c`` the fixed cost in capital units.

Status codes returned by the solvers: 0 converged, 1 no positive clearing
price (existence violated or bracket cap reached), 2 iteration cap.
"""

import math

import numpy as np

from ._accel import njit

OK = 0
NO_EQUILIBRIUM = 1
MAX_ITER = 2

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
_LN10 = math.log(10.0)


@njit(cache=True, nogil=True)
def ndtr(z):
    return 0.5 * math.erfc(-z * _INV_SQRT2)


@njit(cache=True, nogil=True)
def partial_moment(a, mean, std):
    if std > 0.0:
        u = (a - mean) / std
        return mean * ndtr(-u) + std * math.exp(-0.5 * u * u) * _INV_SQRT2PI
    return mean if mean > a else 0.0


@njit(cache=True, nogil=True)
def threshold(price, cost_num):
    ts = cost_num / price
    return ts if ts > 0.0 else 0.0


@njit(cache=True, nogil=True)
def supply(price, theta, half_gamma, cost_num, sig):
    return half_gamma * partial_moment(threshold(price, cost_num), theta, sig)


@njit(cache=True, nogil=True)
def excess_log(u, theta, half_gamma, cost_num, sig, q_fin, w, beta):
    """Excess demand at price exp(u); strictly decreasing in u."""
    p = math.exp(u)
    return w * math.exp(-beta * u) - supply(p, theta, half_gamma, cost_num, sig) - q_fin


@njit(cache=True, nogil=True)
def bracket_log(theta, half_gamma, cost_num, sig, q_fin, w, beta, p_cap):
    """Expand geometrically from p=1 until excess demand changes sign.

    Returns (u_lo, g_lo, u_hi, g_hi, evaluations, status) with g_lo > 0 > g_hi.
    """
    u_cap = math.log(p_cap)
    g0 = excess_log(0.0, theta, half_gamma, cost_num, sig, q_fin, w, beta)
    n = 1
    if g0 == 0.0:
        return 0.0, g0, 0.0, g0, n, OK
    if g0 > 0.0:
        lo, glo = 0.0, g0
        while True:
            hi = lo + _LN10
            if hi > u_cap:
                return lo, glo, hi, math.nan, n, NO_EQUILIBRIUM
            ghi = excess_log(hi, theta, half_gamma, cost_num, sig, q_fin, w, beta)
            n += 1
            if ghi <= 0.0:
                return lo, glo, hi, ghi, n, OK
            lo, glo = hi, ghi
    hi, ghi = 0.0, g0
    while True:
        lo = hi - _LN10
        if lo < -u_cap:
            return lo, math.nan, hi, ghi, n, NO_EQUILIBRIUM
        glo = excess_log(lo, theta, half_gamma, cost_num, sig, q_fin, w, beta)
        n += 1
        if glo >= 0.0:
            return lo, glo, hi, ghi, n, OK
        hi, ghi = lo, glo


@njit(cache=True, nogil=True)
def clear_bracketed(theta, half_gamma, cost_num, sig, q_fin, w, beta, tol, maxiter, p_cap):
    """Root of excess demand by Illinois regula falsi on log price.

    Stops when successive iterates (or the bracket ends) differ by less than
    ``tol * max(1, p)`` in price; the returned price is the final
    interpolation between the true bracket values.
    Returns (price, iterations, residual, status).
    """
    s_max = half_gamma * partial_moment(0.0, theta, sig)
    if s_max + q_fin <= 0.0:
        return math.nan, 0, math.nan, NO_EQUILIBRIUM
    lo, glo, hi, ghi, n, status = bracket_log(theta, half_gamma, cost_num, sig, q_fin, w, beta, p_cap)
    if status != OK:
        return math.nan, n, math.nan, status
    if glo == 0.0:
        return math.exp(lo), n, 0.0, OK
    if ghi == 0.0:
        return math.exp(hi), n, 0.0, OK
    # Illinois keeps scaled copies; the true end values give the final estimate
    flo, fhi = glo, ghi
    side = 0
    p_prev = math.nan
    for it in range(maxiter):
        u = hi - fhi * (hi - lo) / (fhi - flo)
        if not (lo < u < hi):
            u = 0.5 * (lo + hi)
        gu = excess_log(u, theta, half_gamma, cost_num, sig, q_fin, w, beta)
        n += 1
        p = math.exp(u)
        if gu == 0.0:
            return p, n, 0.0, OK
        if gu > 0.0:
            lo, glo, flo = u, gu, gu
            if side == 1:
                fhi *= 0.5
            side = 1
        else:
            hi, ghi, fhi = u, gu, gu
            if side == -1:
                flo *= 0.5
            side = -1
        scale = max(1.0, p)
        if abs(p - p_prev) < tol * scale or math.exp(hi) - math.exp(lo) <= tol * scale:
            u_fin = hi - ghi * (hi - lo) / (ghi - glo)
            if not (lo <= u_fin <= hi):
                u_fin = 0.5 * (lo + hi)
            g_fin = excess_log(u_fin, theta, half_gamma, cost_num, sig, q_fin, w, beta)
            return math.exp(u_fin), n, g_fin, OK
        p_prev = p
    u = 0.5 * (lo + hi)
    return math.exp(u), n, excess_log(u, theta, half_gamma, cost_num, sig, q_fin, w, beta), MAX_ITER


@njit(cache=True, nogil=True)
def clear_fixed_point(theta, half_gamma, cost_num, sig, q_fin, w, beta, tol, maxiter, p_cap, p_start):
    """Iterate p <- (w / (Q(p) + Q_S))**(1/beta) until successive prices differ by < tol.

    Iterates are clamped to the sign-change bracket; a nonpositive total
    supply sends the iterate to the bracket's upper end.
    """
    s_max = half_gamma * partial_moment(0.0, theta, sig)
    if s_max + q_fin <= 0.0:
        return math.nan, 0, math.nan, NO_EQUILIBRIUM
    lo, glo, hi, ghi, n, status = bracket_log(theta, half_gamma, cost_num, sig, q_fin, w, beta, p_cap)
    if status != OK:
        return math.nan, 0, math.nan, status
    p_lo = math.exp(lo)
    p_hi = math.exp(hi)
    p = min(max(p_start, p_lo), p_hi)
    inv_beta = 1.0 / beta
    for m in range(maxiter):
        total = supply(p, theta, half_gamma, cost_num, sig) + q_fin
        if total <= 0.0:
            p_new = p_hi
        else:
            p_new = min(max((w / total) ** inv_beta, p_lo), p_hi)
        if abs(p_new - p) < tol:
            g = excess_log(math.log(p_new), theta, half_gamma, cost_num, sig, q_fin, w, beta)
            return p_new, m + 1, g, OK
        p = p_new
    return p, maxiter, excess_log(math.log(p), theta, half_gamma, cost_num, sig, q_fin, w, beta), MAX_ITER


@njit(cache=True, nogil=True)
def clear_nodes(nodes, q_fin, half_gamma, cost_num, sig, w, beta, tol, maxiter, p_cap):
    """Bracketed clearing at every node. Returns (prices, iterations, residuals, status)."""
    n = nodes.shape[0]
    prices = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    resid = np.empty(n)
    status = np.empty(n, dtype=np.int64)
    for k in range(n):
        p, it, r, st = clear_bracketed(nodes[k], half_gamma, cost_num, sig, q_fin[k], w, beta, tol, maxiter, p_cap)
        prices[k] = p
        iters[k] = it
        resid[k] = r
        status[k] = st
    return prices, iters, resid, status
