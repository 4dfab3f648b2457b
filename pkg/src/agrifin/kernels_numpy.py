"""Vectorised numpy twin of :func:`agrifin.kernels.clear_nodes`.

Same bracket expansion, Illinois update and stopping rule, applied to all
nodes at once with per-node masks. Used when numba is disabled.
"""

import math

import numpy as np
from scipy.special import ndtr

from .kernels import MAX_ITER, NO_EQUILIBRIUM, OK

_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
_LN10 = math.log(10.0)


def partial_moment(a, mean, std):
    if std > 0.0:
        u = (a - mean) / std
        return mean * ndtr(-u) + std * np.exp(-0.5 * u * u) * _INV_SQRT2PI
    return np.where(mean > a, mean, 0.0)


def excess_log(u, theta, half_gamma, cost_num, sig, q_fin, w, beta):
    p = np.exp(u)
    ts = np.maximum(cost_num / p, 0.0)
    return w * np.exp(-beta * u) - half_gamma * partial_moment(ts, theta, sig) - q_fin


def _bracket(theta, q, half_gamma, cost_num, sig, w, beta, p_cap):
    n = theta.shape[0]
    u_cap = math.log(p_cap)
    g0 = excess_log(np.zeros(n), theta, half_gamma, cost_num, sig, q, w, beta)
    lo = np.zeros(n)
    hi = np.zeros(n)
    glo = g0.copy()
    ghi = g0.copy()
    evals = np.ones(n, dtype=np.int64)
    status = np.full(n, OK, dtype=np.int64)

    idx = np.flatnonzero(g0 > 0.0)
    while idx.size:
        trial = lo[idx] + _LN10
        capped = trial > u_cap
        status[idx[capped]] = NO_EQUILIBRIUM
        idx = idx[~capped]
        trial = trial[~capped]
        gt = excess_log(trial, theta[idx], half_gamma, cost_num, sig, q[idx], w, beta)
        evals[idx] += 1
        hi[idx] = trial
        ghi[idx] = gt
        crossed = gt <= 0.0
        keep = idx[~crossed]
        lo[keep] = trial[~crossed]
        glo[keep] = gt[~crossed]
        idx = keep

    idx = np.flatnonzero(g0 < 0.0)
    while idx.size:
        trial = hi[idx] - _LN10
        capped = trial < -u_cap
        status[idx[capped]] = NO_EQUILIBRIUM
        idx = idx[~capped]
        trial = trial[~capped]
        gt = excess_log(trial, theta[idx], half_gamma, cost_num, sig, q[idx], w, beta)
        evals[idx] += 1
        lo[idx] = trial
        glo[idx] = gt
        crossed = gt >= 0.0
        keep = idx[~crossed]
        hi[keep] = trial[~crossed]
        ghi[keep] = gt[~crossed]
        idx = keep
    return lo, glo, hi, ghi, evals, status


def clear_nodes(nodes, q_fin, half_gamma, cost_num, sig, w, beta, tol, maxiter, p_cap):
    theta = np.asarray(nodes, dtype=float)
    q = np.asarray(q_fin, dtype=float)
    n = theta.shape[0]
    prices = np.full(n, np.nan)
    resid = np.full(n, np.nan)

    s_max = half_gamma * partial_moment(0.0, theta, sig)
    feasible = s_max + q > 0.0
    lo, glo, hi, ghi, iters, status = _bracket(theta, q, half_gamma, cost_num, sig, w, beta, p_cap)
    iters[~feasible] = 0
    status[~feasible] = NO_EQUILIBRIUM

    exact_lo = (status == OK) & (glo == 0.0)
    exact_hi = (status == OK) & (ghi == 0.0) & ~exact_lo
    prices[exact_lo] = np.exp(lo[exact_lo])
    prices[exact_hi] = np.exp(hi[exact_hi])
    resid[exact_lo | exact_hi] = 0.0

    flo = glo.copy()
    fhi = ghi.copy()
    side = np.zeros(n, dtype=np.int64)
    p_prev = np.full(n, np.nan)
    active = np.flatnonzero((status == OK) & ~exact_lo & ~exact_hi)
    steps = np.zeros(n, dtype=np.int64)

    while active.size:
        a = active
        l, h, fl, fh = lo[a], hi[a], flo[a], fhi[a]
        u = h - fh * (h - l) / (fh - fl)
        u = np.where((l < u) & (u < h), u, 0.5 * (l + h))
        gu = excess_log(u, theta[a], half_gamma, cost_num, sig, q[a], w, beta)
        iters[a] += 1
        steps[a] += 1
        p = np.exp(u)

        hit = gu == 0.0
        prices[a[hit]] = p[hit]
        resid[a[hit]] = 0.0

        pos = (gu > 0.0) & ~hit
        neg = (gu < 0.0) & ~hit
        ip, ineg = a[pos], a[neg]
        lo[ip] = u[pos]
        glo[ip] = gu[pos]
        flo[ip] = gu[pos]
        fhi[ip[side[ip] == 1]] *= 0.5
        side[ip] = 1
        hi[ineg] = u[neg]
        ghi[ineg] = gu[neg]
        fhi[ineg] = gu[neg]
        flo[ineg[side[ineg] == -1]] *= 0.5
        side[ineg] = -1

        scale = np.maximum(1.0, p)
        with np.errstate(invalid="ignore"):
            small_step = np.abs(p - p_prev[a]) < tol * scale
        done = ~hit & (small_step | (np.exp(hi[a]) - np.exp(lo[a]) <= tol * scale))
        p_prev[a] = p
        d = a[done]
        if d.size:
            u_fin = hi[d] - ghi[d] * (hi[d] - lo[d]) / (ghi[d] - glo[d])
            u_fin = np.where((lo[d] <= u_fin) & (u_fin <= hi[d]), u_fin, 0.5 * (lo[d] + hi[d]))
            prices[d] = np.exp(u_fin)
            resid[d] = excess_log(u_fin, theta[d], half_gamma, cost_num, sig, q[d], w, beta)

        capped = ~hit & ~done & (steps[a] >= maxiter)
        c = a[capped]
        if c.size:
            u_mid = 0.5 * (lo[c] + hi[c])
            prices[c] = np.exp(u_mid)
            resid[c] = excess_log(u_mid, theta[c], half_gamma, cost_num, sig, q[c], w, beta)
            status[c] = MAX_ITER
        active = a[~hit & ~done & ~capped]

    return prices, iters, resid, status
