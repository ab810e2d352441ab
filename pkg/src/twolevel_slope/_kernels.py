"""Compiled scalar kernels behind the asymptotic calculations.

The trade-off searches evaluate the shared height and the risk millions of
times, so the scalar formulas live here as numba functions and the public
modules wrap them.  Atom values may be +inf, which stands for an arbitrarily
strong signal: it never enters the flat band and always pays the top penalty.
"""
import math

import numba
import numpy as np

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@numba.njit(cache=True)
def ncdf(x):
    return 0.5 * math.erfc(-x * _INV_SQRT2)


@numba.njit(cache=True)
def nsf(x):
    return 0.5 * math.erfc(x * _INV_SQRT2)


@numba.njit(cache=True)
def npdf(x):
    if math.isinf(x):
        return 0.0
    return math.exp(-0.5 * x * x) * _INV_SQRT_2PI


@numba.njit(cache=True)
def iprob(lo, hi):
    """P(lo < Z < hi), taking upper tails when the interval is on the right."""
    if hi <= lo:
        return 0.0
    if lo > 0.0:
        return nsf(lo) - nsf(hi)
    return ncdf(hi) - ncdf(lo)


@numba.njit(cache=True)
def _psi_nonpos(y):
    # y*Phi(y) + phi(y) for y <= 0
    if math.isinf(y):
        return 0.0
    return y * ncdf(y) + npdf(y)


@numba.njit(cache=True)
def psi_diff(a, b):
    """psi(a) - psi(b) with psi(x) = x*Phi(x) + phi(x)."""
    if a > 0.0 and b > 0.0:
        return (a - b) + _psi_nonpos(-a) - _psi_nonpos(-b)
    pa = a + _psi_nonpos(-a) if a > 0.0 else _psi_nonpos(a)
    pb = b + _psi_nonpos(-b) if b > 0.0 else _psi_nonpos(b)
    return pa - pb


@numba.njit(cache=True)
def abs_cdf(t, x):
    """P(|t + Z| < x)."""
    if x <= 0.0:
        return 0.0
    t = abs(t)
    if math.isinf(t):
        return 0.0
    v = iprob(-x - t, x - t)
    return v if v > 0.0 else 0.0


@numba.njit(cache=True)
def abs_int(t, lo, hi):
    """Integral over x in (lo, hi) of P(|t + Z| < x)."""
    t = abs(t)
    if math.isinf(t):
        return 0.0
    lo = max(lo, 0.0)
    hi = max(hi, 0.0)
    if hi <= lo:
        return 0.0
    return psi_diff(hi - t, lo - t) + psi_diff(-hi - t, -lo - t)


@numba.njit(cache=True)
def mix_cdf(vals, probs, x):
    acc = 0.0
    for i in range(vals.shape[0]):
        acc += probs[i] * abs_cdf(vals[i], x)
    return acc


@numba.njit(cache=True)
def mix_int(vals, probs, lo, hi):
    acc = 0.0
    for i in range(vals.shape[0]):
        acc += probs[i] * abs_int(vals[i], lo, hi)
    return acc


@numba.njit(cache=True)
def solve_h(vals, probs, a1, a2, s):
    """Shared height: root in h of mix_int(h+a2, h+a1) = (1-s)(a1-a2).

    Safeguarded Newton on a bracket; the left end -a1 always has a negative
    residual.  Returns nan when the residual never turns positive, which only
    happens when atoms at +inf carry probability >= s.
    """
    gap = a1 - a2
    c = (1.0 - s) * gap
    lo = -a1
    m = 0.0
    for i in range(vals.shape[0]):
        if not math.isinf(vals[i]):
            m = max(m, abs(vals[i]))
    hi = m + 10.0
    ghi = mix_int(vals, probs, hi + a2, hi + a1) - c
    k = 0
    while ghi <= 0.0:
        k += 1
        if k > 60:
            return math.nan
        hi = 2.0 * hi + 1.0
        ghi = mix_int(vals, probs, hi + a2, hi + a1) - c
    h = 0.5 * (lo + hi)
    tol = 1e-13 * max(1.0, gap)
    for _ in range(300):
        g = mix_int(vals, probs, h + a2, h + a1) - c
        if g > 0.0:
            hi = h
        else:
            lo = h
        if abs(g) <= tol or hi - lo <= 1e-14 * max(1.0, abs(h)):
            break
        d = mix_cdf(vals, probs, h + a1) - mix_cdf(vals, probs, h + a2)
        h_new = h - g / d if d > 0.0 else 0.5 * (lo + hi)
        if not (lo < h_new < hi):
            h_new = 0.5 * (lo + hi)
        h = h_new
    return h


@numba.njit(cache=True)
def risk_e(t, a1, a2, h):
    """E[(eta(t + Z) - t)^2] for the two-level limiting scalar function.

    Closed form in normal cdf/pdf terms; only max(h, 0) matters because a
    nonpositive height gives plain soft thresholding at a1.
    """
    if math.isinf(t):
        return a1 * a1 + 1.0
    hp = h if h > 0.0 else 0.0
    out = (a1 * a1 + 1.0) * (nsf(a1 + hp - t) + ncdf(-a1 - hp - t))
    out += t * t * iprob(-a2 - t, a2 - t)
    out += (hp - t) ** 2 * iprob(a2 + hp - t, a1 + hp - t)
    out += (hp + t) ** 2 * iprob(-a1 - hp - t, -a2 - hp - t)
    out += (a2 * a2 + 1.0) * (iprob(-a2 - hp - t, -a2 - t) + iprob(a2 - t, a2 + hp - t))
    out -= (a1 - hp + t) * npdf(a1 + hp - t)
    out -= (a1 - hp - t) * npdf(-a1 - hp - t)
    out += (a2 - hp - t) * npdf(-a2 - hp - t)
    out += (a2 - hp + t) * npdf(a2 + hp - t)
    out -= (a2 - t) * npdf(-a2 - t)
    out -= (a2 + t) * npdf(a2 - t)
    return out


@numba.njit(cache=True)
def height(vals, probs, a1, a2, s):
    if a1 - a2 <= 0.0:
        return 0.0
    return solve_h(vals, probs, a1, a2, s)


@numba.njit(cache=True)
def f_value(vals, probs, a1, a2, s):
    """(F, h) for a discrete prior; F is nan when h has no solution."""
    h = height(vals, probs, a1, a2, s)
    if math.isnan(h):
        return math.nan, h
    acc = 0.0
    for i in range(vals.shape[0]):
        if probs[i] > 0.0:
            acc += probs[i] * risk_e(vals[i], a1, a2, h)
    return acc, h


@numba.njit(cache=True)
def deriv_mean(vals, probs, a1, a2, h):
    """E[eta'(pi + Z)]: mass on the two soft-thresholding branches."""
    hp = h if h > 0.0 else 0.0
    acc = 0.0
    for i in range(vals.shape[0]):
        v = vals[i]
        if math.isinf(v):
            acc += probs[i]
            continue
        top = 1.0 - abs_cdf(v, a1 + hp)
        mid = abs_cdf(v, a2 + hp) - abs_cdf(v, a2)
        acc += probs[i] * (top + max(mid, 0.0))
    return acc


@numba.njit(cache=True)
def tpp_power(t, alpha):
    """P(|t + Z| > alpha)."""
    if math.isinf(t):
        return 1.0
    return 1.0 - abs_cdf(t, alpha)


@numba.njit(cache=True)
def rho_value(t1, t2, a2, u):
    p1 = tpp_power(t1, a2)
    p2 = tpp_power(t2, a2)
    if t1 == t2:
        return 1.0 if abs(p1 - u) <= 1e-12 else math.nan
    den = p1 - p2
    if den == 0.0:
        return math.nan
    return (u - p2) / den


@numba.njit(cache=True)
def f_three_point(t1, t2, rho, eps, a1, a2, s):
    vals = np.empty(3)
    probs = np.empty(3)
    vals[0] = 0.0
    vals[1] = t1
    vals[2] = t2
    probs[0] = 1.0 - eps
    probs[1] = eps * rho
    probs[2] = eps * (1.0 - rho)
    return f_value(vals, probs, a1, a2, s)


@numba.njit(cache=True)
def scan_three_point(a2, eps, delta, a1_list, s_list, t1s, t2s, rhos, stop_below):
    """Smallest F over a grid of (a1, s, pair) with a positive shared height.

    Scans a1 outermost, then s, then the (t1, t2) pairs, so on ties the first
    hit has the smallest a1 and then the smallest s.  With ``stop_below`` the
    scan returns at the first F <= delta.
    """
    best = math.inf
    bi = -1
    bj = -1
    bk = -1
    bh = math.nan
    for i in range(a1_list.shape[0]):
        a1 = a1_list[i]
        if not a1 > a2:
            continue
        for j in range(s_list.shape[0]):
            s = s_list[j]
            for k in range(t1s.shape[0]):
                F, h = f_three_point(t1s[k], t2s[k], rhos[k], eps, a1, a2, s)
                if not (h > 0.0) or math.isnan(F):
                    continue
                if F < best:
                    best = F
                    bi = i
                    bj = j
                    bk = k
                    bh = h
                    if stop_below and best <= delta:
                        return best, bi, bj, bk, bh
    return best, bi, bj, bk, bh


@numba.njit(cache=True)
def scan_lasso(alpha, eps, t1s, t2s, rhos):
    """Smallest one-level F over the (t1, t2) pairs at threshold alpha."""
    best = math.inf
    bk = -1
    for k in range(t1s.shape[0]):
        F, h = f_three_point(t1s[k], t2s[k], rhos[k], eps, alpha, alpha, 0.5)
        if F < best:
            best = F
            bk = k
    return best, bk


@numba.njit(cache=True)
def f_grid(vals, probs, a2, a1_list, s_list):
    """F and h on the (a1, s) grid for one prior; rows follow a1_list."""
    na = a1_list.shape[0]
    ns = s_list.shape[0]
    F = np.empty((na, ns))
    H = np.empty((na, ns))
    for i in range(na):
        for j in range(ns):
            f, h = f_value(vals, probs, a1_list[i], a2, s_list[j])
            F[i, j] = f
            H[i, j] = h
    return F, H
