"""Standard-normal analytics shared by the asymptotic computations.

Everything here is vectorized over numpy arrays and pure.  The integral
helpers are written in terms of ``psi(x) = x*Phi(x) + phi(x)``, the
antiderivative of ``Phi``, with the large-argument branch rewritten so that
differences of nearly equal values do not cancel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval needs lo <= hi, got ({self.lo}, {self.hi})")


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def normal_cdf(x):
    return special.ndtr(np.asarray(x, dtype=float))


def normal_sf(x):
    return special.ndtr(-np.asarray(x, dtype=float))


def normal_quantile(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)) or np.any(np.isnan(p)):
        raise ValueError("normal_quantile needs p strictly inside (0, 1)")
    return special.ndtri(p)


def _psi(x):
    """x*Phi(x) + phi(x), evaluated as x + psi(-x) for positive x."""
    x = np.asarray(x, dtype=float)
    ax = -np.abs(x)
    with np.errstate(invalid="ignore"):
        neg = np.where(np.isneginf(ax), 0.0, ax * special.ndtr(ax) + normal_pdf(ax))
    return np.where(x > 0, x + neg, neg)


def _psi_diff(a, b):
    """psi(a) - psi(b) without cancelling the linear part for large arguments."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    both_pos = (a > 0) & (b > 0)
    with np.errstate(invalid="ignore"):
        lin = np.where(both_pos, a - b, 0.0)
        pa = np.where(both_pos, _psi(-a), _psi(a))
        pb = np.where(both_pos, _psi(-b), _psi(b))
    return lin + pa - pb


def abs_shift_cdf(t, x):
    """P(|t + Z| < x) for Z standard normal; zero for x <= 0."""
    t = np.abs(np.asarray(t, dtype=float))
    x = np.asarray(x, dtype=float)
    hi = x - t
    lo = -x - t
    # both ends in the upper tail: use survival functions instead of cdfs
    upper = lo > 0
    val = np.where(upper,
                   special.ndtr(-lo) - special.ndtr(-hi),
                   special.ndtr(hi) - special.ndtr(lo))
    return np.maximum(val, 0.0)


def abs_shift_cdf_integral(t, iv):
    """Integral of ``abs_shift_cdf(t, x)`` over x in ``iv`` (closed form)."""
    if isinstance(iv, Interval):
        lo, hi = iv.lo, iv.hi
    else:
        lo, hi = iv
    return abs_shift_integral(t, lo, hi)


def abs_shift_integral(t, lo, hi):
    """Vectorized form of :func:`abs_shift_cdf_integral` with explicit limits."""
    t = np.abs(np.asarray(t, dtype=float))
    lo = np.maximum(np.asarray(lo, dtype=float), 0.0)
    hi = np.maximum(np.asarray(hi, dtype=float), 0.0)
    with np.errstate(invalid="ignore"):
        right = _psi_diff(hi - t, lo - t)
        left = _psi_diff(-hi - t, -lo - t)
    out = right + left
    return np.where(np.isinf(t), 0.0, out)


def _interval_prob(alpha, beta):
    """P(alpha < Z < beta), using upper tails when both ends are positive."""
    return np.where(alpha > 0,
                    special.ndtr(-alpha) - special.ndtr(-beta),
                    special.ndtr(beta) - special.ndtr(alpha))


def _xphi(x, c):
    """phi(x) * (x + c), taken as 0 at infinite x."""
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(x), 0.0, normal_pdf(x) * (x + c))


def truncated_second_moment(mu, iv):
    """E(X^2 | lo < X < hi) for X ~ N(mu, 1).  Ends may be infinite."""
    if isinstance(iv, Interval):
        lo, hi = iv.lo, iv.hi
    else:
        lo, hi = iv
    mu = np.asarray(mu, dtype=float)
    alpha = np.asarray(lo, dtype=float) - mu
    beta = np.asarray(hi, dtype=float) - mu
    prob = _interval_prob(alpha, beta)
    if np.any(prob <= 0.0):
        raise ValueError("truncation interval has zero probability")
    return mu * mu + 1.0 - (_xphi(beta, 2.0 * mu) - _xphi(alpha, 2.0 * mu)) / prob
