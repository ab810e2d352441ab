"""Proximal operators of the sorted-L1 penalty.

The general operator follows the usual recipe: sort magnitudes, subtract the
penalty, project onto nonincreasing sequences with a pool-adjacent-violators
pass, clip at zero and put order and signs back.  The projection keeps a stack
of (sum, count) blocks and only divides once per block when writing out, so
all coordinates of one block carry bit-identical values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np


@dataclass(frozen=True)
class TwoLevelPenalty:
    """Penalty with ceil(s*p) entries equal to lam1 and the rest equal to lam2."""

    lam1: float
    lam2: float
    s: float

    def __post_init__(self):
        if not (self.lam1 >= self.lam2 >= 0.0):
            raise ValueError("need lam1 >= lam2 >= 0")
        if not self.lam1 > 0.0:
            raise ValueError("need lam1 > 0")
        if not 0.0 < self.s < 1.0:
            raise ValueError("s must lie strictly inside (0, 1)")

    def n_top(self, p: int) -> int:
        return n_top_entries(self.s, p)

    def materialize(self, p: int) -> np.ndarray:
        k = self.n_top(p)
        out = np.full(p, float(self.lam2))
        out[:k] = self.lam1
        return out

    def scaled(self, c: float) -> "TwoLevelPenalty":
        return TwoLevelPenalty(self.lam1 * c, self.lam2 * c, self.s)


def n_top_entries(s: float, p: int) -> int:
    """Number of lam1 entries, ceil(s*p).

    The product is rounded to 9 decimals first so that e.g. 0.15 * 100 counts
    as 15 rather than 16.
    """
    k = int(math.ceil(round(s * p, 9)))
    return min(max(k, 0), p)


def check_penalty_vector(theta, allow_zero=False) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError("penalty must be one-dimensional")
    if not np.all(np.isfinite(theta)):
        raise ValueError("penalty has non-finite entries")
    if np.any(theta < 0):
        raise ValueError("penalty entries must be nonnegative")
    if np.any(np.diff(theta) > 0):
        raise ValueError("penalty must be nonincreasing")
    if not allow_zero and not np.any(theta > 0):
        raise ValueError("penalty needs at least one positive entry")
    return theta


def soft_threshold(v, theta):
    v = np.asarray(v, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ValueError("theta must be nonnegative")
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


@numba.njit(cache=True)
def _pava_clip(d):
    """Nonincreasing least-squares fit of d, clipped at 0."""
    n = d.shape[0]
    sums = np.empty(n)
    counts = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        top += 1
        sums[top] = d[i]
        counts[top] = 1
        while top > 0 and sums[top - 1] / counts[top - 1] <= sums[top] / counts[top]:
            sums[top - 1] = sums[top - 1] + sums[top]
            counts[top - 1] = counts[top - 1] + counts[top]
            top -= 1
    out = np.empty(n)
    pos = 0
    for b in range(top + 1):
        m = sums[b] / counts[b]
        if m < 0.0:
            m = 0.0
        for j in range(counts[b]):
            out[pos + j] = m
        pos += counts[b]
    return out


@numba.njit(cache=True)
def _prox_sorted(v, order, theta):
    n = v.shape[0]
    d = np.empty(n)
    for i in range(n):
        d[i] = abs(v[order[i]]) - theta[i]
    fit = _pava_clip(d)
    out = np.empty(n)
    for i in range(n):
        j = order[i]
        x = v[j]
        if x > 0:
            out[j] = fit[i]
        elif x < 0:
            out[j] = -fit[i] if fit[i] > 0.0 else 0.0
        else:
            out[j] = 0.0
    return out


@numba.njit(cache=True)
def _prox_sorted_two_level(v, order, lam1, lam2, k):
    n = v.shape[0]
    d = np.empty(n)
    for i in range(k):
        d[i] = abs(v[order[i]]) - lam1
    for i in range(k, n):
        d[i] = abs(v[order[i]]) - lam2
    fit = _pava_clip(d)
    out = np.empty(n)
    for i in range(n):
        j = order[i]
        x = v[j]
        if x > 0:
            out[j] = fit[i]
        elif x < 0:
            out[j] = -fit[i] if fit[i] > 0.0 else 0.0
        else:
            out[j] = 0.0
    return out


def _magnitude_order(v):
    # stable sort on -|v| breaks ties by original index
    return np.argsort(-np.abs(v), kind="stable")


def slope_prox(v, theta, *, check=True):
    """argmin_b 0.5*||v - b||^2 + sum_i theta_i |b|_(i)."""
    v = np.ascontiguousarray(v, dtype=float)
    theta = np.ascontiguousarray(theta, dtype=float)
    if v.ndim != 1 or v.shape != theta.shape:
        raise ValueError(f"length mismatch: v has shape {v.shape}, theta {theta.shape}")
    if check:
        check_penalty_vector(theta, allow_zero=True)
    if v.size == 0:
        return v.copy()
    return _prox_sorted(v, _magnitude_order(v), theta)


def two_level_prox(v, pen: TwoLevelPenalty):
    """Prox of a two-level penalty without building the length-p vector.

    Gives bitwise the same result as ``slope_prox(v, pen.materialize(len(v)))``:
    the projection sees the same differences in the same order.
    """
    v = np.ascontiguousarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("two_level_prox needs a vector of length >= 2")
    k = pen.n_top(v.size)
    return _prox_sorted_two_level(v, _magnitude_order(v), float(pen.lam1), float(pen.lam2), k)


def sorted_l1(b, theta):
    """sum_i theta_i |b|_(i) with |b| sorted decreasingly."""
    a = np.sort(np.abs(np.asarray(b, dtype=float)))[::-1]
    return float(np.dot(np.asarray(theta, dtype=float), a))


def shared_magnitudes(w):
    """Magnitudes taken by at least two entries of w, and how many are nonzero.

    Equality is exact bit equality, which is what the prox produces inside a
    pooled block.
    """
    a = np.abs(np.asarray(w, dtype=float)).ravel()
    vals, counts = np.unique(a, return_counts=True)
    shared = {float(x) for x in vals[counts > 1]}
    nonzero = sum(1 for x in shared if x != 0.0)
    return shared, nonzero
