"""Large-system analytics for two-level sorted-L1 penalties.

A normalized penalty puts level ``a1`` on a fraction ``s`` of coordinates and
``a2`` on the rest.  Applied to ``pi + Z`` in the limit, the prox pools the
coordinates around the level switch into one flat band at height ``h``; the
resulting coordinatewise map is soft thresholding at ``a1`` above the band,
``sign(x) * max(h, 0)`` inside it and soft thresholding at ``a2`` below it.
State evolution then fixes the noise level ``tau``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numba
import numpy as np
from scipy import optimize

from . import _kernels as K
from .prox import TwoLevelPenalty, soft_threshold


@dataclass(frozen=True)
class DiscretePrior:
    """Finite-atom distribution given by parallel tuples of values and probs."""

    values: Tuple[float, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if vals.ndim != 1 or vals.shape != probs.shape or vals.size == 0:
            raise ValueError("values and probs must be nonempty and of equal length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("atom values must be finite")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "probs", tuple(float(p) for p in probs))

    @classmethod
    def from_atoms(cls, atoms: Sequence[Tuple[float, float]]) -> "DiscretePrior":
        vals, probs = zip(*atoms)
        return cls(tuple(vals), tuple(probs))

    @classmethod
    def constant_or_nothing(cls, T: float, eps: float) -> "DiscretePrior":
        if not 0.0 < eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")
        if eps == 1.0:
            return cls((float(T),), (1.0,))
        return cls((0.0, float(T)), (1.0 - eps, eps))

    @property
    def vals(self) -> np.ndarray:
        return np.array(self.values)

    @property
    def probs_array(self) -> np.ndarray:
        return np.array(self.probs)

    @property
    def eps(self) -> float:
        return float(sum(p for v, p in zip(self.values, self.probs) if v != 0.0))

    def scaled(self, c: float) -> "DiscretePrior":
        return DiscretePrior(tuple(v * c for v in self.values), self.probs)

    def nonzero(self) -> "DiscretePrior":
        """Conditional law given a nonzero value."""
        e = self.eps
        if e <= 0:
            raise ValueError("prior has no nonzero atoms")
        pairs = [(v, p / e) for v, p in zip(self.values, self.probs) if v != 0.0 and p > 0]
        vals, probs = zip(*pairs)
        probs = np.array(probs)
        return DiscretePrior(tuple(vals), tuple(probs / probs.sum()))

    def second_moment(self) -> float:
        return float(np.dot(self.probs_array, self.vals ** 2))


@dataclass(frozen=True)
class NormalizedTwoLevel:
    a1: float
    a2: float
    s: float

    def __post_init__(self):
        if not (self.a1 >= self.a2 >= 0.0):
            raise ValueError("need a1 >= a2 >= 0")
        if not self.a1 > 0.0:
            raise ValueError("need a1 > 0")
        if not 0.0 < self.s < 1.0:
            raise ValueError("s must lie strictly inside (0, 1)")

    @property
    def is_one_level(self) -> bool:
        return self.a1 == self.a2

    @classmethod
    def lasso(cls, alpha: float) -> "NormalizedTwoLevel":
        return cls(alpha, alpha, 0.5)


@dataclass(frozen=True)
class ScalarizedSolution:
    tau: float
    h: float
    q1: float
    q2: float
    zero_threshold: float
    feasible: bool = True
    iterations: int = 0


def _arrays(prior: DiscretePrior):
    return np.asarray(prior.values, dtype=float), np.asarray(prior.probs, dtype=float)


def abs_mixture_cdf(prior: DiscretePrior, x):
    """S(x) = P(|pi + Z| < x) for the discrete prior pi."""
    vals, probs = _arrays(prior)
    x = np.asarray(x, dtype=float)
    return _mix_cdf_vec(vals, probs, x.ravel()).reshape(x.shape)


@numba.njit(cache=True)
def _mix_cdf_vec(vals, probs, xs):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = K.mix_cdf(vals, probs, xs[i])
    return out


def shared_height(prior: DiscretePrior, pen: NormalizedTwoLevel):
    """Shared height h of the flat band and the quantiles q1 = S(h+a1), q2 = S(h+a2)."""
    if pen.is_one_level:
        raise ValueError("a1 == a2: one-level penalty has no shared height")
    vals, probs = _arrays(prior)
    h = K.solve_h(vals, probs, pen.a1, pen.a2, pen.s)
    q1 = K.mix_cdf(vals, probs, h + pen.a1)
    q2 = K.mix_cdf(vals, probs, h + pen.a2)
    return float(h), float(q1), float(q2)


def height_residual(prior: DiscretePrior, pen: NormalizedTwoLevel, h: float) -> float:
    """Left side minus right side of the height equation at h."""
    vals, probs = _arrays(prior)
    return K.mix_int(vals, probs, h + pen.a2, h + pen.a1) - (1.0 - pen.s) * (pen.a1 - pen.a2)


def limiting_scalar(x, pen: NormalizedTwoLevel, h: float):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if pen.is_one_level:
        return soft_threshold(x, pen.a1)
    hp = max(h, 0.0)
    # the clamps are exact on each branch's region and keep rounding from
    # breaking monotonicity at the band edges
    top = np.sign(x) * np.maximum(ax - pen.a1, hp)
    mid = np.sign(x) * hp
    low = np.sign(x) * np.minimum(np.maximum(ax - pen.a2, 0.0), hp)
    return np.where(ax > pen.a1 + h, top, np.where(ax > pen.a2 + h, mid, low))


def effective_penalty(x, pen: NormalizedTwoLevel, h: float, q1: float, q2: float, prior: DiscretePrior):
    """Adaptive threshold A(x) with limiting_scalar(x) == soft_threshold(x, A(x))."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    Sx = abs_mixture_cdf(prior, ax)
    return np.where(Sx > q1, pen.a1, np.where(Sx < q2, pen.a2, ax - h))


def zero_threshold(pen: NormalizedTwoLevel, h: float) -> float:
    """Smallest alpha with eta(x) != 0 exactly when |x| > alpha."""
    if pen.is_one_level:
        return pen.a1
    return pen.a2 if h > 0 else pen.a1


@numba.njit(cache=True)
def _risk_vec(ts, a1, a2, h):
    out = np.empty(ts.shape[0])
    for i in range(ts.shape[0]):
        out[i] = K.risk_e(ts[i], a1, a2, h)
    return out


def risk_E(t, pen: NormalizedTwoLevel, h: float):
    """E[(eta(t + Z) - t)^2] in closed form."""
    t = np.asarray(t, dtype=float)
    out = _risk_vec(t.ravel(), float(pen.a1), float(pen.a2), float(h)).reshape(t.shape)
    return out if out.ndim else float(out)


def soft_threshold_risk(t, alpha):
    """E[(soft(t + Z; alpha) - t)^2]; the one-level special case."""
    return risk_E(t, NormalizedTwoLevel.lasso(alpha), 0.0)


def F_functional(prior: DiscretePrior, pen: NormalizedTwoLevel) -> float:
    """E[(eta(pi + Z) - pi)^2] for a normalized prior pi."""
    vals, probs = _arrays(prior)
    if pen.is_one_level:
        h = 0.0
    else:
        h = K.solve_h(vals, probs, pen.a1, pen.a2, pen.s)
    return float(np.dot(probs, _risk_vec(vals, pen.a1, pen.a2, h)))


def derivative_mean(prior: DiscretePrior, pen: NormalizedTwoLevel, h: float) -> float:
    """E[eta'(pi + Z)], the probability of landing on a soft-thresholding branch."""
    vals, probs = _arrays(prior)
    return float(K.deriv_mean(vals, probs, pen.a1, pen.a2, 0.0 if pen.is_one_level else h))


def _solution_at(prior: DiscretePrior, pen: NormalizedTwoLevel, tau: float, feasible: bool, it: int):
    scaled = prior.scaled(1.0 / tau)
    if pen.is_one_level:
        h = 0.0
        q = float(abs_mixture_cdf(scaled, pen.a1))
        return ScalarizedSolution(tau, h, q, q, pen.a1, feasible, it)
    h, q1, q2 = shared_height(scaled, pen)
    return ScalarizedSolution(tau, h, q1, q2, zero_threshold(pen, h), feasible, it)


def state_evolution_tau(prior: DiscretePrior, pen: NormalizedTwoLevel, delta: float, sigma: float,
                        omega: float = 0.5, tol: float = 1e-10, max_iter: int = 2000) -> ScalarizedSolution:
    """Fixed point of tau^2 = sigma^2 + tau^2 F(prior/tau) / delta.

    Damped iteration from tau^2 = sigma^2 + E[prior^2]/delta.  Blow-up of
    tau^2 (the risk stays above delta) is reported as ``feasible=False``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not delta > 0:
        raise ValueError("delta must be positive")

    def rhs(t2):
        return sigma ** 2 + t2 * F_functional(prior.scaled(1.0 / math.sqrt(t2)), pen) / delta

    t2 = sigma ** 2 + prior.second_moment() / delta
    start = t2
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        nxt = (1.0 - omega) * t2 + omega * rhs(t2)
        if not math.isfinite(nxt) or nxt > 1e6 * start:
            return ScalarizedSolution(math.inf, math.nan, math.nan, math.nan, math.nan, False, it)
        if abs(nxt - t2) <= tol * t2:
            t2 = nxt
            converged = True
            break
        t2 = nxt
    if not converged:
        return ScalarizedSolution(math.sqrt(t2), math.nan, math.nan, math.nan, math.nan, False, it)
    # tighten with a bracketed root of the residual around the iterate
    resid = lambda v: rhs(v) - v
    r0 = resid(t2)
    if r0 != 0.0:
        step = max(1e-9 * t2, abs(r0))
        lo, hi = (t2, t2 + step) if r0 > 0 else (t2 - step, t2)
        for _ in range(60):
            if resid(lo) > 0 > resid(hi):
                t2 = optimize.brentq(resid, lo, hi, xtol=1e-15 * t2, rtol=1e-15)
                break
            step *= 2.0
            lo, hi = (lo, hi + step) if r0 > 0 else (max(lo - step, sigma ** 2), hi)
    return _solution_at(prior, pen, math.sqrt(t2), True, it)


def se_residual(prior: DiscretePrior, pen: NormalizedTwoLevel, delta: float, sigma: float, tau: float) -> float:
    """tau^2 - sigma^2 - tau^2 F(prior/tau) / delta."""
    F = F_functional(prior.scaled(1.0 / tau), pen)
    return tau ** 2 - sigma ** 2 - tau ** 2 * F / delta


def calibration_factor(pen: NormalizedTwoLevel, sol: ScalarizedSolution, prior: DiscretePrior, delta: float) -> float:
    D = derivative_mean(prior.scaled(1.0 / sol.tau), pen, sol.h)
    return sol.tau * (1.0 - D / delta)


def calibrate(pen: NormalizedTwoLevel, sol: ScalarizedSolution, prior: DiscretePrior, delta: float) -> TwoLevelPenalty:
    """Original-scale penalty levels for a normalized penalty at its fixed point."""
    if not sol.feasible:
        raise ValueError("cannot calibrate an infeasible state-evolution solution")
    c = calibration_factor(pen, sol, prior, delta)
    if not c > 0:
        raise ValueError("calibration factor is not positive; penalty is below the feasible range")
    return TwoLevelPenalty(pen.a1 * c, pen.a2 * c, pen.s)


def normalize_at_tau(lam: TwoLevelPenalty, tau: float, prior: DiscretePrior, delta: float) -> NormalizedTwoLevel:
    """Invert the calibration map at a fixed tau.

    The normalized penalty is a multiple c * lam; c solves
    c * tau * (1 - E[eta'] / delta) = 1, with the derivative mean depending on c
    through the shared height.
    """
    scaled = prior.scaled(1.0 / tau)

    def resid(logc):
        c = math.exp(logc)
        pen = NormalizedTwoLevel(lam.lam1 * c, lam.lam2 * c, lam.s)
        h = 0.0 if pen.is_one_level else shared_height(scaled, pen)[0]
        D = derivative_mean(scaled, pen, h)
        return c * tau * (1.0 - D / delta) - 1.0

    lo, hi = -5.0, 5.0
    while resid(hi) < 0:
        hi += 5.0
        if hi > 100:
            raise ValueError("no normalization found")
    while resid(lo) > 0:
        lo -= 5.0
        if lo < -100:
            raise ValueError("no normalization found")
    logc = optimize.brentq(resid, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    c = math.exp(logc)
    return NormalizedTwoLevel(lam.lam1 * c, lam.lam2 * c, lam.s)


def predicted_mse(sol: ScalarizedSolution, delta: float, sigma: float) -> float:
    """Limit of ||beta_hat - beta||^2 / p, equal to delta * (tau^2 - sigma^2)."""
    return delta * (sol.tau ** 2 - sigma ** 2)
