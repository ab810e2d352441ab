"""Asymptotic TPP/FDP trade-off searches.

The zero-threshold alpha decides the false discovery limit through

    FDP = 2(1-eps)Phi(-alpha) / (2(1-eps)Phi(-alpha) + eps*u)

at power u, so every search below maximizes the lower penalty level ``a2``
subject to the state-evolution constraint, with the shared height kept
positive so that ``a2`` really is the zero-threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from . import _kernels as K
from .asymptotics import (
    DiscretePrior,
    NormalizedTwoLevel,
    F_functional,
    shared_height,
    state_evolution_tau,
)
from .gauss import Interval, normal_cdf, normal_pdf, normal_quantile, normal_sf


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class SearchGrid:
    """Grids for the penalty and prior search.

    ``a1`` runs over ``a2 + a1_offsets`` plus ``a2 + a1_sentinel``; the atom
    grid is ``t_points`` equally spaced values on ``[0, a2 + t_span]``, to
    which the atom matching the target power exactly and an atom at +inf are
    always added.  With ``polish`` the best grid points are refined by a
    local simplex search before an ``a2`` is declared infeasible.
    """

    a1_offsets: Tuple[float, ...] = tuple(np.geomspace(1e-3, 10.0, 12))
    s_grid: Tuple[float, ...] = tuple(np.linspace(0.01, 0.99, 15))
    t_points: int = 16
    t_span: float = 6.0
    a1_sentinel: float = 12.0
    bisect_tol: float = 1e-4
    a2_bracket: Optional[Interval] = None
    polish: bool = True

    def __post_init__(self):
        if len(self.a1_offsets) == 0 or len(self.s_grid) == 0 or self.t_points < 2:
            raise ValueError("grids must be nonempty")
        if any(np.diff(self.a1_offsets) <= 0) or any(np.diff(self.s_grid) <= 0):
            raise ValueError("grids must be sorted")
        if min(self.a1_offsets) <= 0 or not all(0 < s < 1 for s in self.s_grid):
            raise ValueError("a1 offsets must be positive and s inside (0, 1)")
        if not self.bisect_tol > 0:
            raise ValueError("bisect_tol must be positive")

    @classmethod
    def fine(cls) -> "SearchGrid":
        """Dense grids: 40 offsets, 60 values of s, 50 atoms."""
        return cls(a1_offsets=tuple(np.geomspace(1e-3, 10.0, 40)),
                   s_grid=tuple(np.linspace(0.005, 0.995, 60)), t_points=50)

    @classmethod
    def coarse(cls) -> "SearchGrid":
        return cls(a1_offsets=tuple(np.geomspace(1e-2, 10.0, 8)),
                   s_grid=tuple(np.linspace(0.02, 0.98, 9)), t_points=10)

    def a1_values(self, a2: float) -> np.ndarray:
        return np.array([a2 + o for o in self.a1_offsets] + [a2 + self.a1_sentinel])


@dataclass
class TradeoffPoint:
    u: float
    min_fdp: float
    alpha_star: float
    argmax: dict = field(default_factory=dict)
    feasible: bool = True
    boundary: bool = False
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# closed-form pieces


def tpp_inf(prior_nonzero: DiscretePrior, alpha: float) -> float:
    """P(|pi* + Z| > alpha) for the law of the nonzero signal."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return float(sum(p * K.tpp_power(v, alpha)
                     for v, p in zip(prior_nonzero.values, prior_nonzero.probs)))


def fdp_inf(alpha: float, u: float, eps: float) -> float:
    if not 0 < u <= 1:
        raise ValueError("u must lie in (0, 1]")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    num = 2.0 * (1.0 - eps) * float(normal_sf(alpha))
    return num / (num + eps * u)


def rho(t1: float, t2: float, alpha2: float, u: float) -> Optional[float]:
    """Weight on t1 so that the two nonzero atoms reach power u, or None."""
    if not 0 <= t1 <= t2:
        raise ValueError("need 0 <= t1 <= t2")
    r = K.rho_value(t1, t2, alpha2, u)
    if math.isnan(r) or r < -1e-12 or r > 1 + 1e-12:
        return None
    return min(max(r, 0.0), 1.0)


def three_point_prior(t1: float, t2: float, r: float, eps: float) -> DiscretePrior:
    return DiscretePrior((0.0, t1, t2), (1.0 - eps, eps * r, eps * (1.0 - r)))


def f_pi_min(t1, t2, u, eps, pen: NormalizedTwoLevel) -> Optional[float]:
    """F at the three-point prior that meets power u; None if no weight works."""
    r = rho(t1, t2, pen.a2, u)
    if r is None:
        return None
    F, _ = K.f_three_point(float(t1), float(t2), r, eps, pen.a1, pen.a2, pen.s)
    return None if math.isnan(F) else float(F)


def atom_for_power(alpha: float, u: float) -> Optional[float]:
    """t >= 0 with P(|t + Z| > alpha) = u; inf for u = 1, None below 2*Phi(-alpha)."""
    if u >= 1.0:
        return math.inf
    floor = 2.0 * float(normal_sf(alpha))
    if u < floor - 1e-15:
        return None
    if u <= floor:
        return 0.0
    g = lambda t: K.tpp_power(t, alpha) - u
    hi = alpha + 10.0
    while g(hi) < 0:
        hi *= 2.0
    return optimize.brentq(g, 0.0, hi, xtol=1e-14, rtol=1e-15)


# ---------------------------------------------------------------------------
# LASSO reference curves


def _dt_delta(t):
    return 2 * normal_pdf(t) / (2 * normal_pdf(t) + t * (2 * normal_cdf(t) - 1))


def _dt_eps(t):
    return (2 * normal_pdf(t) - 2 * t * normal_sf(t)) / (2 * normal_pdf(t) + t * (2 * normal_cdf(t) - 1))


def dt_eps_star(delta: float) -> float:
    """Sparsity level on the Donoho-Tanner curve at undersampling delta."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    t = optimize.brentq(lambda x: float(_dt_delta(x)) - delta, 1e-12, 40.0, xtol=1e-14)
    return float(_dt_eps(t))


def dt_limit(delta: float, eps: float) -> float:
    """Largest power reachable by the LASSO at (delta, eps)."""
    if delta >= 1:
        return 1.0
    es = dt_eps_star(delta)
    if eps <= es:
        return 1.0
    return 1.0 - (1.0 - delta) * (eps - es) / (eps * (1.0 - es))


def _lasso_equation(x, u, eps, delta):
    phi, sf = normal_pdf(x), normal_sf(x)
    lhs_num = 2 * (1 - eps) * ((1 + x * x) * sf - x * phi) + eps * (1 + x * x) - delta
    lhs_den = eps * ((1 + x * x) * (1 - 2 * sf) + 2 * x * phi)
    return lhs_num / lhs_den - (1 - u) / (1 - 2 * sf)


def lasso_alpha(u: float, eps: float, delta: float) -> float:
    """Largest LASSO zero-threshold reaching power u (largest positive root)."""
    if not 0 < u < 1:
        raise ValueError("u must lie in (0, 1)")
    if u >= dt_limit(delta, eps):
        raise ValueError(f"u={u} is at or above the LASSO power limit {dt_limit(delta, eps):.6f}")
    top = max(50.0, 2.0 * math.sqrt(delta / (eps * u)))
    xs = np.linspace(top, 1e-6, 20001)
    vals = np.array([_lasso_equation(x, u, eps, delta) for x in xs])
    for i in range(len(xs) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0:
            return float(xs[i])
        if np.sign(a) != np.sign(b) and np.isfinite(a) and np.isfinite(b):
            return optimize.brentq(_lasso_equation, xs[i + 1], xs[i], args=(u, eps, delta),
                                   xtol=1e-14, rtol=1e-15)
    raise ValueError("no positive root found")


def q_lasso(u: float, eps: float, delta: float) -> float:
    return fdp_inf(lasso_alpha(u, eps, delta), u, eps)


def lasso_point(u: float, eps: float, delta: float) -> TradeoffPoint:
    a = lasso_alpha(u, eps, delta)
    r = (1.0 - u) / (1.0 - 2.0 * float(normal_sf(a)))
    return TradeoffPoint(u, fdp_inf(a, u, eps), a,
                         dict(a1=a, a2=a, s=0.5, t1=0.0, t2=math.inf, rho=r, kind="lasso"))


# ---------------------------------------------------------------------------
# search over all priors

FAR_ATOM = 40.0


def _pairs(a2: float, u: float, grid: SearchGrid):
    """(t1, t2, rho) arrays with t1 <= t_u <= t2; None if u is out of reach at a2."""
    tu = atom_for_power(a2, u)
    if tu is None:
        return None
    base = np.linspace(0.0, a2 + grid.t_span, grid.t_points)
    # A far atom stands in for one at infinity: its power is exactly 1 in
    # double precision, and unlike an infinite atom it keeps the shared
    # height finite when it carries more mass than s.
    far = a2 + FAR_ATOM
    lower = sorted(set([t for t in base if t < tu] + ([tu] if math.isfinite(tu) else [])))
    upper = sorted(set([t for t in base if t > tu] + ([tu] if math.isfinite(tu) else []) + [far]))
    t1s, t2s, rhos = [], [], []
    for t1 in lower:
        for t2 in upper:
            if t1 == t2:
                r = 1.0
            else:
                r = K.rho_value(t1, t2, a2, u)
                if math.isnan(r) or r < -1e-12 or r > 1 + 1e-12:
                    continue
                r = min(max(r, 0.0), 1.0)
            t1s.append(t1)
            t2s.append(t2)
            rhos.append(r)
    if not t1s:
        return None
    return np.array(t1s), np.array(t2s), np.array(rhos), tu


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x)) if x > -700 else 0.0


def _polish(a2, u, eps, start, tu, maxiter=400):
    """Local simplex refinement of (a1, s, t1, t2) from a grid point."""
    a1, s, t1, t2 = start
    free_t1 = 0.0 < tu and math.isfinite(tu)
    free_t2 = math.isfinite(t2) and math.isfinite(tu)

    def unpack(x):
        a1_ = a2 + math.exp(x[0])
        s_ = _sigmoid(x[1])
        k = 2
        t1_ = t1
        if free_t1:
            t1_ = tu * _sigmoid(x[k])
            k += 1
        t2_ = t2
        if free_t2:
            t2_ = tu + math.exp(x[k]) if math.isfinite(tu) else math.inf
        return a1_, s_, t1_, t2_

    def obj(x):
        a1_, s_, t1_, t2_ = unpack(x)
        if not 0.0 < s_ < 1.0:
            return 1e6
        r = 1.0 if t1_ == t2_ else K.rho_value(t1_, t2_, a2, u)
        if math.isnan(r) or r < 0.0 or r > 1.0:
            return 1e6
        F, h = K.f_three_point(t1_, t2_, r, eps, a1_, a2, s_)
        if math.isnan(F) or not h > 0.0:
            return 1e6
        return F

    def logit(p):
        p = min(max(p, 1e-9), 1 - 1e-9)
        return math.log(p / (1 - p))

    x0 = [math.log(max(a1 - a2, 1e-9)), logit(s)]
    if free_t1:
        x0.append(logit(t1 / tu))
    if free_t2:
        x0.append(math.log(max(t2 - tu, 1e-9)))
    res = optimize.minimize(obj, np.array(x0), method="Nelder-Mead",
                            options=dict(maxiter=maxiter, xatol=1e-7, fatol=1e-10))
    a1_, s_, t1_, t2_ = unpack(res.x)
    r = 1.0 if t1_ == t2_ else K.rho_value(t1_, t2_, a2, u)
    return float(res.fun), (a1_, s_, t1_, t2_, r)


def _min_f_all_priors(a2, u, eps, delta, grid: SearchGrid, stop_below=True):
    """Smallest F found at level a2 and its witness (a1, s, t1, t2, rho, kind)."""
    pairs = _pairs(a2, u, grid)
    if pairs is None:
        return math.inf, None
    t1s, t2s, rhos, tu = pairs
    # one-level candidate first: a1 == a2
    Fl, kl = K.scan_lasso(a2, eps, t1s, t2s, rhos)
    best, wit = math.inf, None
    if kl >= 0:
        best = Fl
        wit = (a2, 0.5, t1s[kl], t2s[kl], rhos[kl], "lasso")
        if stop_below and best <= delta:
            return best, wit
    a1s = grid.a1_values(a2)
    s_arr = np.asarray(grid.s_grid, dtype=float)
    F, i, j, k, _ = K.scan_three_point(a2, eps, delta, a1s, s_arr, t1s, t2s, rhos, stop_below)
    if k >= 0 and F < best:
        best = F
        wit = (a1s[i], s_arr[j], t1s[k], t2s[k], rhos[k], "two-level")
    if (stop_below and best <= delta) or not grid.polish or k < 0:
        return best, wit
    # refine from the best grid point
    Fp, (a1p, sp, t1p, t2p, rp) = _polish(a2, u, eps, (a1s[i], s_arr[j], t1s[k], t2s[k]), tu)
    if Fp < best:
        best = Fp
        wit = (a1p, sp, t1p, t2p, rp, "two-level")
    return best, wit


def _witness_dict(a2, wit):
    a1, s, t1, t2, r, kind = wit
    return dict(a1=float(a1), a2=float(a2), s=float(s), t1=float(t1), t2=float(t2),
                rho=float(r), kind=kind)


def max_zero_threshold_all_priors(u: float, eps: float, delta: float,
                                  grid: SearchGrid = None) -> TradeoffPoint:
    """Largest zero-threshold at power u over all priors and two-level penalties.

    Bisection on a2.  The lower end is the LASSO threshold when the LASSO can
    reach power u (it is feasible through the one-level candidate); above the
    LASSO limit a feasible lower end is found by scanning upwards from the
    smallest threshold compatible with power u.
    """
    grid = grid or SearchGrid()
    if not 0 < u <= 1:
        raise ValueError("u must lie in (0, 1]")

    def feasible(a2):
        F, wit = _min_f_all_priors(a2, u, eps, delta, grid)
        return F <= delta, F, wit

    lo_wit = None
    if grid.a2_bracket is not None:
        lo, hi = grid.a2_bracket.lo, grid.a2_bracket.hi
        ok_lo, F_lo, lo_wit = feasible(lo)
        ok_hi, _, _ = feasible(hi)
        if ok_lo == ok_hi:
            raise ValueError("bracket ends are both feasible or both infeasible; widen the bracket")
    else:
        lo = None
        if u < 1 and u < dt_limit(delta, eps):
            lp = lasso_point(u, eps, delta)
            lo = lp.alpha_star
            a = lp.argmax
            lo_wit = (a["a1"], a["s"], a["t1"], a["t2"], a["rho"], "lasso")
            F_lo = delta
        else:
            start = 0.0 if u >= 1 else float(normal_quantile(1 - u / 2))
            for k in range(1, 121):
                cand = start + 0.05 * k
                ok, F_lo, wit = feasible(cand)
                if ok:
                    lo, lo_wit = cand, wit
                    break
            if lo is None:
                return TradeoffPoint(u, math.nan, math.nan, {}, feasible=False)
        hi = lo + 6.0
        while feasible(hi)[0]:
            lo, hi = hi, hi + 6.0
    while hi - lo > grid.bisect_tol:
        mid = 0.5 * (lo + hi)
        ok, F, wit = feasible(mid)
        if ok:
            lo, lo_wit, F_lo = mid, wit, F
        else:
            hi = mid
    return TradeoffPoint(u, fdp_inf(lo, u, eps), lo, _witness_dict(lo, lo_wit),
                         extra=dict(F=float(F_lo)))


def q_two_level(u: float, eps: float, delta: float, grid: SearchGrid = None) -> float:
    pt = max_zero_threshold_all_priors(u, eps, delta, grid)
    if not pt.feasible:
        raise ValueError(f"no feasible two-level penalty at u={u}")
    return pt.min_fdp


def witness_f(pt: TradeoffPoint, eps: float) -> float:
    """Recompute F at a returned witness."""
    a = pt.argmax
    F, _ = K.f_three_point(a["t1"], a["t2"], a["rho"], eps, a["a1"], a["a2"], a["s"])
    return float(F)


def witness_tpp(pt: TradeoffPoint) -> float:
    """Power of the witness prior at its zero-threshold."""
    a = pt.argmax
    return a["rho"] * K.tpp_power(a["t1"], a["a2"]) + (1 - a["rho"]) * K.tpp_power(a["t2"], a["a2"])


# ---------------------------------------------------------------------------
# fixed prior


def tau_for_power(prior_nonzero: DiscretePrior, alpha: float, u: float, sigma: float) -> Optional[float]:
    """tau >= sigma with P(|pi*/tau + Z| > alpha) = u, or None."""
    g = lambda lt: tpp_inf(prior_nonzero.scaled(math.exp(-lt)), alpha) - u
    lo = math.log(sigma)
    if g(lo) < 0:
        return None
    hi = lo + 1.0
    while g(hi) > 0:
        hi += 2.0
        if hi - lo > 60:
            return None
    if g(lo) == 0:
        return sigma
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-15))


def _alpha_range_for_power(prior_nonzero, u, sigma, span=math.inf):
    """Thresholds at which power u is reachable with tau >= sigma.

    The upper end is capped at ``a_min + span``.
    """
    a_min = 0.0 if u >= 1 else float(normal_quantile(1 - u / 2))
    g = lambda a: tpp_inf(prior_nonzero.scaled(1.0 / sigma), a) - u
    if g(a_min) <= 0:
        return None
    hi = a_min + 1.0
    while g(hi) > 0:
        if hi - a_min >= span:
            return a_min, a_min + span
        hi += 1.0
    return a_min, min(optimize.brentq(g, a_min, hi, xtol=1e-13), a_min + span)


def _crossing(vals, probs, a1, a2, s_a, s_b, target):
    """s between s_a and s_b where F equals target with a positive height, or None.

    The height must be positive at s_a.  When it is not positive at s_b the
    bracket is cut back to the point where the height reaches zero.
    """
    Fa, ha = K.f_value(vals, probs, a1, a2, s_a)
    Fb, hb = K.f_value(vals, probs, a1, a2, s_b)
    if not hb > 0 or math.isnan(Fb):
        hfun = lambda s: K.f_value(vals, probs, a1, a2, s)[1]
        if math.isnan(hb):
            return None
        s0 = optimize.brentq(hfun, s_a, s_b, xtol=1e-14)
        s_b = s_a + (s0 - s_a) * (1.0 - 1e-9)
        Fb, hb = K.f_value(vals, probs, a1, a2, s_b)
        if not hb > 0:
            return None
    if (Fa - target) * (Fb - target) > 0:
        return None
    fn = lambda s: K.f_value(vals, probs, a1, a2, s)[0] - target
    s_star = optimize.brentq(fn, min(s_a, s_b), max(s_a, s_b), xtol=1e-13)
    F, h = K.f_value(vals, probs, a1, a2, s_star)
    return (s_star, F) if h > 0 else None


def _fixed_prior_witness(prior, a2, u, delta, sigma, grid: SearchGrid, include_lasso=True):
    """Penalty with zero-threshold a2, power u and state evolution satisfied.

    Power u pins tau, so state evolution reduces to F(prior/tau) equal to
    delta * (1 - sigma^2/tau^2).  A witness is located where F - target
    changes sign between neighbouring s values while the height stays
    positive, then refined by a root search in s.  If the grid shows no
    crossing, F is minimized by a simplex search and a crossing is sought
    along s from the minimizer.
    """
    pstar = prior.nonzero()
    tau = tau_for_power(pstar, a2, u, sigma)
    if tau is None:
        return None
    target = delta * (1.0 - sigma ** 2 / tau ** 2)
    scaled = prior.scaled(1.0 / tau)
    vals = np.array(scaled.values)
    probs = np.array(scaled.probs)
    if include_lasso:
        Fl = F_functional(scaled, NormalizedTwoLevel.lasso(a2))
        if abs(Fl - target) <= 1e-12:
            return dict(a1=a2, a2=a2, s=0.5, tau=tau, kind="lasso", F=Fl, target=target)
    a1s = grid.a1_values(a2)
    s_arr = np.asarray(grid.s_grid, dtype=float)
    F, H = K.f_grid(vals, probs, a2, a1s, s_arr)
    D = F - target

    def found(a1, hit):
        return dict(a1=a1, a2=a2, s=hit[0], tau=tau, kind="two-level", F=hit[1], target=target)

    for i, a1 in enumerate(a1s):
        for j in range(len(s_arr)):
            if not H[i, j] > 0:
                continue
            if D[i, j] == 0:
                return found(a1, (s_arr[j], F[i, j]))
            if j + 1 < len(s_arr) and (not H[i, j + 1] > 0 or np.sign(D[i, j]) != np.sign(D[i, j + 1])):
                hit = _crossing(vals, probs, a1, a2, s_arr[j], s_arr[j + 1], target)
                if hit is not None:
                    return found(a1, hit)
    if not grid.polish:
        return None
    ok = (H > 0) & np.isfinite(F)
    if not ok.any():
        return None
    i, j = np.unravel_index(np.argmin(np.where(ok, F, np.inf)), F.shape)
    a1p, sp, Fp = _polish_fixed(vals, probs, a2, a1s[i], s_arr[j])
    if not Fp < target:
        return None
    for direction in (s_arr[s_arr > sp], s_arr[s_arr < sp][::-1]):
        prev = sp
        for s_next in direction:
            Fv, hv = K.f_value(vals, probs, a1p, a2, s_next)
            if not hv > 0 or Fv >= target:
                hit = _crossing(vals, probs, a1p, a2, prev, s_next, target)
                if hit is not None:
                    return found(a1p, hit)
                break
            prev = s_next
    return None


def _polish_fixed(vals, probs, a2, a1, s, maxiter=300):
    """Simplex minimization of F over (a1, s) for a fixed prior, positive height only."""

    def obj(x):
        a1_ = a2 + math.exp(x[0])
        s_ = _sigmoid(x[1])
        if not 0.0 < s_ < 1.0:
            return 1e6
        F, h = K.f_value(vals, probs, a1_, a2, s_)
        if math.isnan(F) or not h > 0.0:
            return 1e6
        return F

    s = min(max(s, 1e-9), 1 - 1e-9)
    x0 = np.array([math.log(max(a1 - a2, 1e-9)), math.log(s / (1 - s))])
    res = optimize.minimize(obj, x0, method="Nelder-Mead",
                            options=dict(maxiter=maxiter, xatol=1e-7, fatol=1e-12))
    return a2 + math.exp(res.x[0]), _sigmoid(res.x[1]), float(res.fun)


def fixed_prior_lasso_alpha(prior: DiscretePrior, u: float, delta: float, sigma: float,
                            a2_span: float = 8.0) -> Optional[float]:
    """Largest one-level threshold whose fixed point has power u, if any."""
    pstar = prior.nonzero()
    rng = _alpha_range_for_power(pstar, u, sigma, a2_span)
    if rng is None:
        return None
    a_min, a_max = rng

    def G(a):
        tau = tau_for_power(pstar, a, u, sigma)
        if tau is None:
            return math.nan
        return F_functional(prior.scaled(1.0 / tau), NormalizedTwoLevel.lasso(a)) - delta * (1 - sigma ** 2 / tau ** 2)

    xs = np.linspace(a_min, a_max, 202)[1:-1]
    vals = np.array([G(a) for a in xs])
    for i in range(len(xs) - 1, 0, -1):
        a, b = vals[i - 1], vals[i]
        if np.isfinite(a) and np.isfinite(b) and np.sign(a) != np.sign(b):
            return optimize.brentq(G, xs[i - 1], xs[i], xtol=1e-13)
    return None


def _largest_feasible(check, lo, hi, n_scan, tol, depth=3):
    """Largest x in [lo, hi] with check(x) truthy: coarse scan then bisection.

    When no scan point passes, the first scan cell is rescanned (``depth``
    times) since feasible sets often hug the lower end.
    """
    xs = np.linspace(lo, hi, n_scan)
    best, best_w = None, None
    for k in range(len(xs) - 1, -1, -1):
        w = check(xs[k])
        if w is not None:
            best, best_w = k, w
            break
    if best is None:
        if depth > 0 and xs[1] - xs[0] > tol:
            return _largest_feasible(check, xs[0], xs[1], n_scan, tol, depth - 1)
        return None, None
    a, wa = xs[best], best_w
    if best == len(xs) - 1:
        return a, wa
    b = xs[best + 1]
    while b - a > tol:
        m = 0.5 * (a + b)
        w = check(m)
        if w is not None:
            a, wa = m, w
        else:
            b = m
    return a, wa


def fixed_prior_max_zero_threshold(prior: DiscretePrior, u: float, delta: float, sigma: float,
                                   grid: SearchGrid = None, n_scan: int = 40,
                                   a2_span: float = 8.0) -> TradeoffPoint:
    """Largest zero-threshold at power u for a fixed prior (original scale).

    Each candidate witness is re-checked with the damped state-evolution
    iteration; its power at the resulting tau must match u to 1e-4.
    """
    grid = grid or SearchGrid()
    eps = prior.eps
    pstar = prior.nonzero()
    a_lasso = fixed_prior_lasso_alpha(prior, u, delta, sigma, a2_span)
    # the power range can be huge when sigma is small; the scan is capped
    # the same way as for the constant-or-nothing search
    rng = _alpha_range_for_power(pstar, u, sigma, a2_span)
    if rng is None:
        return TradeoffPoint(u, math.nan, math.nan, {}, feasible=False)
    lo = a_lasso if a_lasso is not None else rng[0]
    hi = rng[1]

    def check(a2):
        w = _fixed_prior_witness(prior, a2, u, delta, sigma, grid, include_lasso=False)
        if w is None:
            return None
        pen = NormalizedTwoLevel(w["a1"], w["a2"], w["s"])
        sol = state_evolution_tau(prior, pen, delta, sigma)
        if not sol.feasible or not sol.h > 0:
            return None
        if abs(tpp_inf(pstar.scaled(1.0 / sol.tau), a2) - u) > 1e-4:
            return None
        w["tau_se"] = sol.tau
        return w

    a2, w = _largest_feasible(check, lo, hi, n_scan, grid.bisect_tol)
    extra = {}
    if a_lasso is not None:
        tau_l = tau_for_power(pstar, a_lasso, u, sigma)
        extra.update(lasso_alpha=a_lasso, lasso_tau=tau_l,
                     lasso_mse=delta * (tau_l ** 2 - sigma ** 2),
                     lasso_fdp=fdp_inf(a_lasso, u, eps))
    if a2 is None or (a_lasso is not None and a2 < a_lasso):
        if a_lasso is None:
            return TradeoffPoint(u, math.nan, math.nan, {}, feasible=False, extra=extra)
        tau_l = extra["lasso_tau"]
        return TradeoffPoint(u, fdp_inf(a_lasso, u, eps), a_lasso,
                             dict(a1=a_lasso, a2=a_lasso, s=0.5, kind="lasso", tau=tau_l),
                             boundary=True, extra=extra)
    tau = w["tau_se"]
    extra.update(mse=delta * (tau ** 2 - sigma ** 2), tau=tau)
    return TradeoffPoint(u, fdp_inf(a2, u, eps), a2,
                         dict(a1=float(w["a1"]), a2=float(a2), s=float(w["s"]), kind=w["kind"], tau=tau),
                         extra=extra)


# ---------------------------------------------------------------------------
# constant-or-nothing prior


def _constant_prior_check(a2, u, eps, delta, grid, one_level):
    t = atom_for_power(a2, u)
    if t is None or not math.isfinite(t):
        return None
    t1s, t2s, rhos = np.array([t]), np.array([t]), np.array([1.0])
    if one_level:
        F, k = K.scan_lasso(a2, eps, t1s, t2s, rhos)
        return dict(a1=a2, a2=a2, s=0.5, t=t, F=F, kind="lasso") if F <= delta else None
    a1s = grid.a1_values(a2)
    s_arr = np.asarray(grid.s_grid, dtype=float)
    F, i, j, k, h = K.scan_three_point(a2, eps, delta, a1s, s_arr, t1s, t2s, rhos, True)
    if F <= delta:
        return dict(a1=a1s[i], a2=a2, s=s_arr[j], t=t, F=F, h=h, kind="two-level")
    Fl, _ = K.scan_lasso(a2, eps, t1s, t2s, rhos)
    if Fl <= delta:
        return dict(a1=a2, a2=a2, s=0.5, t=t, F=Fl, kind="lasso")
    if grid.polish and k >= 0:
        vals = np.array([0.0, t])
        probs = np.array([1.0 - eps, eps])
        a1p, sp, Fp = _polish_fixed(vals, probs, a2, a1s[i], s_arr[j])
        if Fp <= delta:
            h = K.f_value(vals, probs, a1p, a2, sp)[1]
            return dict(a1=a1p, a2=a2, s=sp, t=t, F=Fp, h=h, kind="two-level")
    return None


def constant_prior_max_zero_threshold(T: float, eps: float, delta: float, u: float,
                                      grid: SearchGrid = None, one_level: bool = False,
                                      n_scan: int = 40, a2_max: float = None) -> TradeoffPoint:
    """Largest zero-threshold at power u when the signal is T with prob eps.

    Power u fixes the normalized atom t, and state evolution becomes
    (1-eps) E(0) + eps E(t) <= delta.  Only sigma/T would enter through
    tau = T/t, so the check itself does not involve T; the returned tau is
    T / t.  ``one_level`` restricts the search to a1 == a2.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    grid = grid or SearchGrid()
    a_min = 0.0 if u >= 1 else float(normal_quantile(1 - u / 2))
    hi = a2_max if a2_max is not None else a_min + 8.0
    check = lambda a: _constant_prior_check(a, u, eps, delta, grid, one_level)
    a2, w = _largest_feasible(check, a_min, hi, n_scan, grid.bisect_tol)
    if a2 is None:
        return TradeoffPoint(u, math.nan, math.nan, {}, feasible=False)
    tau = T / w["t"] if w["t"] > 0 else math.inf
    w = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in w.items()}
    w["a2"] = float(a2)
    return TradeoffPoint(u, fdp_inf(a2, u, eps), float(a2), w, extra=dict(tau=tau, F=w["F"]))


# ---------------------------------------------------------------------------
# analytic general-SLOPE penalty


def general_slope_analytic_penalty(t1: float, t2: float, rho_: float, eps: float, alpha: float,
                                   n_check: int = 10_000):
    """Effective penalty -H'(x)/H(x) above alpha and alpha below, plus a monotonicity flag.

    The flag reports whether -H'/H is nondecreasing on the grid points of
    [0, max(t2, alpha) + 8] that lie above alpha.

    H is the symmetrized three-point mixture density, so -H'/H equals x minus
    the posterior mean of the atom given x; it is evaluated through
    normalized weights to avoid underflow.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    atoms = np.array([0.0, t1, -t1, t2, -t2])
    w = np.array([4 * (1 - eps), 2 * eps * rho_, 2 * eps * rho_, 2 * eps * (1 - rho_), 2 * eps * (1 - rho_)])
    keep = w > 0
    atoms, logw = atoms[keep], np.log(w[keep])

    def post_mean(x):
        x = np.asarray(x, dtype=float)
        z = logw[None, :] - 0.5 * (x[..., None] - atoms[None, :]) ** 2
        z -= z.max(axis=-1, keepdims=True)
        pw = np.exp(z)
        return (pw * atoms).sum(-1) / pw.sum(-1)

    def A(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        return np.where(ax > alpha, ax - post_mean(ax), alpha)

    # The branch switch at alpha is a downward step by the posterior mean at
    # alpha for every nonnull prior, so monotonicity is judged on |x| > alpha.
    xs = np.linspace(0.0, max(t2, alpha) + 8.0, n_check)
    vals = A(xs[xs > alpha])
    monotone = bool(np.all(np.diff(vals) >= -1e-12))
    A.post_mean = post_mean
    return A, monotone


def general_slope_F(t: float, eps: float, alpha: float) -> Tuple[float, bool]:
    """Risk functional of the analytic penalty at the constant-or-nothing prior t."""
    A, mono = general_slope_analytic_penalty(t, t, 1.0, eps, alpha)
    pm = A.post_mean

    def eta(x):
        ax = abs(x)
        return math.copysign(float(pm(np.array([ax]))[0]), x) if ax > alpha else 0.0

    def E(m):
        f = lambda z: (eta(m + z) - m) ** 2 * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        pts = sorted({-alpha - m, alpha - m})
        edges = [-12.0 - abs(m)] + [p for p in pts if -12 - abs(m) < p < 12 + abs(m)] + [12.0 + abs(m)]
        return sum(integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
                   for a, b in zip(edges[:-1], edges[1:]))

    return (1 - eps) * E(0.0) + eps * E(t), mono


def constant_prior_general_slope(T: float, eps: float, delta: float, u: float,
                                 n_scan: int = 40, tol: float = 1e-4) -> TradeoffPoint:
    """Largest zero-threshold reached by the analytic penalty (where it is monotone)."""
    a_min = 0.0 if u >= 1 else float(normal_quantile(1 - u / 2))

    def check(a):
        if a <= 0:
            return None
        t = atom_for_power(a, u)
        if t is None or not math.isfinite(t):
            return None
        F, mono = general_slope_F(t, eps, a)
        if mono and F <= delta:
            return dict(t=t, F=F)
        return None

    a, w = _largest_feasible(check, a_min, a_min + 8.0, n_scan, tol)
    if a is None:
        return TradeoffPoint(u, math.nan, math.nan, {}, feasible=False)
    return TradeoffPoint(u, fdp_inf(a, u, eps), a, dict(a2=a, t=w["t"], kind="analytic"),
                         extra=dict(tau=T / w["t"] if w["t"] > 0 else math.inf, F=w["F"]))
