"""Finite-sample experiments: designs, priors, penalties, metrics and MSE tuning."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from .gauss import normal_quantile
from .prox import TwoLevelPenalty
from .solver import Problem, SolverOptions, lipschitz_estimate, slope_solve


@dataclass(frozen=True)
class DesignSpec:
    n: int
    p: int
    tail: str = "gaussian"
    corr_rho: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.tail not in ("gaussian", "student3"):
            raise ValueError("tail must be 'gaussian' or 'student3'")
        if not 0.0 <= self.corr_rho < 1.0:
            raise ValueError("corr_rho must lie in [0, 1)")


@dataclass(frozen=True)
class PriorSpec:
    """Nonzero part of the signal: ``tied`` (constant value) or ``uniform`` on [0, value]."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("tied", "uniform"):
            raise ValueError("prior kind must be 'tied' or 'uniform'")


@dataclass(frozen=True)
class PenaltySpec:
    """One of lasso(lam), two_level(lam1, lam2, s), bh(gamma, q), uniform(gamma)."""

    kind: str
    params: tuple

    def __post_init__(self):
        arity = dict(lasso=1, two_level=3, bh=2, uniform=1)
        if self.kind not in arity:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if len(self.params) != arity[self.kind]:
            raise ValueError(f"{self.kind} takes {arity[self.kind]} parameters")


@dataclass
class SimStudy:
    design: DesignSpec
    eps: float
    prior: PriorSpec
    sigma: float
    penalty: PenaltySpec
    replicates: int = 10
    seed: int = 0
    xi: Optional[float] = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass
class ReplicateRecord:
    replicate: int
    mse: float
    tpp: float
    fdp: float
    iters: int
    converged: bool


# ---------------------------------------------------------------------------
# generators


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@lru_cache(maxsize=8)
def _ar1_sqrt(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    sigma = rho ** np.abs(idx[:, None] - idx[None, :])
    w, V = np.linalg.eigh(sigma)
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    root.setflags(write=False)
    return root


def ar1_sqrt(p: int, rho: float) -> np.ndarray:
    """Symmetric square root of the AR(1) correlation matrix rho^|i-j|."""
    return _ar1_sqrt(int(p), float(rho))


def gen_design(spec: DesignSpec, seed=None) -> np.ndarray:
    rng = _rng(seed)
    n, p = spec.n, spec.p
    if spec.tail == "gaussian":
        X = rng.standard_normal((n, p)) / math.sqrt(n)
    else:
        X = rng.standard_t(3, size=(n, p)) / math.sqrt(3 * n)
    if spec.corr_rho > 0:
        X = X @ ar1_sqrt(p, spec.corr_rho)
    return np.asfortranarray(X)


def gen_prior(p: int, eps: float, kind: PriorSpec, seed=None) -> np.ndarray:
    rng = _rng(seed)
    mask = rng.random(p) < eps
    if kind.kind == "tied":
        vals = np.full(p, float(kind.value))
    else:
        vals = rng.uniform(0.0, kind.value, size=p)
    return np.where(mask, vals, 0.0)


def gen_response(X, beta, sigma, seed=None) -> np.ndarray:
    rng = _rng(seed)
    return X @ beta + sigma * rng.standard_normal(X.shape[0])


# ---------------------------------------------------------------------------
# penalties and metrics


def build_penalty(spec: PenaltySpec, p: int) -> np.ndarray:
    kind, par = spec.kind, spec.params
    i = np.arange(1, p + 1)
    if kind == "lasso":
        lam = np.full(p, float(par[0]))
    elif kind == "two_level":
        lam = TwoLevelPenalty(*par).materialize(p)
    elif kind == "bh":
        gamma, q = par
        if not 0 < q < 1:
            raise ValueError("q must lie in (0, 1)")
        lam = gamma * normal_quantile(1 - i * q / (2 * p)) / normal_quantile(1 - q / (2 * p))
    else:
        lam = par[0] * (1 - 0.99 * (i - 1) / p)
    lam = np.asarray(lam, dtype=float)
    assert np.all(np.diff(lam) <= 1e-12), "penalty must be nonincreasing"
    return lam


def default_xi(beta_hat) -> float:
    return 1e-6 * max(1.0, float(np.max(np.abs(beta_hat))) if len(beta_hat) else 1.0)


def empirical_tpp_fdp(beta_hat, beta, xi: float = None):
    """Thresholded power and false discovery proportion (a discovery is |b_j| > xi)."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta_hat.shape != beta.shape:
        raise ValueError("length mismatch")
    if xi is None:
        xi = default_xi(beta_hat)
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    signal = beta != 0
    if not signal.any():
        raise ValueError("power is undefined when beta has no nonzero entries")
    disc = np.abs(beta_hat) > xi
    tp = np.count_nonzero(disc & signal)
    nd = np.count_nonzero(disc)
    tpp = tp / np.count_nonzero(signal)
    fdp = (nd - tp) / nd if nd > 0 else 0.0
    return float(tpp), float(fdp)


# ---------------------------------------------------------------------------
# studies


def replicate_data(study: SimStudy, r: int):
    """(X, beta, y) for replicate r, drawn from the stream keyed by (seed, r)."""
    ss = np.random.SeedSequence([int(study.seed), int(r)])
    g_design, g_prior, g_noise = (np.random.default_rng(s) for s in ss.spawn(3))
    X = gen_design(study.design, g_design)
    beta = gen_prior(study.design.p, study.eps, study.prior, g_prior)
    y = gen_response(X, beta, study.sigma, g_noise)
    return X, beta, y


def _map(fn, items, workers):
    """Ordered map, in worker processes when ``workers`` > 1."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _one_replicate(args):
    study, r, opts = args
    X, beta, y = replicate_data(study, r)
    if study.penalty.kind == "two_level":
        pen = TwoLevelPenalty(*study.penalty.params)
    else:
        pen = build_penalty(study.penalty, study.design.p)
    res = slope_solve(Problem(X, y, pen), opts)
    mse = float(np.mean((res.beta - beta) ** 2))
    if np.any(beta != 0):
        tpp, fdp = empirical_tpp_fdp(res.beta, beta, study.xi)
    else:
        tpp, fdp = math.nan, math.nan
    return ReplicateRecord(r, mse, tpp, fdp, res.iters, res.converged)


def run_study(study: SimStudy, opts: SolverOptions = None, workers: int = 1) -> List[ReplicateRecord]:
    """Solve every replicate with the study penalty; results are in replicate order."""
    opts = opts or SolverOptions()
    return _map(_one_replicate, [(study, r, opts) for r in range(study.replicates)], workers)


def summarize(records: Sequence[ReplicateRecord]) -> dict:
    """Mean and sample standard deviation of each metric."""
    out = {}
    for key in ("mse", "tpp", "fdp", "iters"):
        v = np.array([getattr(r, key) for r in records], dtype=float)
        out[key + "_mean"] = float(np.mean(v))
        out[key + "_sd"] = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
    return out


# ---------------------------------------------------------------------------
# MSE tuning of the two-level penalty


@dataclass
class TuneResult:
    lam1: float
    lam2: float
    s: float
    a: float
    gamma: float
    mse: float
    lasso_mse: float
    lasso_gamma: float
    n_solves: int = 0
    trajectories: list = field(default_factory=list)


TUNE_OPTIONS = SolverOptions(rel_tol=1e-7, max_iters=20000)


def default_a_grid():
    return tuple(np.round(np.arange(1.0, 8.0 + 1e-9, 0.25), 10))


def default_s_grid(n=20):
    return tuple(np.linspace(0.025, 0.975, n))


def mse_tune_two_level(X, y, beta, a_grid=None, s_grid=None, gamma0=1e-3, growth=1.25,
                       max_steps=200, opts: SolverOptions = None) -> TuneResult:
    """Oracle-MSE tuning of <gamma*a, gamma; s> over a grid of (a, s).

    For each (a, s) the scale gamma starts at ``gamma0`` and grows by
    ``growth``; the trajectory stops as soon as the MSE exceeds the smallest
    value seen on it.  Solves along a trajectory are warm-started.  For a == 1
    the split s is irrelevant, so that trajectory is run once.
    """
    a_grid = tuple(a_grid) if a_grid is not None else default_a_grid()
    s_grid = tuple(s_grid) if s_grid is not None else default_s_grid()
    if any(a < 1 for a in a_grid) or not a_grid or not s_grid:
        raise ValueError("a values must be >= 1 and grids nonempty")
    opts = opts or TUNE_OPTIONS
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    L = lipschitz_estimate(X)
    best = (math.inf, None)
    lasso_best = (math.inf, None)
    n_solves = 0
    trajectories = []
    for a in a_grid:
        for s in (s_grid if a > 1 else s_grid[:1]):
            gamma = gamma0
            m_traj = math.inf
            b0 = None
            arg = None
            for _ in range(max_steps):
                pen = TwoLevelPenalty(gamma * a, gamma, s)
                res = slope_solve(Problem(X, y, pen), opts, beta0=b0, lipschitz=L)
                n_solves += 1
                b0 = res.beta
                mse = float(np.mean((res.beta - beta) ** 2))
                if mse > m_traj:
                    break
                m_traj, arg = mse, gamma
                gamma *= growth
            trajectories.append((a, s, arg, m_traj))
            if m_traj < best[0]:
                best = (m_traj, (a, s, arg))
            if a == 1 and m_traj < lasso_best[0]:
                lasso_best = (m_traj, arg)
    mse, (a, s, gamma) = best
    return TuneResult(lam1=gamma * a, lam2=gamma, s=s, a=a, gamma=gamma, mse=mse,
                      lasso_mse=lasso_best[0], lasso_gamma=lasso_best[1],
                      n_solves=n_solves, trajectories=trajectories)


def tune_scale(X, y, beta, shape, gamma0=1e-3, growth=1.25, max_steps=200,
               opts: SolverOptions = None):
    """Oracle-MSE tuning of a single scale gamma for the penalty gamma * shape.

    Same schedule and stopping rule as one trajectory of the two-level tuner.
    Returns (best gamma, best MSE).
    """
    opts = opts or TUNE_OPTIONS
    shape = np.asarray(shape, dtype=float)
    L = lipschitz_estimate(X)
    gamma, best, arg, b0 = gamma0, math.inf, None, None
    for _ in range(max_steps):
        res = slope_solve(Problem(X, y, gamma * shape), opts, beta0=b0, lipschitz=L)
        b0 = res.beta
        mse = float(np.mean((res.beta - beta) ** 2))
        if mse > best:
            break
        best, arg = mse, gamma
        gamma *= growth
    return arg, best


@dataclass
class TuneRecord:
    replicate: int
    a: float
    s: float
    gamma: float
    lam1: float
    lam2: float
    mse: float
    lasso_mse: float
    lasso_gamma: float
    bh_mse: float = math.nan
    uniform_mse: float = math.nan


def _one_tune(args):
    study, r, a_grid, s_grid, others = args
    X, beta, y = replicate_data(study, r)
    res = mse_tune_two_level(X, y, beta, a_grid, s_grid)
    rec = TuneRecord(r, res.a, res.s, res.gamma, res.lam1, res.lam2, res.mse,
                     res.lasso_mse, res.lasso_gamma)
    if others:
        p = study.design.p
        rec.bh_mse = tune_scale(X, y, beta, build_penalty(PenaltySpec("bh", (1.0, 0.5)), p))[1]
        rec.uniform_mse = tune_scale(X, y, beta, build_penalty(PenaltySpec("uniform", (1.0,)), p))[1]
    return rec


def tune_study(study: SimStudy, a_grid=None, s_grid=None, workers: int = 1,
               other_penalties: bool = False) -> List[TuneRecord]:
    """Run the two-level tuner on every replicate of a study (its penalty is ignored).

    With ``other_penalties`` the BH (q = 0.5) and uniform shapes are tuned too.
    """
    items = [(study, r, a_grid, s_grid, other_penalties) for r in range(study.replicates)]
    return _map(_one_tune, items, workers)
