"""Accelerated proximal gradient (FISTA) for sorted-L1 penalized least squares."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .prox import TwoLevelPenalty, check_penalty_vector, slope_prox, sorted_l1, two_level_prox


@dataclass
class Problem:
    X: np.ndarray
    y: np.ndarray
    penalty: Union[np.ndarray, TwoLevelPenalty]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"shape mismatch: X {self.X.shape}, y {self.y.shape}")
        if self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise ValueError("need n >= 1 and p >= 1")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("X and y must be finite")
        if not isinstance(self.penalty, TwoLevelPenalty):
            self.penalty = check_penalty_vector(self.penalty, allow_zero=True)
            if self.penalty.shape[0] != self.p:
                raise ValueError("penalty length must equal the number of columns")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def penalty_vector(self) -> np.ndarray:
        if isinstance(self.penalty, TwoLevelPenalty):
            return self.penalty.materialize(self.p)
        return self.penalty


@dataclass
class SolverOptions:
    max_iters: int = 50000
    rel_tol: float = 1e-10
    use_acceleration: bool = True
    step_size: Optional[float] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")


@dataclass
class SolveResult:
    beta: np.ndarray
    iters: int
    cost: float
    converged: bool


def cost(prob: Problem, b) -> float:
    b = np.asarray(b, dtype=float)
    if b.shape != (prob.p,):
        raise ValueError(f"b must have length {prob.p}")
    r = prob.y - prob.X @ b
    return 0.5 * float(r @ r) + sorted_l1(b, prob.penalty_vector())


def lipschitz_estimate(X, n_iter=30, inflate=1.01, seed=0) -> float:
    """Power-iteration estimate of the largest eigenvalue of X^T X, inflated."""
    X = np.asarray(X, dtype=float)
    v = np.random.default_rng(seed).standard_normal(X.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(n_iter):
        w = X.T @ (X @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            raise ValueError("X appears to be zero")
        v = w / lam
    # Rayleigh quotient at the final vector
    xv = X @ v
    lam = max(lam, float(xv @ xv))
    return inflate * lam


def _prox_op(prob: Problem, step: float):
    pen = prob.penalty
    if isinstance(pen, TwoLevelPenalty):
        scaled = pen.scaled(step)
        return lambda z: two_level_prox(z, scaled)
    theta = step * pen
    return lambda z: slope_prox(z, theta, check=False)


def slope_solve(prob: Problem, opts: SolverOptions = None, beta0=None, lipschitz=None) -> SolveResult:
    """Minimize 0.5*||y - X b||^2 + J_lambda(b) with FISTA and objective restarts.

    When a step increases the objective the momentum is dropped and a plain
    proximal gradient step is taken from the last iterate instead, so the
    reported cost sequence never goes up.  Stops once the relative change of
    the cost falls below ``opts.rel_tol``.
    """
    opts = opts or SolverOptions()
    X, y = prob.X, prob.y
    lam = prob.penalty_vector()
    if opts.step_size is not None:
        step = opts.step_size
    else:
        L = lipschitz if lipschitz is not None else lipschitz_estimate(X)
        step = 1.0 / L
    prox = _prox_op(prob, step)

    def objective(b, Xb):
        r = y - Xb
        return 0.5 * float(r @ r) + sorted_l1(b, lam)

    x = np.zeros(prob.p) if beta0 is None else np.array(beta0, dtype=float)
    Xx = X @ x
    f = objective(x, Xx)
    z, Xz = x, Xx
    x_prev, Xx_prev = x, Xx
    tk = 1.0
    converged = False
    it = 0
    while it < opts.max_iters:
        it += 1
        grad = X.T @ (Xz - y)
        x_new = prox(z - step * grad)
        Xx_new = X @ x_new
        f_new = objective(x_new, Xx_new)
        if f_new > f and z is not x:
            # restart: plain step from the current iterate
            tk = 1.0
            grad = X.T @ (Xx - y)
            x_new = prox(x - step * grad)
            Xx_new = X @ x_new
            f_new = objective(x_new, Xx_new)
        if f_new > f:
            # a plain step failed to decrease: only rounding is left
            converged = True
            break
        change = f - f_new
        x_prev, Xx_prev = x, Xx
        x, Xx, f = x_new, Xx_new, f_new
        if change <= opts.rel_tol * max(abs(f), 1e-300):
            converged = True
            break
        if opts.use_acceleration:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
            mom = (tk - 1.0) / t_next
            tk = t_next
            z = x + mom * (x - x_prev)
            Xz = Xx + mom * (Xx - Xx_prev)
        else:
            z, Xz = x, Xx
    return SolveResult(beta=x, iters=it, cost=f, converged=converged)
