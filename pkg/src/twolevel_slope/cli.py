"""Command-line front end.

Every subcommand writes CSV (tables) or JSON (scalar records).  When
``--out`` (or ``--out-dir`` for ``figures``) is given, a run manifest is
written next to the output; ``replay`` re-runs a manifest.

Exit codes: 0 success, 1 computation infeasible, 2 bad arguments.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from typing import List, Optional

import numpy as np

from .asymptotics import (
    DiscretePrior,
    NormalizedTwoLevel,
    calibrate,
    predicted_mse,
    state_evolution_tau,
    zero_threshold,
)
from .prox import TwoLevelPenalty, slope_prox, two_level_prox
from .sim import (
    DesignSpec,
    PenaltySpec,
    PriorSpec,
    SimStudy,
    run_study,
    summarize,
    tune_study,
)
from .solver import Problem, SolverOptions, slope_solve
from . import tradeoff as T


class Infeasible(Exception):
    """Raised when the requested quantity does not exist for the inputs."""


# ---------------------------------------------------------------------------
# formatting


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return fmt(x)
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def csv_text(header: List[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def json_text(record: dict) -> str:
    return json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: Optional[str], outputs: list):
    if out:
        d = os.path.dirname(os.path.abspath(out))
        os.makedirs(d, exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs.append(out)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument parsing helpers


def floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def u_grid(text: str) -> List[float]:
    """``a:b:n`` (n points from a to b inclusive) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must look like a:b:n")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}")
        if n < 1:
            raise argparse.ArgumentTypeError("grid needs n >= 1")
        return [float(v) for v in np.linspace(a, b, n)] if n > 1 else [a]
    return floats(text)


def prior_arg(text: str) -> DiscretePrior:
    """``value:prob,value:prob,...``"""
    try:
        atoms = []
        for item in text.split(","):
            v, p = item.split(":")
            atoms.append((float(v), float(p)))
        return DiscretePrior.from_atoms(atoms)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad prior {text!r}: {e}")


def penalty_arg(text: str) -> PenaltySpec:
    """``lasso:lam``, ``two_level:l1,l2,s``, ``bh:gamma,q`` or ``uniform:gamma``."""
    try:
        kind, _, rest = text.partition(":")
        return PenaltySpec(kind, tuple(floats(rest)))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def signal_arg(text: str) -> PriorSpec:
    """``tied:T`` or ``uniform:U``."""
    try:
        kind, _, v = text.partition(":")
        return PriorSpec(kind, float(v))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _grid_choice(name: str) -> T.SearchGrid:
    return dict(default=T.SearchGrid, fine=T.SearchGrid.fine, coarse=T.SearchGrid.coarse)[name]()


def _has_header(path: str) -> bool:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(",")]
    except ValueError:
        return True
    return False


def _load_csv(path: str, ndmin: int) -> np.ndarray:
    """Numeric CSV, skipping a header line if there is one."""
    if path.endswith(".npy"):
        return np.load(path)
    return np.loadtxt(path, delimiter=",", ndmin=ndmin, skiprows=1 if _has_header(path) else 0)


def _load_vector(path: str) -> np.ndarray:
    return np.ravel(_load_csv(path, 1))


def _load_matrix(path: str) -> np.ndarray:
    return _load_csv(path, 2)


# ---------------------------------------------------------------------------
# subcommands


def cmd_prox(args, outputs):
    v = np.array(args.v, dtype=float)
    if args.two_level is not None:
        if len(args.two_level) != 3:
            raise ValueError("--two-level takes lam1,lam2,s")
        out = two_level_prox(v, TwoLevelPenalty(*args.two_level))
    elif args.theta is not None:
        out = slope_prox(v, np.array(args.theta, dtype=float))
    else:
        raise ValueError("give --theta or --two-level")
    _emit(",".join(fmt(x) for x in out) + "\n", args.out, outputs)


def cmd_solve(args, outputs):
    X = _load_matrix(args.x)
    y = _load_vector(args.y)
    p = X.shape[1]
    if args.two_level is not None:
        pen = TwoLevelPenalty(*args.two_level)
    elif args.theta is not None:
        pen = np.array(args.theta, dtype=float)
        if pen.size == 1:
            pen = np.full(p, pen[0])
    else:
        raise ValueError("give --theta or --two-level")
    res = slope_solve(Problem(X, y, pen), SolverOptions(max_iters=args.max_iters, rel_tol=args.rel_tol))
    rows = [(j, b) for j, b in enumerate(res.beta)]
    _emit(csv_text(["index", "beta"], rows), args.out, outputs)
    sys.stderr.write(f"iters={res.iters} converged={res.converged} cost={fmt(res.cost)}\n")


def cmd_se(args, outputs):
    pen = NormalizedTwoLevel(args.a1, args.a2, args.s)
    sol = state_evolution_tau(args.prior, pen, args.delta, args.sigma)
    if not sol.feasible:
        raise Infeasible("state evolution has no finite fixed point for these inputs")
    lam = calibrate(pen, sol, args.prior, args.delta)
    alpha = zero_threshold(pen, sol.h)
    rec = dict(tau=sol.tau, h=sol.h, q1=sol.q1, q2=sol.q2, zero_threshold=alpha,
               mse=predicted_mse(sol, args.delta, args.sigma),
               lam1=lam.lam1, lam2=lam.lam2, s=lam.s)
    pstar = args.prior.nonzero() if args.prior.eps > 0 else None
    if pstar is not None:
        u = T.tpp_inf(pstar.scaled(1.0 / sol.tau), alpha)
        rec.update(tpp=u, fdp=T.fdp_inf(alpha, u, args.prior.eps) if u > 0 else math.nan)
    _emit(json_text(rec), args.out, outputs)


def _lasso(u, eps, delta) -> T.TradeoffPoint:
    """LASSO point, or an infeasible marker at or above the power limit."""
    if u >= T.dt_limit(delta, eps):
        return T.TradeoffPoint(u, math.nan, math.nan, {}, feasible=False)
    return T.lasso_point(u, eps, delta)


TRADEOFF_HEADER = ["u", "min_fdp", "alpha_star", "a1", "a2", "s", "t1", "t2", "rho", "kind", "feasible"]


def _point_row(pt: T.TradeoffPoint):
    a = pt.argmax
    return [pt.u, pt.min_fdp, pt.alpha_star, a.get("a1"), a.get("a2"), a.get("s"),
            a.get("t1", a.get("t")), a.get("t2", a.get("t")), a.get("rho"), a.get("kind", ""), pt.feasible]


def cmd_tradeoff(args, outputs):
    mode = args.mode
    if mode == "dt-limit":
        if args.eps is None:
            raise ValueError("dt-limit needs --eps")
        _emit(json_text(dict(eps=args.eps, delta=args.delta, dt_limit=T.dt_limit(args.delta, args.eps))),
              args.out, outputs)
        return
    if args.eps is None and mode != "fixed":
        raise ValueError(f"{mode} mode needs --eps")
    grid = _grid_choice(args.grid)
    pts = []
    for u in args.u_grid:
        if mode == "all-priors":
            pt = T.max_zero_threshold_all_priors(u, args.eps, args.delta, grid)
        elif mode == "lasso":
            pt = _lasso(u, args.eps, args.delta)
        elif mode == "fixed":
            if args.prior is None:
                raise ValueError("fixed mode needs --prior")
            pt = T.fixed_prior_max_zero_threshold(args.prior, u, args.delta, args.sigma, grid)
        elif mode == "constant":
            if args.general:
                pt = T.constant_prior_general_slope(args.T, args.eps, args.delta, u)
            else:
                pt = T.constant_prior_max_zero_threshold(args.T, args.eps, args.delta, u, grid,
                                                         one_level=args.one_level)
        pts.append(pt)
    _emit(csv_text(TRADEOFF_HEADER, [_point_row(p) for p in pts]), args.out, outputs)
    if not any(p.feasible for p in pts):
        raise Infeasible("no feasible point on the requested grid")


def _study_from_args(args) -> SimStudy:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        return study_from_dict(cfg)
    return SimStudy(DesignSpec(args.n, args.p, args.tail, args.rho), args.eps, args.signal,
                    args.sigma, args.penalty or PenaltySpec("lasso", (1.0,)),
                    args.replicates, args.seed, args.xi)


def study_from_dict(cfg: dict) -> SimStudy:
    d = cfg["design"]
    pen = cfg.get("penalty", dict(kind="lasso", params=[1.0]))
    return SimStudy(DesignSpec(int(d["n"]), int(d["p"]), d.get("tail", "gaussian"), float(d.get("corr_rho", 0.0))),
                    float(cfg["eps"]), PriorSpec(cfg["prior"]["kind"], float(cfg["prior"]["value"])),
                    float(cfg["sigma"]), PenaltySpec(pen["kind"], tuple(float(v) for v in pen["params"])),
                    int(cfg.get("replicates", 10)), int(cfg.get("seed", 0)), cfg.get("xi"))


SIM_HEADER = ["replicate", "mse", "tpp", "fdp", "iters", "converged"]


def cmd_simulate(args, outputs):
    study = _study_from_args(args)
    recs = run_study(study, SolverOptions(max_iters=args.max_iters, rel_tol=args.rel_tol), workers=args.threads)
    rows = [[r.replicate, r.mse, r.tpp, r.fdp, r.iters, r.converged] for r in recs]
    sm = summarize(recs)
    rows.append(["mean", sm["mse_mean"], sm["tpp_mean"], sm["fdp_mean"], sm["iters_mean"], ""])
    rows.append(["sd", sm["mse_sd"], sm["tpp_sd"], sm["fdp_sd"], sm["iters_sd"], ""])
    _emit(csv_text(SIM_HEADER, rows), args.out, outputs)


TUNE_HEADER = ["replicate", "a", "s", "gamma", "lam1", "lam2", "mse", "lasso_mse", "lasso_gamma",
               "bh_mse", "uniform_mse"]


def _tune_rows(recs):
    rows = [[r.replicate, r.a, r.s, r.gamma, r.lam1, r.lam2, r.mse, r.lasso_mse, r.lasso_gamma,
             r.bh_mse, r.uniform_mse] for r in recs]
    for name, fn in (("mean", np.mean), ("sd", lambda v: np.std(v, ddof=1) if len(v) > 1 else 0.0)):
        row = [name]
        for key in TUNE_HEADER[1:]:
            v = np.array([getattr(r, key) for r in recs], dtype=float)
            row.append(float(fn(v)))
        rows.append(row)
    return rows


def cmd_mse_tune(args, outputs):
    study = _study_from_args(args)
    recs = tune_study(study, args.a_grid, _s_grid(args.s_points), workers=args.threads,
                      other_penalties=args.others)
    _emit(csv_text(TUNE_HEADER, _tune_rows(recs)), args.out, outputs)


def _s_grid(n):
    from .sim import default_s_grid
    return default_s_grid(n)


# ---------------------------------------------------------------------------
# figure data


def _fig_tradeoff(eps, delta, us, grid):
    rows = []
    u_dt = T.dt_limit(delta, eps)
    for u in us:
        lp = _lasso(u, eps, delta)
        tp = T.max_zero_threshold_all_priors(u, eps, delta, grid)
        rows.append([eps, delta, u, lp.min_fdp, lp.alpha_star, tp.min_fdp, tp.alpha_star, u_dt])
    return rows


FIG_TRADEOFF_HEADER = ["eps", "delta", "u", "q_lasso", "alpha_lasso", "q_two_level", "alpha_two_level", "u_dt"]


def figure_1(args, grid):
    return FIG_TRADEOFF_HEADER, _fig_tradeoff(0.2, 0.3, args.u_grid, grid)


def figure_5(args, grid):
    eps, delta = 0.2, 0.3
    rows = _fig_tradeoff(eps, delta, args.u_grid, grid)
    u_dt = T.dt_limit(delta, eps)
    q_dt = T.q_lasso(u_dt * (1 - 1e-9), eps, delta)
    # the line from (0, 1) to (u_dt, q_lasso(u_dt)) splits the achievable region
    for r in rows:
        r.append(1.0 + (q_dt - 1.0) * r[2] / u_dt if r[2] <= u_dt else math.nan)
        r.append(1.0 - eps)
    return FIG_TRADEOFF_HEADER + ["complete_boundary", "one_minus_eps"], rows


def figure_6(args, grid):
    header = ["eps", "delta", "method", "u", "min_fdp", "alpha", "mse"]
    rows = []
    T0 = 5.0
    for eps, delta in ((0.2, 0.3), (0.5, 0.3), (0.5, 0.5)):
        for u in args.u_grid:
            for method in ("lasso", "two_level", "general"):
                if method == "general":
                    pt = T.constant_prior_general_slope(T0, eps, delta, u)
                else:
                    pt = T.constant_prior_max_zero_threshold(T0, eps, delta, u, grid,
                                                             one_level=(method == "lasso"))
                mse = math.nan
                if pt.feasible:
                    tau = pt.extra.get("tau", math.nan)
                    mse = tau ** 2 * pt.extra.get("F", math.nan)
                rows.append([eps, delta, method, u, pt.min_fdp, pt.alpha_star, mse])
    return header, rows


def figure_7(args, grid):
    header = ["vary", "eps", "delta", "method", "min_fdp", "alpha", "mse"]
    rows = []
    u, T0 = 0.5, 5.0
    settings = [("eps", e, 0.5) for e in np.round(np.linspace(0.1, 0.9, 9), 10)]
    settings += [("delta", 0.5, d) for d in np.round(np.linspace(0.1, 0.9, 9), 10)]
    for vary, eps, delta in settings:
        for method in ("lasso", "two_level", "general"):
            if method == "general":
                pt = T.constant_prior_general_slope(T0, eps, delta, u)
            else:
                pt = T.constant_prior_max_zero_threshold(T0, eps, delta, u, grid, one_level=(method == "lasso"))
            mse = pt.extra.get("tau", math.nan) ** 2 * pt.extra.get("F", math.nan) if pt.feasible else math.nan
            rows.append([vary, eps, delta, method, pt.min_fdp, pt.alpha_star, mse])
    return header, rows


def figure_8(args, grid):
    header = ["tail", "corr_rho", "prior", "sigma", "method", "mse_mean", "mse_sd", "a_median"]
    rows = []
    n = int(round(0.9 * args.p))
    for tail in ("gaussian", "student3"):
        for rho in (0.0, 0.8):
            for prior in (PriorSpec("uniform", 5.0), PriorSpec("tied", 5.0)):
                for sigma in args.sigmas:
                    study = SimStudy(DesignSpec(n, args.p, tail, rho), 0.5, prior, sigma,
                                     PenaltySpec("lasso", (1.0,)), args.replicates, args.seed)
                    recs = tune_study(study, args.a_grid, _s_grid(args.s_points), workers=args.threads,
                                      other_penalties=True)
                    a_med = float(np.median([r.a for r in recs]))
                    for method, key in (("two_level", "mse"), ("lasso", "lasso_mse"),
                                        ("bh", "bh_mse"), ("uniform", "uniform_mse")):
                        v = np.array([getattr(r, key) for r in recs])
                        sd = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
                        rows.append([tail, rho, prior.kind, sigma, method, float(np.mean(v)), sd,
                                     a_med if method == "two_level" else 1.0])
    return header, rows


FIGURES = {1: figure_1, 5: figure_5, 6: figure_6, 7: figure_7, 8: figure_8}


def cmd_figures(args, outputs):
    grid = _grid_choice(args.grid)
    os.makedirs(args.out_dir, exist_ok=True)
    for k in args.fig:
        header, rows = FIGURES[k](args, grid)
        _emit(csv_text(header, rows), os.path.join(args.out_dir, f"figure{k}.csv"), outputs)


def cmd_replay(args, outputs):
    with open(args.manifest, encoding="utf-8") as fh:
        man = json.load(fh)
    return main(man["argv"])


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twolevel-slope", description=__doc__.split("\n")[0])
    ap.add_argument("--threads", type=int, default=1, help="worker processes for simulations")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prox", help="sorted-L1 proximal operator")
    p.add_argument("--v", type=floats, required=True)
    p.add_argument("--theta", type=floats)
    p.add_argument("--two-level", type=floats, metavar="L1,L2,S")
    p.add_argument("--out")
    p.set_defaults(func=cmd_prox)

    p = sub.add_parser("solve", help="solve a SLOPE problem from CSV/NPY files")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--theta", type=floats, help="full penalty vector or one LASSO value")
    p.add_argument("--two-level", type=floats, metavar="L1,L2,S")
    p.add_argument("--max-iters", type=int, default=50000)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("se", help="state evolution and calibration for a normalized penalty")
    p.add_argument("--prior", type=prior_arg, required=True, help="value:prob,...")
    p.add_argument("--a1", type=float, required=True)
    p.add_argument("--a2", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_se)

    p = sub.add_parser("tradeoff", help="asymptotic TPP/FDP trade-off")
    p.add_argument("mode", choices=["all-priors", "fixed", "constant", "lasso", "dt-limit"])
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--u-grid", type=u_grid, default=u_grid("0.1:0.9:9"))
    p.add_argument("--prior", type=prior_arg, help="fixed mode: value:prob,...")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--T", type=float, default=5.0, help="constant mode: signal value")
    p.add_argument("--one-level", action="store_true", help="constant mode: LASSO only")
    p.add_argument("--general", action="store_true", help="constant mode: analytic general SLOPE")
    p.add_argument("--grid", choices=["default", "fine", "coarse"], default="default")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tradeoff)

    for name, fn, helptext in (("simulate", cmd_simulate, "finite-sample study"),
                               ("mse-tune", cmd_mse_tune, "oracle-MSE tuning of the two-level penalty")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="study JSON; overrides the study flags")
        p.add_argument("--n", type=int, default=450)
        p.add_argument("--p", type=int, default=500)
        p.add_argument("--tail", choices=["gaussian", "student3"], default="gaussian")
        p.add_argument("--rho", type=float, default=0.0)
        p.add_argument("--eps", type=float, default=0.5)
        p.add_argument("--signal", type=signal_arg, default=PriorSpec("tied", 5.0), help="tied:T or uniform:U")
        p.add_argument("--sigma", type=float, default=0.1)
        p.add_argument("--penalty", type=penalty_arg, help="lasso:lam | two_level:l1,l2,s | bh:g,q | uniform:g")
        p.add_argument("--replicates", type=int, default=10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--xi", type=float)
        p.add_argument("--max-iters", type=int, default=50000)
        p.add_argument("--rel-tol", type=float, default=1e-10)
        p.add_argument("--out")
        if name == "mse-tune":
            p.add_argument("--a-grid", type=u_grid, default=None, help="default 1:8:29")
            p.add_argument("--s-points", type=int, default=20)
            p.add_argument("--others", action="store_true", help="also tune BH and uniform shapes")
        p.set_defaults(func=fn)

    p = sub.add_parser("figures", help="write figure data files")
    p.add_argument("--fig", type=int, nargs="+", choices=sorted(FIGURES), default=sorted(FIGURES))
    p.add_argument("--out-dir", required=True)
    p.add_argument("--u-grid", type=u_grid, default=u_grid("0.05:0.95:19"))
    p.add_argument("--grid", choices=["default", "fine", "coarse"], default="default")
    p.add_argument("--p", type=int, default=500, help="figure 8 dimension")
    p.add_argument("--replicates", type=int, default=10, help="figure 8 replicates")
    p.add_argument("--sigmas", type=floats, default=[0.1, 0.5], help="figure 8 noise levels")
    p.add_argument("--a-grid", type=u_grid, default=u_grid("1,1.25,1.5,2,3,4,6,8"))
    p.add_argument("--s-points", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return ap


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    argv: list
    seed: Optional[int]
    outputs: list = field(default_factory=list)
    tool_version: str = ""
    wall_time: float = 0.0


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _manifest_path(args, outputs) -> Optional[str]:
    if getattr(args, "out_dir", None):
        return os.path.join(args.out_dir, "manifest.json")
    if getattr(args, "out", None):
        return args.out + ".manifest.json"
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    outputs: list = []
    t0 = time.perf_counter()
    try:
        rc = args.func(args, outputs)
    except Infeasible as e:
        sys.stderr.write(f"infeasible: {e}\n")
        return 1
    except (ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    if args.command == "replay":
        return rc
    path = _manifest_path(args, outputs)
    if path:
        params = {k: v for k, v in vars(args).items() if k != "func"}
        if getattr(args, "config", None):
            with open(args.config, encoding="utf-8") as fh:
                params["config_contents"] = json.load(fh)
        man = RunManifest(args.command, _jsonable({k: _plain(v) for k, v in params.items()}), argv,
                          getattr(args, "seed", None), outputs, _version(), time.perf_counter() - t0)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json_text(asdict(man)))
    return 0


def _plain(v):
    if isinstance(v, DiscretePrior):
        return [[a, b] for a, b in zip(v.values, v.probs)]
    if isinstance(v, (PriorSpec, PenaltySpec)):
        return asdict(v)
    return v


if __name__ == "__main__":
    sys.exit(main())
