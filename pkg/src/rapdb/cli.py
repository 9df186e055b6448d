"""Command-line driver: generate instances, run solvers, emit traces and
summaries.

Verbs: gen | solve | bench | gap | bound.  Exit codes: 0 success, 2
non-convergence within budget, 1 bad input.  Config precedence: CLI flags >
--config file > built-in defaults.  RAPDB_THREADS caps bench parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import diagnostics, egm, generate, problem, restarts
from .engine import SolverConfig, initial_iterate
from .errors import ConfigurationError, DataError, InputError, NonConvergence, SlaterViolation
from .geometry import JointBall
from .problem import Iterate

TRACE_COLUMNS = ["iter", "tau", "sigma", "gamma", "evals", "kkt", "infeas",
                 "subopt", "gap_xi", "restart_flag"]

SOLVERS = ("apdb-xy", "apdb-yx", "rapdb-xy", "rapdb-yx",
           "rapdb-xy-ada", "rapdb-yx-ada", "egm")


def _atomic_write(path: str, writer):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace_csv(path: str, trace, restart_log=()):
    def emit(fh):
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for rec in trace:
            w.writerow([
                rec.iter, rec.tau, rec.sigma, rec.gamma, rec.evals_total,
                "" if rec.kkt is None else rec.kkt,
                "" if rec.infeas is None else rec.infeas,
                "" if rec.subopt is None else rec.subopt,
                "" if rec.gap_xi is None else rec.gap_xi,
                rec.restart_flag])
    _atomic_write(path, emit)


def write_json(path: str, obj):
    _atomic_write(path, lambda fh: json.dump(obj, fh, indent=2))


def _parse_restart(spec: str, mode: str):
    if spec in (None, "", "none"):
        return restarts.NoRestart()
    parts = spec.split(":")
    kind = parts[0]
    if kind == "fixed":
        period = int(parts[1]) if len(parts) > 1 else 500
        return restarts.FixedRestart(period=period)
    if kind == "adaptive":
        xi, q = 0.04, 0.5
        if len(parts) > 1 and parts[1]:
            vals = parts[1].split(",")
            xi = float(vals[0])
            if len(vals) > 1:
                q = float(vals[1])
        warmup = 50 if mode == "yx" else 100
        check = 200 if mode == "yx" else 500
        return restarts.AdaptiveRestart(xi=xi, q=q, warmup=warmup,
                                        check_period=check)
    raise InputError(f"unknown restart spec {spec!r}")


def _solver_setup(name: str, args):
    """Map a solver name plus flags to (SolverConfig, RestartPolicy)."""
    if name not in SOLVERS:
        raise InputError(f"unknown solver {name!r} (choose from {SOLVERS})")
    if name == "egm":
        return None, None
    mode = "xy" if "-xy" in name else "yx"
    cfg = SolverConfig(mode=mode, nonmonotone=bool(args.nonmonotone),
                       eta=args.eta, tau_bar=args.tau_bar)
    if args.dual_bound is not None:
        cfg.dual_ball = JointBall(args.dual_bound)
    if name.startswith("apdb"):
        policy = restarts.NoRestart()
    elif name.endswith("-ada"):
        policy = _parse_restart(args.restart or "adaptive", mode)
    else:
        policy = _parse_restart(args.restart or "fixed:500", mode)
    return cfg, policy


def _load_point(path_or_none, inst) -> Iterate:
    if not path_or_none:
        return initial_iterate(inst)
    with open(path_or_none) as fh:
        d = json.load(fh)
    return Iterate(np.asarray(d.get("x", np.zeros(inst.n)), float),
                   np.asarray(d.get("v", np.zeros(inst.p)), float),
                   np.asarray(d.get("lam", np.zeros(inst.m)), float))


def _gen_instance(args):
    if args.family == "random-qcqp":
        return generate.random_qcqp(args.n, args.m, args.seed)
    if args.family == "kml":
        if args.data:
            X, labels = generate.load_kml_csv(args.data)
        else:
            X, labels = generate.synthetic_kml_data(
                n_samples=args.samples, n_features=args.features,
                seed=args.seed)
        return generate.kml_instance(X, labels)
    if args.family == "analytic":
        for entry in generate.analytic_suite():
            if entry.name == args.name:
                return entry.instance
        raise InputError(f"unknown analytic instance {args.name!r}")
    raise InputError(f"unknown family {args.family!r}")


# ---------------------------------------------------------------------------
# Verbs


def cmd_gen(args) -> int:
    inst = _gen_instance(args)
    write_json(args.out, problem.to_json_dict(inst))
    return 0


def _run_one(inst, solver: str, args):
    """Execute one solver run; returns a summary dict plus trace objects."""
    start = time.monotonic()
    criteria = diagnostics.TerminationCriteria(
        eps=args.eps, f_star=args.f_star,
        criterion="paper51" if args.f_star is not None else "conic",
        eps_kkt=args.eps, eps_feas=args.eps)
    if solver == "egm":
        z0 = initial_iterate(inst)
        if args.stepsize is not None:
            res = egm.run_egm(inst, args.stepsize, z0, args.budget)
            step_used = args.stepsize
        else:
            def score(z):
                return diagnostics.kkt_residual(inst, z).kkt_residual
            step_used, res = egm.tune_egm(inst, z0, args.budget, score)
        metrics = diagnostics.kkt_residual(inst, res.last, f_star=args.f_star)
        converged = (not res.diverged
                     and diagnostics.check_termination(metrics, criteria))
        summary = {
            "solver": solver, "stepsize": step_used,
            "iterations": res.iterations, "evals": 2 * res.iterations,
            "converged": converged, "diverged": res.diverged,
            "wall_time_s": time.monotonic() - start,
            "kkt": metrics.kkt_residual, "infeas": metrics.infeas,
            "f": metrics.f_value,
        }
        return summary, [], []
    cfg, policy = _solver_setup(solver, args)
    result = restarts.run_restarted(
        inst, cfg, policy, budget=args.budget, criteria=criteria,
        metrics_every=args.check_every)
    summary = {
        "solver": solver,
        "iterations": result.iterations, "evals": result.evals,
        "restarts": len(result.restart_log),
        "converged": result.converged, "status": result.status,
        "wall_time_s": time.monotonic() - start,
        "kkt": result.metrics.kkt_residual, "infeas": result.metrics.infeas,
        "f": result.metrics.f_value,
    }
    return summary, result.trace, result.restart_log


def cmd_solve(args) -> int:
    inst = problem.load(args.problem)
    summary, trace, restart_log = _run_one(inst, args.solver, args)
    if args.out:
        write_trace_csv(args.out, trace)
    if args.restart_log and restart_log:
        write_json(args.restart_log, [
            {"outer": e.outer, "iteration": e.iteration, "trigger": e.trigger,
             "gap_new": e.gap_new, "gap_ref": e.gap_ref}
            for e in restart_log])
    if args.summary:
        write_json(args.summary, summary)
    else:
        print(json.dumps(summary, indent=2))
    return 0 if summary["converged"] else 2


def _parse_seeds(spec: str):
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",")]


def cmd_bench(args) -> int:
    seeds = _parse_seeds(args.seeds)
    solvers = args.solvers.split(",")
    threads = int(os.environ.get("RAPDB_THREADS", "0")) or min(4, len(seeds))

    def one(job):
        seed, solver = job
        inst = generate.random_qcqp(args.n, args.m, seed)
        summary, _, _ = _run_one(inst, solver, args)
        summary["seed"] = seed
        return summary

    jobs = [(seed, solver) for solver in solvers for seed in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(one, jobs))
    table = compare_table(rows)
    out = {"runs": rows, "table": table}
    if args.summary:
        write_json(args.summary, out)
    else:
        print(json.dumps(table, indent=2))
    return 0


def compare_table(summaries):
    """Per-solver medians: iterations, wall time, evals per iteration."""
    by_solver = {}
    for s in summaries:
        by_solver.setdefault(s["solver"], []).append(s)
    table = []
    for solver, rows in by_solver.items():
        iters = [r["iterations"] for r in rows]
        table.append({
            "method": solver,
            "median_iterations": statistics.median(iters),
            "median_wall_time_s": statistics.median(
                r["wall_time_s"] for r in rows),
            "evals_per_iteration": statistics.median(
                r["evals"] / max(r["iterations"], 1) for r in rows),
            "runs": len(rows),
            "converged": sum(bool(r["converged"]) for r in rows),
        })
    return table


def cmd_gap(args) -> int:
    inst = problem.load(args.problem)
    z = _load_point(args.point, inst)
    gap, cert = diagnostics.smoothed_gap(inst, z, args.xi,
                                         subsolver_tol=args.tol)
    print(json.dumps({"gap": gap, "xi": args.xi,
                      "subsolver_iterations": cert.iterations,
                      "subsolver_residual": cert.residual,
                      "reliable": cert.converged}, indent=2))
    return 0


def cmd_bound(args) -> int:
    inst = problem.load(args.problem)
    if args.slater:
        with open(args.slater) as fh:
            x_tilde = np.asarray(json.load(fh), float)
    else:
        x_tilde = initial_iterate(inst).x
    B_lam, B_v, B = diagnostics.dual_bound(inst, x_tilde)
    print(json.dumps({"B_lambda": B_lam, "B_v": B_v, "B": B}, indent=2))
    return 0


# ---------------------------------------------------------------------------
# Argument plumbing


def _add_run_args(sp):
    sp.add_argument("--eps", type=float, default=1e-7)
    sp.add_argument("--budget", type=int, default=50_000)
    sp.add_argument("--f-star", type=float, default=None)
    sp.add_argument("--nonmonotone", action="store_true", default=None)
    sp.add_argument("--restart", default=None,
                    help="none | fixed:K | adaptive[:xi,q]")
    sp.add_argument("--eta", type=float, default=0.7)
    sp.add_argument("--tau-bar", type=float, default=1.0)
    sp.add_argument("--dual-bound", type=float, default=None)
    sp.add_argument("--stepsize", type=float, default=None, help="EGM only")
    sp.add_argument("--check-every", type=int, default=10)
    sp.add_argument("--config", default=None, help="JSON defaults file")


def build_parser():
    ap = argparse.ArgumentParser(prog="rapdb")
    sub = ap.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", help="generate a problem instance")
    g.add_argument("--family", required=True,
                   choices=["random-qcqp", "kml", "analytic"])
    g.add_argument("--n", type=int, default=50)
    g.add_argument("--m", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--samples", type=int, default=200)
    g.add_argument("--features", type=int, default=20)
    g.add_argument("--data", default=None, help="CSV for the kml family")
    g.add_argument("--name", default="ball", help="analytic instance name")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run one solver on one instance")
    s.add_argument("--problem", required=True)
    s.add_argument("--solver", required=True)
    s.add_argument("--out", default=None, help="trace CSV path")
    s.add_argument("--summary", default=None, help="summary JSON path")
    s.add_argument("--restart-log", default=None)
    _add_run_args(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="seed sweep over solvers")
    b.add_argument("--family", default="random-qcqp",
                   choices=["random-qcqp"])
    b.add_argument("--n", type=int, default=100)
    b.add_argument("--m", type=int, default=5)
    b.add_argument("--seeds", required=True, help="e.g. 0..4 or 0,2,5")
    b.add_argument("--solvers", required=True, help="comma-separated")
    b.add_argument("--summary", default=None)
    _add_run_args(b)
    b.set_defaults(func=cmd_bench)

    gp = sub.add_parser("gap", help="evaluate the smoothed duality gap")
    gp.add_argument("--problem", required=True)
    gp.add_argument("--point", default=None, help="JSON {x, v, lam}")
    gp.add_argument("--xi", type=float, default=0.04)
    gp.add_argument("--tol", type=float, default=1e-9)
    gp.set_defaults(func=cmd_gap)

    bd = sub.add_parser("bound", help="Slater-point dual bound")
    bd.add_argument("--problem", required=True)
    bd.add_argument("--slater", default=None, help="JSON vector file")
    bd.set_defaults(func=cmd_bound)
    return ap


def _merge_config(args):
    """Fill unset run options from a JSON config file (CLI wins)."""
    path = getattr(args, "config", None)
    if not path:
        if getattr(args, "nonmonotone", None) is None:
            args.nonmonotone = False
        return args
    with open(path) as fh:
        cfg = json.load(fh)
    for key, val in cfg.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) is None:
            setattr(args, attr, val)
    if getattr(args, "nonmonotone", None) is None:
        args.nonmonotone = False
    return args


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args = _merge_config(args)
        return args.func(args)
    except (InputError, ConfigurationError, DataError, SlaterViolation,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
