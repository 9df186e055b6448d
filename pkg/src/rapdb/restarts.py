"""Restart envelopes around the accelerated primal-dual engine.

Fixed-period restarts reinitialize the stepsize state every K-hat accepted
iterations; adaptive restarts trigger whenever the self-centered smoothed
duality gap has contracted by the factor q relative to the last restart
point's gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from . import diagnostics
from .engine import ApdbEngine, SolverConfig, TraceRecord, initial_iterate
from .errors import ConfigurationError
from .problem import Iterate, ProblemInstance


@dataclass(frozen=True)
class NoRestart:
    pass


@dataclass(frozen=True)
class FixedRestart:
    period: int
    point: str = "last"          # "last" or "average"

    def __post_init__(self):
        if self.period < 1:
            raise ConfigurationError("restart period must be >= 1")
        if self.point not in ("last", "average"):
            raise ConfigurationError("restart point must be 'last' or 'average'")


@dataclass(frozen=True)
class AdaptiveRestart:
    xi: float = 0.04
    q: float = 0.5
    warmup: int = 50
    check_period: int = 200
    point: str = "last"

    def __post_init__(self):
        if self.xi <= 0 or not (0.0 < self.q < 1.0):
            raise ConfigurationError("need xi > 0 and q in (0, 1)")
        if self.warmup < 1 or self.check_period < 1:
            raise ConfigurationError("warmup and check_period must be >= 1")
        if self.point not in ("last", "average"):
            raise ConfigurationError("restart point must be 'last' or 'average'")


RestartPolicy = Union[NoRestart, FixedRestart, AdaptiveRestart]


@dataclass
class RestartEvent:
    outer: int                   # outer (restart) index t
    iteration: int               # accepted-iteration count at the event
    trigger: str                 # "fixed" or "adaptive"
    gap_new: Optional[float] = None
    gap_ref: Optional[float] = None
    point: Optional[Iterate] = None


@dataclass
class RunResult:
    solution: Iterate
    average: Iterate
    trace: List[TraceRecord]
    restart_log: List[RestartEvent]
    iterations: int
    evals: int
    converged: bool
    status: str
    metrics: Optional[diagnostics.Metrics] = None


def run_restarted(inst: ProblemInstance, config: SolverConfig,
                  policy: RestartPolicy = None, z_init: Optional[Iterate] = None,
                  budget: int = 50_000,
                  criteria: Optional[diagnostics.TerminationCriteria] = None,
                  metrics_every: int = 10, warm_tau: bool = False,
                  record_restart_points: bool = False) -> RunResult:
    """Drive the engine for up to `budget` accepted iterations under the
    given restart policy, stopping early when the termination criteria fire.
    """
    if budget < 1:
        raise ConfigurationError("budget must be >= 1")
    if policy is None:
        policy = NoRestart()
    config = config.resolved()
    if z_init is None:
        z_init = initial_iterate(inst, config.dual_ball)
    engine = ApdbEngine(inst, config, z_init)
    restart_log: List[RestartEvent] = []
    outer = 0
    inner = 0                    # accepted iterations since last restart
    gap_ref = None
    x_warm = None
    converged = False
    status = "budget"
    metrics = None

    def candidate(point_kind: str) -> Iterate:
        return engine.last if point_kind == "last" else engine.average()

    for total in range(1, budget + 1):
        rec = engine.step()
        inner += 1

        if criteria is not None and (total % metrics_every == 0 or total == budget):
            metrics = diagnostics.kkt_residual(inst, engine.last,
                                               f_star=criteria.f_star)
            rec.kkt = metrics.kkt_residual
            rec.infeas = metrics.infeas
            rec.subopt = metrics.subopt_abs
            if diagnostics.check_termination(metrics, criteria):
                converged = True
                status = "converged"
                break

        if isinstance(policy, FixedRestart):
            if inner >= policy.period and total < budget:
                z_r = candidate(policy.point)
                engine.reinit(z_r, warm_tau=warm_tau)
                outer += 1
                inner = 0
                rec.restart_flag = 1
                restart_log.append(RestartEvent(
                    outer=outer, iteration=total, trigger="fixed",
                    point=z_r if record_restart_points else None))
        elif isinstance(policy, AdaptiveRestart):
            due_warmup = gap_ref is None and total >= policy.warmup
            due_check = (gap_ref is not None
                         and inner >= policy.check_period
                         and inner % policy.check_period == 0)
            if (due_warmup or due_check) and total < budget:
                z_c = candidate(policy.point)
                tol = 1e-9 if gap_ref is None else min(
                    1e-9, 0.01 * policy.xi * max(gap_ref, 0.0) + 1e-15)
                gap_new, cert = diagnostics.smoothed_gap(
                    inst, z_c, policy.xi, dual_ball=config.dual_ball,
                    subsolver_tol=tol, x_warm=x_warm)
                x_warm = z_c.x
                rec.gap_xi = gap_new
                if gap_ref is None:
                    gap_ref = gap_new
                elif gap_new <= policy.q * gap_ref:
                    engine.reinit(z_c, warm_tau=warm_tau)
                    outer += 1
                    inner = 0
                    rec.restart_flag = 1
                    restart_log.append(RestartEvent(
                        outer=outer, iteration=total, trigger="adaptive",
                        gap_new=gap_new, gap_ref=gap_ref,
                        point=z_c if record_restart_points else None))
                    gap_ref = gap_new

    if metrics is None:
        f_star = criteria.f_star if criteria is not None else None
        metrics = diagnostics.kkt_residual(inst, engine.last, f_star=f_star)
    return RunResult(
        solution=engine.last, average=engine.average(), trace=engine.trace,
        restart_log=restart_log, iterations=engine.iters,
        evals=engine.evals_total, converged=converged, status=status,
        metrics=metrics)
