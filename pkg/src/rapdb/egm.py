"""Extragradient baseline with a single constant stepsize for both blocks.

z~ = Pi(z - s F(z)), z+ = Pi(z - s F(z~)) with F = (grad_x Phi, -grad_y Phi)
and Pi the product projection onto X times the (ball-capped) dual domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ConfigurationError
from .geometry import DualBall, Unbounded, project_set
from .problem import Iterate, ProblemInstance, grad_x_coupling, grad_y_coupling

DEFAULT_STEP_GRID = tuple(np.logspace(-3, 0, 7))


@dataclass
class EgmResult:
    last: Iterate
    average: Iterate
    iterations: int
    diverged: bool
    trace: List[dict]


def _project(inst: ProblemInstance, dual_ball: DualBall, x, v, lam) -> Iterate:
    x = project_set(inst.primal_set, x)
    lam = inst.project_dual_cone(lam)
    v, lam = dual_ball.project(v, lam)
    return Iterate(x, v, lam)


def run_egm(inst: ProblemInstance, stepsize: float, z_init: Iterate, K: int,
            dual_ball: DualBall = None, trace_every: int = 0) -> EgmResult:
    if stepsize < 0:
        raise ConfigurationError("stepsize must be nonnegative")
    if K < 1:
        raise ConfigurationError("need K >= 1")
    if dual_ball is None:
        dual_ball = Unbounded()
    s = stepsize
    z = _project(inst, dual_ball, z_init.x, z_init.v, z_init.lam)
    z0_norm = np.sqrt(z.x @ z.x + z.v @ z.v + z.lam @ z.lam)
    x_cum = np.zeros(inst.n)
    v_cum = np.zeros(inst.p)
    lam_cum = np.zeros(inst.m)
    trace: List[dict] = []
    diverged = False
    it = 0
    for it in range(1, K + 1):
        gx = grad_x_coupling(inst, z)
        eq, g = grad_y_coupling(inst, z)
        z_half = _project(inst, dual_ball,
                          z.x - s * gx, z.v + s * eq, z.lam + s * g)
        gx_h = grad_x_coupling(inst, z_half)
        eq_h, g_h = grad_y_coupling(inst, z_half)
        z = _project(inst, dual_ball,
                     z.x - s * gx_h, z.v + s * eq_h, z.lam + s * g_h)
        x_cum += z.x
        v_cum += z.v
        lam_cum += z.lam
        znorm = np.sqrt(z.x @ z.x + z.v @ z.v + z.lam @ z.lam)
        if znorm > 1e8 * (1.0 + z0_norm):
            diverged = True
            break
        if trace_every and it % trace_every == 0:
            trace.append({"iter": it, "norm": float(znorm)})
    avg = Iterate(x_cum / it, v_cum / it, lam_cum / it)
    return EgmResult(last=z, average=avg, iterations=it,
                     diverged=diverged, trace=trace)


def tune_egm(inst: ProblemInstance, z_init: Iterate, K: int,
             score, grid=DEFAULT_STEP_GRID,
             dual_ball: DualBall = None):
    """Pick the grid stepsize whose last iterate scores best (lower is
    better); returns (best_stepsize, best_result)."""
    best = None
    for s in grid:
        res = run_egm(inst, float(s), z_init, K, dual_ball=dual_ball)
        if res.diverged:
            continue
        val = score(res.last)
        if best is None or val < best[2]:
            best = (float(s), res, val)
    if best is None:
        raise ConfigurationError("every grid stepsize diverged")
    return best[0], best[1]
