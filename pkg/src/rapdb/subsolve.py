"""Projected accelerated gradient solver for smooth convex subproblems.

Used by the smoothed-duality-gap x-subproblem and by dual-function
evaluation.  Nesterov acceleration with function-value restart; the
returned certificate carries the prox-gradient residual
||x - Pi(x - grad(x)/L)||, which vanishes exactly at the constrained
minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import SimpleSet, project_set


@dataclass
class Certificate:
    iterations: int
    residual: float
    converged: bool


def solve_strongly_convex(value, grad, L: float, feasible_set: SimpleSet,
                          x_init: np.ndarray, tol: float = 1e-9,
                          sigma: float = 0.0, max_iter: int = 50_000):
    """Minimize a smooth convex function over a simple set.

    value/grad: callables; L: smoothness (stepsize is 1/L); sigma: strong
    convexity modulus, informational only (sigma = 0 is allowed — the
    certificate is residual-based, not gap-based).  Returns (x, Certificate).
    """
    if L <= 0 or tol <= 0 or sigma < 0 or L < sigma:
        raise ConfigurationError("need L >= sigma >= 0, L > 0, tol > 0")
    step = 1.0 / L
    x = project_set(feasible_set, np.asarray(x_init, dtype=float))
    yk = x.copy()
    t = 1.0
    fx = value(x)
    residual = np.inf
    for it in range(1, max_iter + 1):
        x_new = project_set(feasible_set, yk - step * grad(yk))
        f_new = value(x_new)
        if f_new > fx + 1e-12 * (1.0 + abs(fx)):
            # function-value restart: drop momentum
            x_new = project_set(feasible_set, x - step * grad(x))
            f_new = value(x_new)
            t = 1.0
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        yk = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, fx, t = x_new, f_new, t_new
        if it % 10 == 0 or it == max_iter:
            residual = float(np.linalg.norm(
                x - project_set(feasible_set, x - step * grad(x))))
            if residual <= tol:
                return x, Certificate(it, residual, True)
    residual = float(np.linalg.norm(
        x - project_set(feasible_set, x - step * grad(x))))
    return x, Certificate(max_iter, residual, residual <= tol)


def solve_quadratic(Qop, qvec, feasible_set: SimpleSet, x_init,
                    tol: float = 1e-9, L: float = None, sigma: float = 0.0,
                    max_iter: int = 50_000):
    """Convenience wrapper for h(x) = 0.5 x'Qx + q'x with Q PSD."""
    if L is None:
        from .problem import spectral_norm
        L = max(spectral_norm(Qop), 1e-12)

    def value(x):
        return 0.5 * float(x @ (Qop @ x)) + float(qvec @ x)

    def grad(x):
        return Qop @ x + qvec

    return solve_strongly_convex(value, grad, L, feasible_set, x_init,
                                 tol=tol, sigma=sigma, max_iter=max_iter)
