"""Solution-quality metrics: smoothed duality gap, KKT residual,
feasibility/suboptimality measures, Slater-point dual bounds, and the
termination predicate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry, subsolve
from .errors import ConfigurationError, SlaterViolation
from .geometry import (Cone, DualBall, NonnegOrthant, ProductCone,
                       SecondOrderCone, Unbounded, bregman_d, bregman_p,
                       enclosing_radius, project_dual_cone, project_set)
from .problem import (Iterate, ProblemInstance, coupling_value, grad_x_coupling,
                      spectral_norm, _dense)


@dataclass
class Metrics:
    kkt_residual: float
    stationarity: float
    primal_eq: float
    complementarity: float
    infeas: float
    f_value: float
    mean_pos_violation: float
    subopt_abs: Optional[float] = None
    gap_xi: Optional[float] = None
    gap_reliable: bool = True


@dataclass
class TerminationCriteria:
    eps: float = 1e-7
    f_star: Optional[float] = None
    criterion: str = "paper51"      # "paper51" (relative f-gap + mean
                                    # violation) or "conic" (KKT + conic dist)
    eps_kkt: float = 1e-7
    eps_feas: float = 1e-7


# ---------------------------------------------------------------------------
# Feasibility and KKT


def infeasibility(inst: ProblemInstance, x: np.ndarray) -> float:
    """sqrt(||Ax - b||^2 + dist(g(x), -K)^2); the conic distance equals the
    norm of the dual-cone projection of g(x)."""
    eq = inst.eq_residual(x)
    gproj = project_dual_cone(inst.cone, inst.g_value(x)) if inst.m > 0 else np.zeros(0)
    return float(np.sqrt(eq @ eq + gproj @ gproj))


def mean_positive_violation(inst: ProblemInstance, x: np.ndarray) -> float:
    """(1/m) sum_i max(g_i(x), 0) for orthant-type feasibility reporting; for
    other cones falls back to the conic distance averaged once."""
    if inst.m == 0:
        return 0.0
    g = inst.g_value(x)
    if isinstance(inst.cone, NonnegOrthant):
        return float(np.mean(np.maximum(g, 0.0)))
    gproj = project_dual_cone(inst.cone, g)
    return float(np.linalg.norm(gproj)) / inst.m


def _complementarity(cone: Cone, lam: np.ndarray, g: np.ndarray,
                     rounds: int = 100) -> float:
    """dist(0, -g(x) + N_{K*}(lam)); exact for the orthant via
    ||min(lam, -g)||, approximate (alternating projections) for SOC blocks."""
    if isinstance(cone, NonnegOrthant):
        return float(np.linalg.norm(np.minimum(lam, -g)))
    if isinstance(cone, ProductCone):
        total = 0.0
        offset = 0
        for part in cone.parts:
            d = geometry.cone_dim(part)
            total += _complementarity(part, lam[offset:offset + d],
                                      g[offset:offset + d], rounds) ** 2
            offset += d
        return float(np.sqrt(total))
    # second-order cone: N_{K*}(lam) = -K intersect lam-perp (lam != 0),
    # or -K itself at the apex
    if np.linalg.norm(lam) == 0.0:
        return float(np.linalg.norm(project_dual_cone(cone, g)))
    w = g.copy()
    unit = lam / np.linalg.norm(lam)
    for _ in range(rounds):
        w = -cone.project(-w)           # onto -K
        w = w - (unit @ w) * unit       # onto lam-perp
    return float(np.linalg.norm(g - w))


def kkt_residual(inst: ProblemInstance, z: Iterate,
                 f_star: Optional[float] = None) -> Metrics:
    """r(x, v, lam): fixed-point stationarity residual
    ||x - Pi_X(x - grad_x Phi)|| + ||Ax - b|| + conic complementarity."""
    gx = grad_x_coupling(inst, z)
    stat = float(np.linalg.norm(z.x - project_set(inst.primal_set, z.x - gx)))
    eq = float(np.linalg.norm(inst.eq_residual(z.x)))
    if inst.m > 0:
        comp = _complementarity(inst.cone, z.lam, inst.g_value(z.x))
    else:
        comp = 0.0
    fval = inst.f_value(z.x)
    return Metrics(
        kkt_residual=stat + eq + comp,
        stationarity=stat, primal_eq=eq, complementarity=comp,
        infeas=infeasibility(inst, z.x), f_value=fval,
        mean_pos_violation=mean_positive_violation(inst, z.x),
        subopt_abs=None if f_star is None else fval - f_star)


# ---------------------------------------------------------------------------
# Smoothed duality gap


def smoothed_gap(inst: ProblemInstance, z: Iterate, xi: float,
                 dual_ball: DualBall = None, subsolver_tol: float = 1e-9,
                 x_warm: Optional[np.ndarray] = None):
    """Self-centered smoothed gap G_xi(z) = sup_y [Phi(x,y) - 2 xi D_d(y, y_z)]
    - inf_x [Phi(x, y_z) + 2 xi D_p(x, x_z)].

    The dual subproblem has the closed form y_hat = Pi_Yhat(y + (Ax-b, g(x))
    /(2 xi)); the primal one is a strongly convex QP solved to the given
    prox-residual tolerance.  Returns (gap, certificate); the certificate's
    converged flag marks reliability.  Nonnegative up to subsolver slack, and
    exactly zero at saddle points.
    """
    if xi <= 0:
        raise ConfigurationError("xi must be positive")
    if dual_ball is None:
        dual_ball = Unbounded()
    eq, g = inst.eq_residual(z.x), inst.g_value(z.x)
    v_hat = z.v + eq / (2.0 * xi)
    lam_hat = inst.project_dual_cone(z.lam + g / (2.0 * xi))
    v_hat, lam_hat = dual_ball.project(v_hat, lam_hat)
    y_hat = Iterate(z.x, v_hat, lam_hat)
    dual_term = (coupling_value(inst, y_hat)
                 - 2.0 * xi * bregman_d(y_hat.y, z.y))

    # primal subproblem: min over X of Phi(., y) + xi ||. - x||^2
    H = _dense(inst.Q[0]).copy()
    for i in range(inst.m):
        if z.lam[i] != 0.0:
            H = H + z.lam[i] * _dense(inst.Q[i + 1])
    L = spectral_norm(H) + 2.0 * xi

    def value(xc):
        zc = Iterate(xc, z.v, z.lam)
        return coupling_value(inst, zc) + 2.0 * xi * bregman_p(xc, z.x)

    def grad(xc):
        zc = Iterate(xc, z.v, z.lam)
        return grad_x_coupling(inst, zc) + 2.0 * xi * (xc - z.x)

    x0 = z.x if x_warm is None else x_warm
    x_sol, cert = subsolve.solve_strongly_convex(
        value, grad, L, inst.primal_set, x0, tol=subsolver_tol, sigma=2.0 * xi)
    primal_term = value(x_sol)
    return dual_term - primal_term, cert


# ---------------------------------------------------------------------------
# Slater radius and dual bounds


def slater_radius(cone: Cone, g_tilde: np.ndarray) -> float:
    """Interior radius r* = min over unit w in K* of <w, -g_tilde>."""
    g_tilde = np.asarray(g_tilde, dtype=float)
    if isinstance(cone, NonnegOrthant):
        r = float(np.min(-g_tilde)) if cone.dim > 0 else np.inf
    elif isinstance(cone, SecondOrderCone):
        r = float(-(g_tilde[0] + np.linalg.norm(g_tilde[1:])) / np.sqrt(2.0))
    else:
        rs, offset = [], 0
        for part in cone.parts:
            d = geometry.cone_dim(part)
            rs.append(slater_radius(part, g_tilde[offset:offset + d]))
            offset += d
        r = float(min(rs)) if rs else np.inf
    if r <= 0:
        raise SlaterViolation(
            f"point is not strictly feasible (interior radius {r:.3e})")
    return r


def dual_bound(inst: ProblemInstance, x_tilde: np.ndarray,
               probe: Optional[Iterate] = None,
               subsolver_tol: float = 1e-10):
    """Multiplier-norm bounds from a strictly feasible point:
    ||lam*|| <= (f(x_tilde) - q(probe)) / r*, with q the dual function
    evaluated by the subsolver; the equality multiplier is bounded via
    sigma_min(A).  Returns (B_lambda, B_v, B) with B = 1.01 sqrt(Bv^2+Bl^2);
    B is +inf when there are no constraints at all."""
    if inst.m == 0 and inst.p == 0:
        return 0.0, 0.0, np.inf
    if np.linalg.norm(inst.eq_residual(x_tilde)) > 1e-9:
        raise SlaterViolation("candidate point violates the equality constraints")
    if inst.m > 0:
        r_star = slater_radius(inst.cone, inst.g_value(x_tilde))
    else:
        r_star = np.inf
    if probe is None:
        probe = Iterate(x_tilde, np.zeros(inst.p), np.zeros(inst.m))
    radius = enclosing_radius(inst.primal_set)
    if radius is None:
        raise ConfigurationError("dual bound needs a bounded primal set")

    # q(probe) = min over X of Phi(., probe)
    H = _dense(inst.Q[0]).copy()
    for i in range(inst.m):
        if probe.lam[i] != 0.0:
            H = H + probe.lam[i] * _dense(inst.Q[i + 1])
    L = max(spectral_norm(H), 1e-12)

    def value(xc):
        return coupling_value(inst, Iterate(xc, probe.v, probe.lam))

    def grad(xc):
        return grad_x_coupling(inst, Iterate(xc, probe.v, probe.lam))

    x_q, _ = subsolve.solve_strongly_convex(
        value, grad, L, inst.primal_set, x_tilde, tol=subsolver_tol)
    q_val = value(x_q)

    if inst.m > 0:
        B_lam = (inst.f_value(x_tilde) - q_val) / r_star
        B_lam = max(B_lam, 0.0)
    else:
        B_lam = 0.0
    if inst.p > 0:
        grad_f_max = np.linalg.norm(inst.q[0]) + radius * spectral_norm(inst.Q[0])
        C_g = 0.0
        if inst.m > 0:
            qmat = np.column_stack([inst.q[i + 1] for i in range(inst.m)])
            L_g = float(np.sqrt(sum(spectral_norm(M) ** 2 for M in inst.Q[1:])))
            C_g = spectral_norm(qmat) + radius * L_g
        sigma_min = float(np.linalg.svd(np.asarray(inst.A), compute_uv=False)[-1])
        B_v = (grad_f_max + C_g * B_lam) / sigma_min
    else:
        B_v = 0.0
    return B_lam, B_v, 1.01 * float(np.sqrt(B_lam ** 2 + B_v ** 2))


# ---------------------------------------------------------------------------
# Termination


def check_termination(metrics: Metrics, criteria: TerminationCriteria) -> bool:
    if criteria.criterion == "paper51":
        if criteria.f_star is None:
            # no reference optimum: fall back to KKT
            return (metrics.kkt_residual <= criteria.eps_kkt
                    and metrics.infeas <= criteria.eps_feas)
        rel_gap = abs(metrics.f_value - criteria.f_star) / (1.0 + abs(criteria.f_star))
        return max(rel_gap, metrics.mean_pos_violation) <= criteria.eps
    if criteria.criterion == "conic":
        return (metrics.kkt_residual <= criteria.eps_kkt
                and metrics.infeas <= criteria.eps_feas)
    raise ConfigurationError(f"unknown termination criterion {criteria.criterion!r}")
