"""Accelerated primal-dual iteration with backtracking stepsize search.

Both update orders are provided: "xy" updates the primal block first with a
gradient-extrapolation momentum on grad_x Phi, "yx" updates the dual block
first with momentum on grad_y Phi (and optionally confines the dual to a
norm ball).  Each iteration runs an inner search: trial stepsizes
(tau, sigma = gamma*tau) are shrunk by eta until the mode's test function
certifies the step, and accepted steps update the acceleration state

    gamma_{k+1} = gamma_k (1 + mu tau_k),
    tau_{k+1}   = tau_k sqrt((gamma_k/gamma_{k+1}) (1 + c_nm tau_k/tau_{k-1})),

where c_nm = 1 enables the non-monotone search that lets tau grow between
iterations (ratio capped by the golden ratio).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .errors import ConfigurationError, NonConvergence
from .geometry import (DualBall, Unbounded, bregman_d, bregman_p, project_set,
                       validate_dual_ball)
from .problem import (Iterate, ProblemInstance, coupling_value,
                      grad_x_coupling, grad_y_coupling)

GOLDEN_RATIO = 0.5 * (1.0 + np.sqrt(5.0))


@dataclass
class SolverConfig:
    mode: str = "yx"                      # "xy" or "yx"
    c_alpha: Optional[float] = None       # default 0.25 (xy) / 0.4 (yx)
    c_beta: Optional[float] = None        # default 0.3 (xy) / 0 (yx)
    delta: Optional[float] = None         # default 0.4 (xy) / 0.5 (yx)
    eta: float = 0.7
    tau_bar: float = 1.0
    gamma0: float = 1.0
    nonmonotone: bool = False
    dual_ball: DualBall = field(default_factory=Unbounded)
    max_backtracks: int = 200

    def resolved(self) -> "SolverConfig":
        if self.mode not in ("xy", "yx"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        defaults = {"xy": (0.25, 0.3, 0.4), "yx": (0.4, 0.0, 0.5)}[self.mode]
        out = replace(
            self,
            c_alpha=defaults[0] if self.c_alpha is None else self.c_alpha,
            c_beta=defaults[1] if self.c_beta is None else self.c_beta,
            delta=defaults[2] if self.delta is None else self.delta)
        if not (0.0 < out.eta < 1.0):
            raise ConfigurationError("eta must lie in (0, 1)")
        if out.tau_bar <= 0 or out.gamma0 <= 0:
            raise ConfigurationError("tau_bar and gamma0 must be positive")
        if out.c_alpha <= 0 or out.c_beta < 0 or not (0.0 < out.delta < 1.0):
            raise ConfigurationError("need c_alpha > 0, c_beta >= 0, delta in (0,1)")
        if out.mode == "xy" and out.c_beta <= 0:
            raise ConfigurationError("xy mode requires c_beta > 0")
        return out


@dataclass
class TraceRecord:
    iter: int
    tau_start: float            # trial tau at inner-loop entry (tau_k^o)
    tau: float                  # accepted tau_k
    sigma: float
    gamma: float
    evals_iter: int             # test evaluations this iteration
    evals_total: int            # cumulative
    kkt: Optional[float] = None
    infeas: Optional[float] = None
    subopt: Optional[float] = None
    gap_xi: Optional[float] = None
    restart_flag: int = 0


class ApdbEngine:
    """One solver run: owns the stepsize state, gradient caches, and the
    ergodic averages.  step() performs exactly one accepted iteration."""

    def __init__(self, inst: ProblemInstance, config: SolverConfig,
                 z_init: Iterate, keep_iterates: bool = False):
        self.inst = inst
        self.config = cfg = config.resolved()
        validate_dual_ball(inst.cone, cfg.dual_ball)
        self.mu = inst.mu
        self.c_nm = 1.0 if cfg.nonmonotone else 0.0
        self.keep_iterates = keep_iterates
        self.evals_total = 0
        self.iters = 0
        self.trace: List[TraceRecord] = []
        self.iterates: List[Iterate] = []
        self.reinit(z_init)

    # -- state management --------------------------------------------------

    def reinit(self, z: Iterate, warm_tau: bool = False):
        """(Re)start from z; gamma, stepsize state, caches, and averages are
        reset (tau survives when warm_tau)."""
        cfg = self.config
        x = project_set(self.inst.primal_set, z.x)
        lam = self.inst.project_dual_cone(z.lam)
        v, lam = cfg.dual_ball.project(np.asarray(z.v, dtype=float), lam)
        self.z = Iterate(x, v, lam)
        self.z_prev = self.z
        tau0 = self.tau_cand if warm_tau and hasattr(self, "tau_cand") else cfg.tau_bar
        self.tau_cand = tau0          # tau_k^o for the next iteration
        self.tau_prev = tau0          # tau_{k-1}
        self.gamma = cfg.gamma0
        self.sigma_prev = cfg.gamma0 * tau0
        if cfg.mode == "xy":
            self.alpha = cfg.c_alpha / tau0
            self.beta = cfg.c_beta / tau0
        else:
            self.alpha = cfg.c_alpha / self.sigma_prev
            self.beta = 0.0
        self._refresh_caches()
        # ergodic average accumulators; sigma0 pinned at first acceptance
        self.sigma0 = None
        self.x_cum = np.zeros(self.inst.n)
        self.y_cum = np.zeros(self.inst.p + self.inst.m)
        self.T = 0.0

    def _refresh_caches(self):
        if self.config.mode == "xy":
            self.gx_cur = grad_x_coupling(self.inst, self.z)
            self.gx_prev = self.gx_cur.copy()
        else:
            ve, ge = grad_y_coupling(self.inst, self.z)
            self.gy_cur = np.concatenate([ve, ge])
            self.gy_prev = self.gy_cur.copy()

    # -- test functions ----------------------------------------------------

    def _test_xy(self, z_new, gx_new_yk, gx_new, tau, sigma, theta,
                 alpha_next, beta_next):
        """Four-term certificate for the primal-first order."""
        D_p = bregman_p(z_new.x, self.z.x)
        D_d = bregman_d(z_new.y, self.z.y)
        E = (np.linalg.norm(gx_new - gx_new_yk) ** 2 / (2.0 * alpha_next)
             - D_d / sigma
             + np.linalg.norm(gx_new_yk - self.gx_cur) ** 2 / (2.0 * beta_next)
             - (1.0 / tau - theta * (self.alpha + self.beta)) * D_p)
        return E, D_p, D_d

    def _test_yx(self, z_new, gy_new, tau, sigma, theta, alpha_next):
        """Linearization-error certificate for the dual-first order."""
        D_p = bregman_p(z_new.x, self.z.x)
        D_d = bregman_d(z_new.y, self.z.y)
        z_mix = Iterate(self.z.x, z_new.v, z_new.lam)
        gx_at_k = grad_x_coupling(self.inst, z_mix)
        lin_err = (coupling_value(self.inst, z_new)
                   - coupling_value(self.inst, z_mix)
                   - float(gx_at_k @ (z_new.x - self.z.x)))
        E = (lin_err - D_p / tau
             + np.linalg.norm(gy_new - self.gy_cur) ** 2 / (2.0 * alpha_next)
             - (1.0 / sigma - theta * self.alpha) * D_d)
        return E, D_p, D_d

    # -- candidate steps ---------------------------------------------------

    def _candidate_xy(self, tau, sigma):
        cfg, inst = self.config, self.inst
        theta = self.sigma_prev / sigma
        s = (1.0 + theta) * self.gx_cur - theta * self.gx_prev
        x_new = project_set(inst.primal_set, self.z.x - tau * s)
        eq_new, g_new = grad_y_coupling(inst, Iterate(x_new, self.z.v, self.z.lam))
        v_new = self.z.v + sigma * eq_new
        lam_new = inst.project_dual_cone(self.z.lam + sigma * g_new)
        v_new, lam_new = cfg.dual_ball.project(v_new, lam_new)
        z_new = Iterate(x_new, v_new, lam_new)
        gx_new_yk = grad_x_coupling(inst, Iterate(x_new, self.z.v, self.z.lam))
        gx_new = grad_x_coupling(inst, z_new)
        return z_new, gx_new_yk, gx_new, theta

    def _candidate_yx(self, tau, sigma):
        cfg, inst = self.config, self.inst
        theta = self.sigma_prev / sigma
        s = (1.0 + theta) * self.gy_cur - theta * self.gy_prev
        y_trial = self.z.y + sigma * s
        v_new = y_trial[:inst.p]
        lam_new = inst.project_dual_cone(y_trial[inst.p:])
        v_new, lam_new = cfg.dual_ball.project(v_new, lam_new)
        gx_mixed = grad_x_coupling(inst, Iterate(self.z.x, v_new, lam_new))
        x_new = project_set(inst.primal_set, self.z.x - tau * gx_mixed)
        z_new = Iterate(x_new, v_new, lam_new)
        eq_new, g_new = grad_y_coupling(inst, z_new)
        gy_new = np.concatenate([eq_new, g_new])
        return z_new, gy_new, theta

    # -- one accepted iteration --------------------------------------------

    def step(self) -> TraceRecord:
        cfg = self.config
        tau = tau_start = self.tau_cand
        evals = 0
        # rounding-level slack keeps the test meaningful once the iterate is
        # numerically stationary (the exact test compares pure noise with 0)
        slack = 1e-13 * (1.0 + abs(coupling_value(self.inst, self.z)))
        for _ in range(cfg.max_backtracks + 1):
            sigma = self.gamma * tau
            alpha_next = (cfg.c_alpha / tau if cfg.mode == "xy"
                          else cfg.c_alpha / sigma)
            beta_next = cfg.gamma0 * cfg.c_beta / sigma if cfg.mode == "xy" else 0.0
            if cfg.mode == "xy":
                z_new, gx_new_yk, gx_new, theta = self._candidate_xy(tau, sigma)
                E, D_p, D_d = self._test_xy(z_new, gx_new_yk, gx_new, tau, sigma,
                                            theta, alpha_next, beta_next)
            else:
                z_new, gy_new, theta = self._candidate_yx(tau, sigma)
                E, D_p, D_d = self._test_yx(z_new, gy_new, tau, sigma, theta,
                                            alpha_next)
            evals += 1
            if E <= -(cfg.delta / tau) * D_p - (cfg.delta / sigma) * D_d + slack:
                break
            tau *= cfg.eta
        else:
            raise NonConvergence(
                f"backtracking failed after {cfg.max_backtracks} shrinkages "
                f"(tau={tau:.3e}); check data validity / Lipschitz regime",
                state={"tau": tau, "gamma": self.gamma, "iter": self.iters})

        # acceptance: roll the stepsize recursion and caches
        gamma_next = self.gamma * (1.0 + self.mu * tau)
        tau_next = tau * np.sqrt((self.gamma / gamma_next)
                                 * (1.0 + self.c_nm * tau / self.tau_prev))
        if cfg.mode == "xy":
            self.gx_prev = self.gx_cur
            self.gx_cur = gx_new
        else:
            self.gy_prev = self.gy_cur
            self.gy_cur = gy_new
        self.z_prev, self.z = self.z, z_new
        self.alpha, self.beta = alpha_next, beta_next
        self.tau_prev, self.tau_cand = tau, tau_next
        self.sigma_prev = sigma
        self.gamma = gamma_next

        if self.sigma0 is None:
            self.sigma0 = sigma
        t_k = sigma / self.sigma0
        self.x_cum += t_k * z_new.x
        self.y_cum += t_k * z_new.y
        self.T += t_k

        self.iters += 1
        self.evals_total += evals
        rec = TraceRecord(iter=self.iters, tau_start=tau_start, tau=tau,
                          sigma=sigma, gamma=self.gamma, evals_iter=evals,
                          evals_total=self.evals_total)
        self.trace.append(rec)
        if self.keep_iterates:
            self.iterates.append(z_new)
        return rec

    # -- results -----------------------------------------------------------

    @property
    def last(self) -> Iterate:
        return self.z

    def average(self) -> Iterate:
        if self.T <= 0:
            return self.z
        x = self.x_cum / self.T
        y = self.y_cum / self.T
        return Iterate(x, y[:self.inst.p], y[self.inst.p:])


def initial_iterate(inst: ProblemInstance,
                    dual_ball: DualBall = None) -> Iterate:
    """Feasible default start: projection of the origin."""
    x = project_set(inst.primal_set, np.zeros(inst.n))
    lam = inst.project_dual_cone(np.zeros(inst.m))
    v = np.zeros(inst.p)
    if dual_ball is not None:
        v, lam = dual_ball.project(v, lam)
    return Iterate(x, v, lam)


def run(inst: ProblemInstance, config: SolverConfig, z_init: Iterate, K: int,
        keep_iterates: bool = False):
    """K accepted iterations; returns (average, last, trace, engine)."""
    if K < 1:
        raise ConfigurationError("need K >= 1")
    engine = ApdbEngine(inst, config, z_init, keep_iterates=keep_iterates)
    for _ in range(K):
        engine.step()
    return engine.average(), engine.last, engine.trace, engine
