"""QCQP / nonlinear conic program instances and their coupling function.

The problem is

    minimize  f(x) = 0.5 x'Q0 x + q0'x + r0
    over      x in a simple set X
    s.t.      Ax = b,   g(x) in -K,   g_i(x) = 0.5 x'Qi x + qi'x + ri,

with multipliers y = (v, lam), lam in K*.  The coupling function is
Phi(x, y) = f(x) + v'(Ax - b) + lam'g(x); it is convex in x for lam >= 0
and affine in y.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from . import geometry
from .errors import ConfigurationError, InputError
from .geometry import (Cone, SimpleSet, cone_dim, cone_from_json, cone_to_json,
                       enclosing_radius, set_dim, set_from_json, set_to_json)

_SPARSE_DENSITY = 0.25  # store a matrix as CSR below this nonzero fraction


def _as_operator(M, n):
    """Dense array or CSR, chosen by density; both support @ with vectors."""
    if sp.issparse(M):
        M = M.tocsr()
        return M if M.nnz <= _SPARSE_DENSITY * n * n else M.toarray()
    M = np.asarray(M, dtype=float)
    nnz = np.count_nonzero(M)
    if n > 0 and nnz < _SPARSE_DENSITY * M.size:
        return sp.csr_matrix(M)
    return M


def _dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M)


def spectral_norm(M, iters: int = 200, tol: float = 1e-10) -> float:
    """Power iteration on M'M with 1.01 inflation so the result upper-bounds
    ||M||_2 despite early stopping."""
    M = M if sp.issparse(M) else np.asarray(M, dtype=float)
    rows, cols = M.shape
    if rows == 0 or cols == 0:
        return 0.0
    v = np.cos(np.arange(cols) + 0.5)  # deterministic, not axis-aligned
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(iters):
        w = M.T @ (M @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        est = np.sqrt(nrm)
        if abs(est - prev) <= tol * max(est, 1.0):
            prev = est
            break
        prev = est
    return 1.01 * prev


@dataclass(frozen=True)
class Iterate:
    """Primal-dual point z = (x, v, lam)."""

    x: np.ndarray
    v: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))

    @property
    def y(self):
        return np.concatenate([self.v, self.lam])

    def dual_norm(self) -> float:
        return float(np.sqrt(self.v @ self.v + self.lam @ self.lam))


@dataclass(frozen=True)
class LipschitzConstants:
    L_f: float
    L_g: float
    B_g: float
    C_g: float
    L_xx: float
    L_xy: float
    Lhat_xx: float
    Lhat_yx: float
    dual_bound_used: float  # may be +inf in xy mode
    psi1: float
    psi2: float
    B_g_is_estimate: bool = False
    bar_B_used: float = np.inf


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable QCQP data; Q[0] is the objective, Q[1..m] the constraints."""

    n: int
    m: int
    p: int
    Q: list                     # m+1 operators (dense ndarray or CSR)
    q: list                     # m+1 vectors
    r: np.ndarray               # m+1 scalars
    A: object                   # p x n operator
    b: np.ndarray
    primal_set: SimpleSet
    cone: Cone
    mu: float = 0.0
    dual_set: Optional[SimpleSet] = None  # minimax variant: lam constrained
                                          # to this set instead of K*
    name: str = ""

    def __post_init__(self):
        n, m, p = self.n, self.m, self.p
        if n <= 0 or m < 0 or p < 0:
            raise InputError("need n > 0, m >= 0, p >= 0")
        if len(self.Q) != m + 1 or len(self.q) != m + 1 or len(self.r) != m + 1:
            raise InputError("need m+1 quadratic forms (objective plus m constraints)")
        object.__setattr__(self, "Q", [_as_operator(M, n) for M in self.Q])
        object.__setattr__(self, "q", [np.asarray(v, dtype=float) for v in self.q])
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        object.__setattr__(self, "A", _dense(self.A).astype(float).reshape(p, n))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(p))
        for i, (M, v) in enumerate(zip(self.Q, self.q)):
            if M.shape != (n, n) or v.shape != (n,):
                raise InputError(f"quadratic form {i} has wrong dimensions")
            D = _dense(M)
            if np.max(np.abs(D - D.T)) > 1e-12 * max(1.0, np.max(np.abs(D))):
                raise InputError(f"Q[{i}] is not symmetric")
            lam_min = float(np.linalg.eigvalsh(D)[0]) if n > 0 else 0.0
            if lam_min < -1e-10:
                raise InputError(f"Q[{i}] has negative eigenvalue {lam_min:.3e}")
        if set_dim(self.primal_set) != n:
            raise InputError("primal set dimension mismatch")
        if cone_dim(self.cone) != m:
            raise InputError("cone dimension mismatch")
        if p > 0 and np.linalg.matrix_rank(self.A) < p:
            raise InputError("equality matrix A is not full row rank")
        if self.mu < 0:
            raise InputError("strong convexity modulus must be nonnegative")
        if self.mu > 0:
            lam0 = float(np.linalg.eigvalsh(_dense(self.Q[0]))[0])
            if self.mu > lam0 + 1e-10:
                raise InputError(
                    f"declared mu={self.mu} exceeds lambda_min(Q0)={lam0:.3e}")
        if self.dual_set is not None and set_dim(self.dual_set) != m:
            raise InputError("dual set dimension mismatch")

    # -- evaluations -------------------------------------------------------

    def f_value(self, x: np.ndarray) -> float:
        return 0.5 * float(x @ (self.Q[0] @ x)) + float(self.q[0] @ x) + self.r[0]

    def grad_f(self, x: np.ndarray) -> np.ndarray:
        return self.Q[0] @ x + self.q[0]

    def g_value(self, x: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        return np.array([0.5 * float(x @ (self.Q[i + 1] @ x))
                         + float(self.q[i + 1] @ x) + self.r[i + 1]
                         for i in range(self.m)])

    def eq_residual(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x - self.b if self.p > 0 else np.zeros(0)

    def project_dual_cone(self, lam: np.ndarray) -> np.ndarray:
        """lam-block feasibility map: K* normally, dual_set in minimax mode."""
        if self.dual_set is not None:
            return geometry.project_set(self.dual_set, lam)
        return geometry.project_dual_cone(self.cone, lam)


def _check_point(inst: ProblemInstance, z: Iterate):
    if z.x.shape != (inst.n,) or z.v.shape != (inst.p,) or z.lam.shape != (inst.m,):
        raise InputError(
            f"iterate dims {(z.x.shape, z.v.shape, z.lam.shape)} do not match "
            f"instance (n={inst.n}, p={inst.p}, m={inst.m})")


def coupling_value(inst: ProblemInstance, z: Iterate) -> float:
    """Phi(x, y) = f(x) + v'(Ax - b) + lam'g(x)."""
    _check_point(inst, z)
    val = inst.f_value(z.x)
    if inst.p > 0:
        val += float(z.v @ inst.eq_residual(z.x))
    if inst.m > 0:
        val += float(z.lam @ inst.g_value(z.x))
    return val


def grad_x_coupling(inst: ProblemInstance, z: Iterate) -> np.ndarray:
    """(Q0 + sum_i lam_i Qi) x + q0 + sum_i lam_i qi + A'v."""
    _check_point(inst, z)
    g = inst.Q[0] @ z.x + inst.q[0]
    for i in range(inst.m):
        li = z.lam[i]
        if li != 0.0:
            g = g + li * (inst.Q[i + 1] @ z.x + inst.q[i + 1])
    if inst.p > 0:
        g = g + inst.A.T @ z.v
    return g


def grad_y_coupling(inst: ProblemInstance, z: Iterate):
    """(Ax - b, g(x)); exact since Phi is affine in y."""
    _check_point(inst, z)
    return inst.eq_residual(z.x), inst.g_value(z.x)


def _psi1(L_xy, L_xx, c_alpha, c_beta, delta, gamma0) -> float:
    cands = []
    if L_xy > 0:
        cands.append(np.sqrt(c_alpha * (1.0 - delta)) / (L_xy * np.sqrt(gamma0)))
    if L_xx > 0 and c_beta > 0:
        head = 1.0 - (c_alpha + c_beta + delta)
        if head > 0:
            cands.append(np.sqrt(c_beta * head) / L_xx)
    return float(min(cands)) if cands else np.inf


def _psi2(Lhat_yx, Lhat_xx, c_alpha, delta, gamma0) -> float:
    if Lhat_yx > 0 and Lhat_xx > 0:
        ratio = Lhat_yx / Lhat_xx
        zeta = -1.0 + np.sqrt(1.0 + 4.0 * (1.0 - delta) * gamma0 / c_alpha * ratio ** 2)
        return float(c_alpha / (2.0 * gamma0) * (Lhat_xx / Lhat_yx ** 2) * zeta)
    if Lhat_yx > 0:  # Lhat_xx = 0: pure bilinear coupling limit
        return float(np.sqrt((1.0 - delta) / gamma0) / Lhat_yx * np.sqrt(c_alpha))
    return np.inf


def compute_constants(inst: ProblemInstance, mode: str,
                      dual_bound: Optional[float] = None,
                      bar_B: Optional[float] = None,
                      c_alpha: Optional[float] = None,
                      c_beta: Optional[float] = None,
                      delta: Optional[float] = None,
                      gamma0: float = 1.0) -> LipschitzConstants:
    """Lipschitz constants of the coupling gradients plus the stepsize
    floors psi1 (xy mode) and psi2 (yx mode).

    yx mode needs a finite dual bound B; xy mode instead uses a dual-norm
    estimate bar_B (default 10*(1+||q0||), flagged as an estimate).
    """
    if mode not in ("xy", "yx"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    if c_alpha is None:
        c_alpha = 0.25 if mode == "xy" else 0.4
    if c_beta is None:
        c_beta = 0.3 if mode == "xy" else 0.0
    if delta is None:
        delta = 0.4 if mode == "xy" else 0.5

    L_f = spectral_norm(inst.Q[0])
    L_g = float(np.sqrt(sum(spectral_norm(M) ** 2 for M in inst.Q[1:])))
    norm_A = spectral_norm(inst.A) if inst.p > 0 else 0.0

    estimate = False
    if inst.m > 0:
        radius = enclosing_radius(inst.primal_set)
        qmat = np.column_stack([inst.q[i + 1] for i in range(inst.m)])
        norm_qmat = spectral_norm(qmat)
        if radius is not None:
            B_g = norm_qmat + radius * L_g
        else:
            # unbounded X: sample-based estimate, flagged
            rng = np.random.default_rng(0)
            best = 0.0
            for _ in range(64):
                x = rng.standard_normal(inst.n)
                J = np.column_stack([inst.Q[i + 1] @ x + inst.q[i + 1]
                                     for i in range(inst.m)])
                best = max(best, spectral_norm(J))
            B_g = 1.5 * best
            estimate = True
    else:
        B_g = 0.0
    C_g = B_g  # computable surrogate; C_g <= B_g always

    if mode == "yx":
        if dual_bound is None or not np.isfinite(dual_bound):
            raise ConfigurationError("yx mode requires a finite dual bound B")
        B = float(dual_bound)
    else:
        B = np.inf if dual_bound is None else float(dual_bound)
    if bar_B is None:
        bar_B = B if np.isfinite(B) else 10.0 * (1.0 + np.linalg.norm(inst.q[0]))
        if not np.isfinite(B):
            estimate = True

    L_xx = L_f + bar_B * L_g
    L_xy = norm_A + B_g
    Lhat_xx = L_f + (B if np.isfinite(B) else bar_B) * L_g
    Lhat_yx = norm_A + C_g

    return LipschitzConstants(
        L_f=L_f, L_g=L_g, B_g=B_g, C_g=C_g,
        L_xx=L_xx, L_xy=L_xy, Lhat_xx=Lhat_xx, Lhat_yx=Lhat_yx,
        dual_bound_used=B,
        psi1=_psi1(L_xy, L_xx, c_alpha, c_beta, delta, gamma0),
        psi2=_psi2(Lhat_yx, Lhat_xx, c_alpha, delta, gamma0),
        B_g_is_estimate=estimate, bar_B_used=float(bar_B))


# ---------------------------------------------------------------------------
# JSON schema


def _matrix_to_json(M):
    if sp.issparse(M):
        M = M.tocsr()
        return {"format": "csr", "shape": list(M.shape),
                "indptr": M.indptr.tolist(), "indices": M.indices.tolist(),
                "data": M.data.tolist()}
    return np.asarray(M).tolist()


def _matrix_from_json(obj, shape):
    if isinstance(obj, dict):
        if obj.get("format") != "csr":
            raise InputError(f"unknown matrix format {obj.get('format')!r}")
        return sp.csr_matrix((obj["data"], obj["indices"], obj["indptr"]),
                             shape=tuple(obj.get("shape", shape)))
    return np.asarray(obj, dtype=float).reshape(shape)


def to_json_dict(inst: ProblemInstance) -> dict:
    out = {
        "n": inst.n, "m": inst.m, "p": inst.p,
        "Q": [_matrix_to_json(M) for M in inst.Q],
        "q": [v.tolist() for v in inst.q],
        "r": inst.r.tolist(),
        "A": np.asarray(inst.A).tolist(),
        "b": inst.b.tolist(),
        "primal_set": set_to_json(inst.primal_set),
        "cone": cone_to_json(inst.cone),
        "mu": inst.mu,
    }
    if inst.dual_set is not None:
        out["dual_set"] = set_to_json(inst.dual_set)
    if inst.name:
        out["name"] = inst.name
    return out


def from_json_dict(d: dict) -> ProblemInstance:
    try:
        n, m, p = int(d["n"]), int(d["m"]), int(d["p"])
        return ProblemInstance(
            n=n, m=m, p=p,
            Q=[_matrix_from_json(M, (n, n)) for M in d["Q"]],
            q=[np.asarray(v, dtype=float) for v in d["q"]],
            r=np.asarray(d["r"], dtype=float),
            A=np.asarray(d["A"], dtype=float).reshape(p, n),
            b=np.asarray(d["b"], dtype=float),
            primal_set=set_from_json(d["primal_set"]),
            cone=cone_from_json(d["cone"]),
            mu=float(d.get("mu", 0.0)),
            dual_set=set_from_json(d["dual_set"]) if "dual_set" in d else None,
            name=str(d.get("name", "")))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed problem description: {exc}") from exc


def save(inst: ProblemInstance, path: str):
    with open(path, "w") as fh:
        json.dump(to_json_dict(inst), fh)


def load(path: str) -> ProblemInstance:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
