"""Seeded instance generators: random QCQPs, kernel-matrix-learning minimax
instances, and analytic instances with hand-verified solutions.

All randomness flows through the named counter generator in rapdb.rng, so
equal (parameters, seed) reproduce byte-identical instances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DataError, InputError
from .geometry import Box, NonnegOrthant, NonnegWithLinearEq, Simplex
from .problem import Iterate, ProblemInstance
from .rng import CounterRng


# ---------------------------------------------------------------------------
# Random QCQP family


def _orthonormalize(G: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt on the columns, with one reorthogonalization
    pass for numerical stability."""
    n = G.shape[0]
    Q = np.array(G, dtype=float, copy=True)
    for j in range(n):
        for _ in range(2):
            for i in range(j):
                Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
        nrm = np.linalg.norm(Q[:, j])
        if nrm < 1e-12:
            raise DataError("degenerate Gaussian draw during orthonormalization")
        Q[:, j] /= nrm
    return Q


def random_qcqp(n: int, m: int, seed: int) -> ProblemInstance:
    """Convex QCQP with m inequality constraints: each Q_i = L' S L with L an
    orthonormalized Gaussian matrix and S diagonal uniform on [0, 100] with
    its smallest entry zeroed (so mu = 0); q_i standard normal; r_i drawn so
    that the origin is strictly feasible; X = [-10, 10]^n; no equalities."""
    if n < 2 or m < 1:
        raise InputError("need n >= 2 and m >= 1")
    Qs, qs, rs = [], [], []
    for i in range(m + 1):
        base = 4 * i
        G = CounterRng(seed, base).normal(n * n).reshape(n, n)
        L = _orthonormalize(G)
        s = CounterRng(seed, base + 1).uniform(n, 0.0, 100.0)
        s[np.argmin(s)] = 0.0
        Qs.append(L.T @ (s[:, None] * L))
        qs.append(CounterRng(seed, base + 2).normal(n))
        if i == 0:
            rs.append(0.0)
        else:
            rs.append(-float(CounterRng(seed, base + 3).uniform(1)[0]))
    return ProblemInstance(
        n=n, m=m, p=0, Q=Qs, q=qs, r=np.array(rs),
        A=np.zeros((0, n)), b=np.zeros(0),
        primal_set=Box(-10.0 * np.ones(n), 10.0 * np.ones(n)),
        cone=NonnegOrthant(m), mu=0.0,
        name=f"random-qcqp-n{n}-m{m}-s{seed}")


# ---------------------------------------------------------------------------
# Kernel matrix learning (minimax over the unit simplex)


def _normalize_kernel(K: np.ndarray) -> np.ndarray:
    d = np.diag(K).copy()
    if np.any(d <= 0):
        raise DataError("kernel has a nonpositive diagonal entry; cannot normalize")
    scale = 1.0 / np.sqrt(d)
    return K * np.outer(scale, scale)


def _psd_repair(M: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Shift out rounding-level negative curvature (|shift| <= tol)."""
    lam_min = float(np.linalg.eigvalsh(M)[0])
    if lam_min < 0:
        if lam_min < -tol:
            raise DataError(f"kernel combination not PSD (lambda_min={lam_min:.3e})")
        M = M + (-lam_min * (1.0 + 1e-3)) * np.eye(M.shape[0])
    return M


def kernel_matrices(features: np.ndarray) -> List[np.ndarray]:
    """Normalized (unit-diagonal) polynomial, Gaussian, and linear kernels of
    the sample columns."""
    A = np.asarray(features, dtype=float)
    G = A.T @ A
    sq = np.diag(G)
    dist2 = sq[:, None] + sq[None, :] - 2.0 * G
    K_poly = (1.0 + G) ** 2
    K_gauss = np.exp(-0.5 * np.maximum(dist2, 0.0) / 0.1)
    K_lin = G
    return [_normalize_kernel(K) for K in (K_poly, K_gauss, K_lin)]


def kml_instance(features: np.ndarray, labels: np.ndarray,
                 lambda_reg: float = 1.0,
                 c: Optional[float] = None) -> ProblemInstance:
    """Kernel-matrix-learning instance:

        min_{x >= 0, <b,x> = 0}  max_{y in unit simplex}
            lambda ||x||^2 - 2 1'x + sum_i y_i (c/r_i) x'H_i x,

    H_i = diag(b) K_i diag(b) for the three normalized kernels, r_i =
    trace(K_i) = n, default c = sum r_i.  Encoded as a minimax instance: the
    multiplier block is constrained to the simplex (dual_set), the objective
    carries mu = 2*lambda.
    """
    b = np.asarray(labels, dtype=float)
    if not np.all(np.isin(b, (-1.0, 1.0))):
        raise DataError("labels must be +/-1")
    if not (np.any(b > 0) and np.any(b < 0)):
        raise DataError("need both classes present")
    Ks = kernel_matrices(features)
    n = len(b)
    if any(K.shape != (n, n) for K in Ks):
        raise InputError("feature/label dimension mismatch")
    r_tr = [float(np.trace(K)) for K in Ks]  # = n after normalization
    if c is None:
        c = float(sum(r_tr))
    Q0 = 2.0 * lambda_reg * np.eye(n)
    q0 = -2.0 * np.ones(n)
    Qs, qs, rs = [Q0], [q0], [0.0]
    for K, tr in zip(Ks, r_tr):
        H = _psd_repair(np.outer(b, b) * K)
        Qs.append(2.0 * (c / tr) * H)
        qs.append(np.zeros(n))
        rs.append(0.0)
    return ProblemInstance(
        n=n, m=3, p=0, Q=Qs, q=qs, r=np.array(rs),
        A=np.zeros((0, n)), b=np.zeros(0),
        primal_set=NonnegWithLinearEq(b),
        cone=NonnegOrthant(3), dual_set=Simplex(3, 1.0),
        mu=2.0 * lambda_reg, name="kml")


def synthetic_kml_data(n_samples: int = 200, n_features: int = 20,
                       seed: int = 0):
    """Two Gaussian clusters with +/-1 labels, per-feature standardized.
    Returns (features d x n, labels)."""
    rng = CounterRng(seed, 0)
    half = n_samples // 2
    X = rng.normal(n_features * n_samples).reshape(n_features, n_samples)
    shift = rng.uniform(n_features, 0.5, 1.5)
    X[:, :half] += shift[:, None]
    X[:, half:] -= shift[:, None]
    labels = np.concatenate([np.ones(half), -np.ones(n_samples - half)])
    return standardize_features(X), labels


def standardize_features(X: np.ndarray) -> np.ndarray:
    """Center each feature (row) and divide by its standard deviation."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=1, keepdims=True)
    std = X.std(axis=1, keepdims=True)
    std[std == 0] = 1.0
    return (X - mean) / std


def load_kml_csv(path: str):
    """CSV with one sample per row, last column the +/-1 label."""
    rows = []
    with open(path) as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(v) for v in row])
    if not rows:
        raise DataError(f"no data rows in {path}")
    data = np.asarray(rows)
    return standardize_features(data[:, :-1].T), data[:, -1]


# ---------------------------------------------------------------------------
# Analytic instances with known solutions


@dataclass(frozen=True)
class AnalyticInstance:
    name: str
    instance: ProblemInstance
    z_star: Iterate
    f_star: float
    slater_point: Optional[np.ndarray] = None


def analytic_suite() -> List[AnalyticInstance]:
    """Small instances whose solutions are verified by hand KKT analysis."""
    out = []

    # (a) min ||x - (2,0)||^2 s.t. 0.5||x||^2 <= 0.5, box enclosure:
    #     x* = (1, 0); stationarity 2(x - c) + lam*x = 0 gives lam* = 2
    inst = ProblemInstance(
        n=2, m=1, p=0,
        Q=[2.0 * np.eye(2), np.eye(2)],
        q=[np.array([-4.0, 0.0]), np.zeros(2)],
        r=np.array([4.0, -0.5]),
        A=np.zeros((0, 2)), b=np.zeros(0),
        primal_set=Box(np.array([-2.0, -2.0]), np.array([2.0, 2.0])),
        cone=NonnegOrthant(1), name="ball")
    out.append(AnalyticInstance(
        "ball", inst,
        Iterate(np.array([1.0, 0.0]), np.zeros(0), np.array([2.0])),
        f_star=1.0, slater_point=np.zeros(2)))

    # (b) linear program over the unit box with an inactive quadratic-free
    #     constraint: min x1 - 2 x2, x* = (0, 1), lam* = 0
    inst = ProblemInstance(
        n=2, m=1, p=0,
        Q=[np.zeros((2, 2)), np.zeros((2, 2))],
        q=[np.array([1.0, -2.0]), np.array([1.0, 1.0])],
        r=np.array([0.0, -3.0]),
        A=np.zeros((0, 2)), b=np.zeros(0),
        primal_set=Box(np.zeros(2), np.ones(2)),
        cone=NonnegOrthant(1), name="box-lp")
    out.append(AnalyticInstance(
        "box-lp", inst,
        Iterate(np.array([0.0, 1.0]), np.zeros(0), np.array([0.0])),
        f_star=-2.0, slater_point=np.zeros(2)))

    # (c) min 0.5||x||^2 s.t. 1'x = 1: x* = (1/3,1/3,1/3), v* = -1/3
    inst = ProblemInstance(
        n=3, m=0, p=1,
        Q=[np.eye(3)], q=[np.zeros(3)], r=np.array([0.0]),
        A=np.ones((1, 3)), b=np.array([1.0]),
        primal_set=Box(-5.0 * np.ones(3), 5.0 * np.ones(3)),
        cone=NonnegOrthant(0), name="eq-qp")
    out.append(AnalyticInstance(
        "eq-qp", inst,
        Iterate(np.full(3, 1.0 / 3.0), np.array([-1.0 / 3.0]), np.zeros(0)),
        f_star=1.0 / 6.0))

    # (d) strongly convex (mu = 1): min 0.5||x - (1,1)||^2 s.t. x1 + x2 <= 1:
    #     x* = (1/2, 1/2), lam* = 1/2
    inst = ProblemInstance(
        n=2, m=1, p=0,
        Q=[np.eye(2), np.zeros((2, 2))],
        q=[np.array([-1.0, -1.0]), np.array([1.0, 1.0])],
        r=np.array([1.0, -1.0]),
        A=np.zeros((0, 2)), b=np.zeros(0),
        primal_set=Box(np.zeros(2), 2.0 * np.ones(2)),
        cone=NonnegOrthant(1), mu=1.0, name="strongly-convex")
    out.append(AnalyticInstance(
        "strongly-convex", inst,
        Iterate(np.array([0.5, 0.5]), np.zeros(0), np.array([0.5])),
        f_star=0.25, slater_point=np.zeros(2)))

    return out
