"""Simple sets, cones, dual-norm balls, and their Euclidean projections.

All projections are exact closed forms except NonnegWithLinearEq, which
bisects on the scalar multiplier of its linear constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Union

import numpy as np

from .errors import ConfigurationError, InputError

__all__ = [
    "Box", "Ball", "Simplex", "NonnegWithLinearEq", "SimpleSet",
    "NonnegOrthant", "SecondOrderCone", "ProductCone", "Cone",
    "Unbounded", "JointBall", "SplitBall", "DualBall",
    "project_set", "project_cone", "project_dual_cone", "project_polar_cone",
    "project_dual_ball", "bregman_p", "bregman_d", "set_dim", "cone_dim",
    "enclosing_radius", "set_from_json", "set_to_json",
    "cone_from_json", "cone_to_json",
]


# ---------------------------------------------------------------------------
# Simple primal sets


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InputError("box bounds must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise InputError("box has lower > upper")

    def project(self, w: np.ndarray) -> np.ndarray:
        return np.clip(w, self.lower, self.upper)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise InputError("ball radius must be positive")

    def project(self, w: np.ndarray) -> np.ndarray:
        d = w - self.center
        nrm = np.linalg.norm(d)
        if nrm <= self.radius:
            return np.asarray(w, dtype=float).copy()
        return self.center + (self.radius / nrm) * d


@dataclass(frozen=True)
class Simplex:
    """{x >= 0 : sum(x) = scale}."""

    dim: int
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise InputError("simplex scale must be positive")

    def project(self, w: np.ndarray) -> np.ndarray:
        # sort-and-threshold; ties broken by index via stable mergesort
        u = np.sort(w, kind="mergesort")[::-1]
        css = np.cumsum(u) - self.scale
        ks = np.arange(1, len(w) + 1)
        cond = u - css / ks > 0
        rho = int(np.nonzero(cond)[0][-1])
        theta = css[rho] / (rho + 1)
        return np.maximum(w - theta, 0.0)


@dataclass(frozen=True)
class NonnegWithLinearEq:
    """{x >= 0 : <direction, x> = 0}."""

    direction: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "direction", d)
        if not (np.any(d > 0) and np.any(d < 0)):
            raise InputError("direction needs entries of both signs for a nontrivial set")

    def project(self, w: np.ndarray, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
        b = self.direction
        active = b != 0.0

        def point(nu):
            return np.maximum(w - nu * b, 0.0)

        def resid(nu):
            return float(b @ point(nu))

        span = np.max(np.abs(w)) / np.min(np.abs(b[active])) if np.any(active) else 1.0
        lo, hi = -span - 1.0, span + 1.0
        # resid is nonincreasing in nu; widen until bracketed
        while resid(lo) < 0:
            lo *= 2.0
        while resid(hi) > 0:
            hi *= 2.0
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            r = resid(mid)
            if abs(r) <= tol:
                return point(mid)
            if r > 0:
                lo = mid
            else:
                hi = mid
        return point(0.5 * (lo + hi))


SimpleSet = Union[Box, Ball, Simplex, NonnegWithLinearEq]


def set_dim(s: SimpleSet) -> int:
    if isinstance(s, Box):
        return len(s.lower)
    if isinstance(s, Ball):
        return len(s.center)
    if isinstance(s, Simplex):
        return s.dim
    return len(s.direction)


def project_set(s: SimpleSet, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (set_dim(s),):
        raise InputError(f"point of dim {w.shape} does not match set of dim {set_dim(s)}")
    return s.project(w)


def enclosing_radius(s: SimpleSet):
    """Radius r with s contained in {||x|| <= r}, or None if unbounded."""
    if isinstance(s, Box):
        if not (np.all(np.isfinite(s.lower)) and np.all(np.isfinite(s.upper))):
            return None
        center = 0.5 * (s.lower + s.upper)
        half = 0.5 * (s.upper - s.lower)
        return float(np.linalg.norm(center) + np.linalg.norm(half))
    if isinstance(s, Ball):
        return float(np.linalg.norm(s.center) + s.radius)
    if isinstance(s, Simplex):
        return float(s.scale)
    return None


# ---------------------------------------------------------------------------
# Cones


@dataclass(frozen=True)
class NonnegOrthant:
    dim: int

    def project(self, w):
        return np.maximum(w, 0.0)

    def project_dual(self, w):
        return np.maximum(w, 0.0)


@dataclass(frozen=True)
class SecondOrderCone:
    """{(t, u) : t >= ||u||}, dim >= 2."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise InputError("second-order cone needs dim >= 2")

    def project(self, w):
        t, u = w[0], w[1:]
        nu = np.linalg.norm(u)
        if t >= nu:
            return np.asarray(w, dtype=float).copy()
        if t <= -nu:
            return np.zeros_like(w)
        coef = 0.5 * (t + nu)
        out = np.empty_like(w)
        out[0] = coef
        out[1:] = coef * (u / nu)
        return out

    def project_dual(self, w):
        return self.project(w)  # self-dual


@dataclass(frozen=True)
class ProductCone:
    parts: List["Cone"] = field(default_factory=list)

    def _blocks(self, w):
        out, offset = [], 0
        for part in self.parts:
            d = cone_dim(part)
            out.append((part, w[offset:offset + d]))
            offset += d
        return out

    def project(self, w):
        return np.concatenate([p.project(blk) for p, blk in self._blocks(w)]) \
            if self.parts else np.zeros(0)

    def project_dual(self, w):
        return np.concatenate([p.project_dual(blk) for p, blk in self._blocks(w)]) \
            if self.parts else np.zeros(0)


Cone = Union[NonnegOrthant, SecondOrderCone, ProductCone]


def cone_dim(c: Cone) -> int:
    if isinstance(c, ProductCone):
        return sum(cone_dim(p) for p in c.parts)
    return c.dim


def _check_cone_dim(c: Cone, w: np.ndarray):
    w = np.asarray(w, dtype=float)
    if w.shape != (cone_dim(c),):
        raise InputError(f"point of dim {w.shape} does not match cone of dim {cone_dim(c)}")
    return w


def project_cone(c: Cone, w: np.ndarray) -> np.ndarray:
    return c.project(_check_cone_dim(c, w))


def project_dual_cone(c: Cone, w: np.ndarray) -> np.ndarray:
    return c.project_dual(_check_cone_dim(c, w))


def project_polar_cone(c: Cone, w: np.ndarray) -> np.ndarray:
    """Projection onto -K (the polar of the dual cone)."""
    w = _check_cone_dim(c, w)
    return -c.project(-w)


# ---------------------------------------------------------------------------
# Dual-norm balls


@dataclass(frozen=True)
class Unbounded:
    def project(self, v, lam):
        return v, lam

    def contains(self, v, lam, tol=0.0):
        return True


@dataclass(frozen=True)
class JointBall:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InputError("ball radius must be positive")

    def project(self, v, lam):
        nrm = np.sqrt(v @ v + lam @ lam)
        if nrm <= self.radius:
            return v, lam
        scale = self.radius / nrm
        return scale * v, scale * lam

    def contains(self, v, lam, tol=0.0):
        return np.sqrt(v @ v + lam @ lam) <= self.radius + tol


@dataclass(frozen=True)
class SplitBall:
    radius_v: float
    radius_lam: float

    def __post_init__(self):
        if self.radius_v <= 0 or self.radius_lam <= 0:
            raise InputError("ball radii must be positive")

    def project(self, v, lam):
        nv = np.linalg.norm(v)
        if nv > self.radius_v:
            v = (self.radius_v / nv) * v
        nl = np.linalg.norm(lam)
        if nl > self.radius_lam:
            lam = (self.radius_lam / nl) * lam
        return v, lam

    def contains(self, v, lam, tol=0.0):
        return (np.linalg.norm(v) <= self.radius_v + tol
                and np.linalg.norm(lam) <= self.radius_lam + tol)


DualBall = Union[Unbounded, JointBall, SplitBall]


def project_dual_ball(d: DualBall, y):
    """Radial scaling onto the ball; identity for Unbounded."""
    v, lam = y
    return d.project(np.asarray(v, dtype=float), np.asarray(lam, dtype=float))


def _has_soc(c: Cone) -> bool:
    if isinstance(c, SecondOrderCone):
        return True
    if isinstance(c, ProductCone):
        return any(_has_soc(p) for p in c.parts)
    return False


def validate_dual_ball(cone: Cone, ball: DualBall):
    """Cone-then-ball composition is used as the exact projection onto the
    intersected dual domain; SplitBall with SOC blocks is not supported."""
    if isinstance(ball, SplitBall) and _has_soc(cone):
        raise ConfigurationError("split dual ball is not supported with second-order cone blocks")


# ---------------------------------------------------------------------------
# Bregman distances (Euclidean generator ships; interface kept generator-shaped)


class EuclideanGenerator:
    """phi = 0.5 ||.||^2, the 1-strongly-convex generator with L_phi = 1."""

    lipschitz = 1.0

    def value(self, x):
        return 0.5 * float(x @ x)

    def grad(self, x):
        return x


_EUCLIDEAN = EuclideanGenerator()


def bregman(x, xbar, generator=_EUCLIDEAN):
    d = np.asarray(x, dtype=float) - np.asarray(xbar, dtype=float)
    if isinstance(generator, EuclideanGenerator):
        return 0.5 * float(d @ d)
    return generator.value(x) - generator.value(xbar) - float(generator.grad(xbar) @ d)


def bregman_p(x, xbar, generator=_EUCLIDEAN):
    return bregman(x, xbar, generator)


def bregman_d(y, ybar, generator=_EUCLIDEAN):
    return bregman(y, ybar, generator)


# ---------------------------------------------------------------------------
# JSON descriptors


def set_to_json(s: SimpleSet) -> dict:
    if isinstance(s, Box):
        return {"type": "box", "lower": list(s.lower), "upper": list(s.upper)}
    if isinstance(s, Ball):
        return {"type": "ball", "center": list(s.center), "radius": s.radius}
    if isinstance(s, Simplex):
        return {"type": "simplex", "dim": s.dim, "scale": s.scale}
    return {"type": "nonneg_lineq", "direction": list(s.direction)}


def set_from_json(d: dict) -> SimpleSet:
    try:
        kind = d["type"]
        if kind == "box":
            return Box(np.asarray(d["lower"], float), np.asarray(d["upper"], float))
        if kind == "ball":
            return Ball(np.asarray(d["center"], float), float(d["radius"]))
        if kind == "simplex":
            return Simplex(int(d["dim"]), float(d.get("scale", 1.0)))
        if kind == "nonneg_lineq":
            return NonnegWithLinearEq(np.asarray(d["direction"], float))
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad set descriptor {d!r}: {exc}") from exc
    raise InputError(f"unknown set type {kind!r}")


def cone_to_json(c: Cone) -> dict:
    if isinstance(c, NonnegOrthant):
        return {"type": "orthant", "dim": c.dim}
    if isinstance(c, SecondOrderCone):
        return {"type": "soc", "dim": c.dim}
    return {"type": "product", "parts": [cone_to_json(p) for p in c.parts]}


def cone_from_json(d: dict) -> Cone:
    try:
        kind = d["type"]
        if kind == "orthant":
            return NonnegOrthant(int(d["dim"]))
        if kind == "soc":
            return SecondOrderCone(int(d["dim"]))
        if kind == "product":
            return ProductCone([cone_from_json(p) for p in d["parts"]])
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad cone descriptor {d!r}: {exc}") from exc
    raise InputError(f"unknown cone type {kind!r}")
