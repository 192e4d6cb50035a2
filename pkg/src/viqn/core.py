"""Feasible domains, Euclidean projections, and the dual-averaging argmax step.

Points are plain 1-d ``numpy`` arrays of ``float64``.  All norms are
Euclidean; domains are limited to the three shapes the solvers need
(ball, box, full space).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnboundedDomainError

__all__ = [
    "Ball",
    "Box",
    "FullSpace",
    "Domain",
    "project",
    "dual_step",
    "linear_sup",
    "diameter",
]


def as_point(x) -> np.ndarray:
    """Coerce to a float64 vector without copying when possible."""
    p = np.asarray(x, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"expected a 1-d point, got shape {p.shape}")
    return p


def _check_dim(dom, p: np.ndarray) -> None:
    if dom.dim != p.shape[0]:
        raise ValueError(f"dimension mismatch: domain is {dom.dim}-d, point is {p.shape[0]}-d")


@dataclass(frozen=True)
class Ball:
    """Euclidean ball { x : ||x - center|| <= radius }."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box { x : lower <= x <= upper } (componentwise)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", as_point(self.lower))
        object.__setattr__(self, "upper", as_point(self.upper))
        if self.lower.shape != self.upper.shape:
            raise ValueError("box bounds must have equal shapes")
        if np.any(self.lower > self.upper):
            raise ValueError("box lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class FullSpace:
    """Unconstrained R^d.  Carries the dimension so shape checks still apply."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")


Domain = Ball | Box | FullSpace


def is_bounded(dom: Domain) -> bool:
    return not isinstance(dom, FullSpace)


def project(dom: Domain, p) -> np.ndarray:
    """Euclidean projection of ``p`` onto ``dom``.  Idempotent and 1-Lipschitz."""
    p = as_point(p)
    _check_dim(dom, p)
    if isinstance(dom, FullSpace):
        return p
    if isinstance(dom, Ball):
        w = p - dom.center
        n = float(np.linalg.norm(w))
        if n <= dom.radius:
            return p
        return dom.center + (dom.radius / n) * w
    return np.clip(p, dom.lower, dom.upper)


def dual_step(dom: Domain, x0, s) -> np.ndarray:
    """argmax over ``dom`` of <s, v - x0> - ||v - x0||^2 / 2.

    The maximizer of this prox problem is the projection of ``x0 + s``.
    """
    x0 = as_point(x0)
    s = as_point(s)
    if x0.shape != s.shape:
        raise ValueError("dimension mismatch between base point and dual state")
    return project(dom, x0 + s)


def linear_sup(dom: Domain, g, anchor) -> float:
    """sup over x in ``dom`` of <g, anchor - x> (closed form; needs a bounded domain)."""
    g = as_point(g)
    anchor = as_point(anchor)
    _check_dim(dom, g)
    _check_dim(dom, anchor)
    if isinstance(dom, FullSpace):
        if np.any(g != 0.0):
            raise UnboundedDomainError("linear supremum over full space is +inf for g != 0")
        return 0.0
    if isinstance(dom, Ball):
        return float(g @ (anchor - dom.center) + dom.radius * np.linalg.norm(g))
    # box: minimize <g, x> componentwise at the appropriate bound
    return float(g @ anchor - np.minimum(g * dom.lower, g * dom.upper).sum())


def diameter(dom: Domain) -> float:
    """max_{x,y in dom} ||x - y||."""
    if isinstance(dom, FullSpace):
        raise UnboundedDomainError("full space has no finite diameter; pass an explicit bound")
    if isinstance(dom, Ball):
        return 2.0 * dom.radius
    return float(np.linalg.norm(dom.upper - dom.lower))
