"""Optimality measures and empirical rate fitting.

The general weak-solution gap involves a nonconcave inner maximization, so
exact gap oracles are provided only where they are exact: affine operators
on balls (concave quadratic inner problem) and the benchmark's closed-form
restricted gap (module ``operators``).  Everything else reports the residue
and the operator norm.
"""

from __future__ import annotations

import numpy as np

from .core import Ball, Domain, as_point, linear_sup
from .operators import Operator

__all__ = ["residue", "gap_affine_ball", "affine_ball_solution", "rate_fit"]


def residue(op: Operator, dom: Domain, x_hat) -> float:
    """sup over the domain of <F(x_hat), x_hat - x>: zero iff a strong solution."""
    x_hat = as_point(x_hat)
    return linear_sup(dom, op(x_hat), x_hat)


def _ball_quadratic_max(S, b, R, tol=1e-13):
    """Maximize b'w - w'Sw over ||w|| <= R for S symmetric PSD.

    Returns (w, nu) with nu the multiplier of the ball constraint.
    """
    lam, Q = np.linalg.eigh(S)
    beta = Q.T @ b

    def w_of(nu):
        return beta / (2.0 * lam + 2.0 * nu)

    # interior stationary point, treating 0/0 eigen-directions as 0
    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = np.where(np.abs(beta) > 0, beta / (2.0 * lam), 0.0)
    if np.all(np.isfinite(w0)) and np.linalg.norm(w0) <= R:
        return Q @ w0, 0.0

    # boundary: bisect on the multiplier; ||w(nu)|| decreases in nu
    lo = 0.0
    hi = max(np.linalg.norm(b) / (2.0 * R), 1e-30)
    while np.linalg.norm(w_of(hi)) > R:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        n = np.linalg.norm(w_of(mid))
        if abs(n - R) <= tol * R:
            lo = hi = mid
            break
        if n > R:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    w = w_of(nu)
    # land exactly on the sphere to keep the KKT residual at roundoff level
    w *= R / np.linalg.norm(w)
    return Q @ w, nu


def gap_affine_ball(M, q, dom: Ball, x_hat, return_argmax: bool = False):
    """Exact weak-solution gap sup_x <M x + q, x_hat - x> for a monotone affine
    operator over a ball: the inner problem is a concave quadratic, solved by
    eigendecomposition plus bisection on the ball multiplier.
    """
    M = np.asarray(M, dtype=np.float64)
    q = as_point(q)
    x_hat = as_point(x_hat)
    if not isinstance(dom, Ball):
        raise TypeError("this gap oracle is exact on balls only")
    S = 0.5 * (M + M.T)
    if np.linalg.eigvalsh(S)[0] < -1e-10:
        raise ValueError("operator is not monotone: sym(M) has a negative eigenvalue")
    c, R = dom.center, dom.radius
    u = x_hat - c
    Fc = M @ c + q
    b = M.T @ u - Fc
    const = float(Fc @ u)
    w, nu = _ball_quadratic_max(S, b, R)
    value = const + float(b @ w) - float(w @ (S @ w))
    if not return_argmax:
        return value
    x_inner = c + w
    kkt = float(np.linalg.norm(2.0 * S @ w - b + 2.0 * nu * w)) if nu > 0 else float(
        np.linalg.norm(2.0 * S @ w - b)
    )
    return value, x_inner, kkt


def affine_ball_solution(M, q, dom: Ball, tol: float = 1e-14) -> np.ndarray:
    """Strong solution of the affine VI on a ball, via the optimality system.

    Interior: M x = -q.  Boundary: F(x*) = -nu (x* - c) for some nu > 0,
    located by bisection on ||x(nu) - c|| - R.
    """
    M = np.asarray(M, dtype=np.float64)
    q = as_point(q)
    c, R = dom.center, dom.radius
    interior = np.linalg.solve(M, -q)
    if np.linalg.norm(interior - c) <= R:
        return interior
    Fc = M @ c + q
    d = c.shape[0]

    def x_of(nu):
        return c - np.linalg.solve(M + nu * np.eye(d), Fc)

    lo, hi = 0.0, 1.0
    while np.linalg.norm(x_of(hi) - c) > R:
        hi *= 2.0
        if hi > 1e16:
            raise RuntimeError("failed to bracket the ball multiplier")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        n = np.linalg.norm(x_of(mid) - c)
        if abs(n - R) <= tol * R:
            return x_of(mid)
        if n > R:
            lo = mid
        else:
            hi = mid
    return x_of(0.5 * (lo + hi))


def rate_fit(trace, window: int) -> float:
    """Least-squares slope of log(metric) against log(iteration) over the
    trailing ``window`` trace rows with positive, finite metric values.
    """
    k = np.asarray(trace.k, dtype=np.float64)[-window:]
    m = np.asarray(trace.metric, dtype=np.float64)[-window:]
    mask = np.isfinite(m) & (m > 0.0) & (k > 0.0)
    k, m = k[mask], m[mask]
    if k.size < 2 or np.ptp(np.log(k)) == 0.0:
        raise ValueError("degenerate window: need >= 2 distinct iterations with positive metric")
    slope, _ = np.polyfit(np.log(k), np.log(m), 1)
    return float(slope)
