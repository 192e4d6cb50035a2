"""Independent brute-force oracles shared across the test suite.

These implementations deliberately avoid the library's closed forms: sups
are taken over explicit point sets (plus a local polish where a grid alone
is too coarse), so they can certify the fast paths.
"""

import itertools

import numpy as np

from viqn.core import Ball, Box, project


def box_vertices(box: Box) -> np.ndarray:
    corners = itertools.product(*zip(box.lower, box.upper))
    return np.array(list(corners))


def brute_linear_sup(dom, g, anchor, n_grid: int = 4096, polish_iters: int = 300) -> float:
    """max over dom of <g, anchor - x> by enumeration.

    Boxes: exact (a linear function is maximized at a vertex).  Balls: dense
    boundary grid followed by projected fixed-point ascent from the best
    candidate (the objective is linear, so the ascent converges geometrically).
    """
    g = np.asarray(g, float)
    anchor = np.asarray(anchor, float)
    if isinstance(dom, Box):
        vals = (anchor - box_vertices(dom)) @ g
        return float(vals.max())
    assert isinstance(dom, Ball)
    d = dom.dim
    rng = np.random.default_rng(123)
    if d == 1:
        pts = np.array([[dom.center[0] - dom.radius], [dom.center[0] + dom.radius]])
    elif d == 2:
        theta = np.linspace(0.0, 2.0 * np.pi, n_grid, endpoint=False)
        pts = dom.center + dom.radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    else:
        raw = rng.standard_normal((n_grid, d))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        pts = dom.center + dom.radius * raw
    vals = (anchor - pts) @ g
    x = pts[int(np.argmax(vals))]
    # ascent on the sphere: move along -g and re-project
    step = dom.radius / max(np.linalg.norm(g), 1e-30)
    for _ in range(polish_iters):
        x = project(dom, x - step * g)
    return float(g @ (anchor - x))


def ball_grid(dom: Ball, n_per_dim: int) -> np.ndarray:
    """Regular grid over the bounding box of a ball, projected onto the ball."""
    axes = [
        np.linspace(dom.center[i] - dom.radius, dom.center[i] + dom.radius, n_per_dim)
        for i in range(dom.dim)
    ]
    mesh = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    norms = np.linalg.norm(mesh - dom.center, axis=1, keepdims=True)
    scale = np.minimum(1.0, dom.radius / np.maximum(norms, 1e-30))
    return dom.center + (mesh - dom.center) * scale


def projected_gradient_min(f, grad, dom: Ball, x0, iters: int = 400, step: float | None = None):
    """Minimize a smooth convex f over a ball by projected gradient descent."""
    x = project(dom, np.asarray(x0, float))
    if step is None:
        step = dom.radius / max(np.linalg.norm(grad(x)), 1e-12)
    for _ in range(iters):
        x_new = project(dom, x - step * grad(x))
        if f(x_new) > f(x):
            step *= 0.5
        else:
            x = x_new
    return x


def dense_broyden_recursion(j0_diag, pairs, damped: bool) -> np.ndarray:
    """Literal dense recursion of the rank-one secant updates."""
    d = len(j0_diag)
    J = np.diag(np.asarray(j0_diag, float))
    alpha = len(pairs) + 1.0 if damped else 1.0
    for s, y in pairs:
        s = np.asarray(s, float)
        y = np.asarray(y, float)
        J = J + np.outer(y - J @ s, s) / (alpha * (s @ s))
    return J


def operator_norm_power(A: np.ndarray, iters: int = 400, seed: int = 0) -> float:
    """Spectral norm by power iteration on A'A (independent of numpy's svd)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    B = A.T @ A
    for _ in range(iters):
        w = B @ v
        n = np.linalg.norm(w)
        if n == 0.0:
            return 0.0
        v = w / n
    return float(np.sqrt(v @ (B @ v)))
