"""Operator oracles and the benchmark problem zoo.

An oracle evaluates the operator F, Jacobian-vector products, optionally a
dense Jacobian and higher-order directional contractions.  Evaluation
counters are kept on the oracle and are safe to increment from concurrent
solver runs sharing one instance.
"""

from __future__ import annotations

import threading

import numpy as np

from .core import Ball, Domain, as_point, project
from .errors import CapabilityError

__all__ = [
    "Operator",
    "AffineOperator",
    "make_affine",
    "CubicBilinearOperator",
    "ComponentwiseQuadratic",
    "ComponentwiseCubic",
    "finite_diff_jacobian",
    "restricted_gap",
    "certify_minty",
]


class Operator:
    """Base oracle for an operator F: R^d -> R^d.

    Subclasses implement ``_eval`` and ``_jvp``; ``_dense_jacobian`` and
    ``_contraction`` are optional capabilities.  ``max_derivative_order``
    states the highest derivative the oracle can contract (1 = Jacobian only).
    """

    max_derivative_order = 1

    def __init__(self, dim: int):
        self.dim = dim
        self._lock = threading.Lock()
        self._eval_count = 0
        self._jvp_count = 0

    # -- counters ---------------------------------------------------------
    @property
    def eval_count(self) -> int:
        return self._eval_count

    @property
    def jvp_count(self) -> int:
        return self._jvp_count

    def reset_counters(self) -> None:
        with self._lock:
            self._eval_count = 0
            self._jvp_count = 0

    def _count(self, evals=0, jvps=0) -> None:
        with self._lock:
            self._eval_count += evals
            self._jvp_count += jvps

    # -- oracle surface ---------------------------------------------------
    def __call__(self, x) -> np.ndarray:
        x = as_point(x)
        if x.shape[0] != self.dim:
            raise ValueError(f"operator is {self.dim}-d, point is {x.shape[0]}-d")
        out = self._eval(x)
        self._count(evals=1)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("operator evaluation produced non-finite values")
        return out

    def jvp(self, x, s) -> np.ndarray:
        """Jacobian-vector product dF(x)[s]."""
        x = as_point(x)
        s = as_point(s)
        if x.shape != s.shape or x.shape[0] != self.dim:
            raise ValueError("dimension mismatch in jvp")
        out = self._jvp(x, s)
        self._count(jvps=1)
        return out

    def dense_jacobian(self, x) -> np.ndarray:
        """Full d x d Jacobian.  Counted as d Jacobian-vector products."""
        x = as_point(x)
        J = self._dense_jacobian(x)
        self._count(jvps=self.dim)
        return J

    def contraction(self, x, order: int, h) -> np.ndarray:
        """order-th derivative at x contracted ``order`` times with h."""
        if order == 1:
            return self.jvp(x, h)
        if order > self.max_derivative_order:
            raise CapabilityError(
                f"{type(self).__name__} provides derivatives up to order "
                f"{self.max_derivative_order}, requested {order}"
            )
        out = self._contraction(as_point(x), order, as_point(h))
        self._count(jvps=1)
        return out

    # -- hooks ------------------------------------------------------------
    def _eval(self, x):
        raise NotImplementedError

    def _jvp(self, x, s):
        raise CapabilityError(f"{type(self).__name__} has no Jacobian-vector products")

    def _dense_jacobian(self, x):
        raise CapabilityError(f"{type(self).__name__} has no dense Jacobian")

    def _contraction(self, x, order, h):
        raise CapabilityError(f"{type(self).__name__} has no order-{order} contractions")


class AffineOperator(Operator):
    """F(x) = M x + q with constant Jacobian M."""

    def __init__(self, M, q):
        M = np.asarray(M, dtype=np.float64)
        q = as_point(q)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("M must be square")
        if M.shape[0] != q.shape[0]:
            raise ValueError("M and q dimensions differ")
        super().__init__(q.shape[0])
        self.M = M
        self.q = q
        self.max_derivative_order = 64  # all higher derivatives vanish

    def _eval(self, x):
        return self.M @ x + self.q

    def _jvp(self, x, s):
        return self.M @ s

    def _dense_jacobian(self, x):
        return self.M.copy()

    def _contraction(self, x, order, h):
        return np.zeros(self.dim)

    def smoothness_bound(self) -> float:
        """Zero-order smoothness constant: the spectral norm of M."""
        return float(np.linalg.norm(self.M, 2))


def make_affine(M, q) -> AffineOperator:
    """Factory for affine test operators (monotone iff sym(M) >= 0)."""
    return AffineOperator(M, q)


class CubicBilinearOperator(Operator):
    """Saddle operator of min-max over (x, y) of  y' (A x - b) + rho/6 ||x||^3.

    A is upper bidiagonal (1 on the diagonal, -1 on the superdiagonal) and
    b = e_1.  Points are z = (x, y) of total dimension 2 d.  The operator is
    monotone; its Jacobian is rho-Lipschitz (the bilinear part contributes
    nothing), so the first-order smoothness constant equals ``rho``.
    """

    max_derivative_order = 1

    def __init__(self, d: int, rho: float):
        if d < 1:
            raise ValueError("d must be >= 1")
        if not rho > 0:
            raise ValueError("rho must be positive")
        super().__init__(2 * d)
        self.d = d
        self.rho = rho
        A = np.eye(d)
        A -= np.diag(np.ones(d - 1), k=1)
        self.A = A
        self.b = np.zeros(d)
        self.b[0] = 1.0

    # The smoothness constant of the Jacobian.
    @property
    def L1(self) -> float:
        return self.rho

    def split(self, z):
        z = as_point(z)
        return z[: self.d], z[self.d :]

    def _eval(self, z):
        x, y = self.split(z)
        gx = self.A.T @ y + 0.5 * self.rho * np.linalg.norm(x) * x
        gy = self.b - self.A @ x
        return np.concatenate([gx, gy])

    def _jvp(self, z, s):
        x, _ = self.split(z)
        sx, sy = self.split(s)
        out_x = self.A.T @ sy + self._hess_x_apply(x, sx)
        out_y = -self.A @ sx
        return np.concatenate([out_x, out_y])

    def _hess_x_apply(self, x, sx):
        # d/dx [rho/2 ||x|| x] s = rho/2 (||x|| s + (x's / ||x||) x); 0 at x = 0.
        n = float(np.linalg.norm(x))
        if n == 0.0:
            return np.zeros(self.d)
        return 0.5 * self.rho * (n * sx + (x @ sx / n) * x)

    def _dense_jacobian(self, z):
        x, _ = self.split(z)
        n = float(np.linalg.norm(x))
        if n == 0.0:
            Hxx = np.zeros((self.d, self.d))
        else:
            Hxx = 0.5 * self.rho * (n * np.eye(self.d) + np.outer(x, x) / n)
        top = np.hstack([Hxx, self.A.T])
        bottom = np.hstack([-self.A, np.zeros((self.d, self.d))])
        return np.vstack([top, bottom])

    def saddle_point(self) -> np.ndarray:
        """The stationary point z* = (e_1, -(rho/2) 1), where F(z*) = 0."""
        x = np.zeros(self.d)
        x[0] = 1.0
        y = np.full(self.d, -0.5 * self.rho)
        return np.concatenate([x, y])

    def objective(self, z) -> float:
        x, y = self.split(z)
        return float(y @ (self.A @ x - self.b) + self.rho / 6.0 * np.linalg.norm(x) ** 3)

    def smoothness_bound(self, radius: float) -> float:
        """Upper bound on ||dF(z)|| over any ball of given radius around 0."""
        return self.rho * radius + float(np.linalg.norm(self.A, 2))


class ComponentwiseQuadratic(Operator):
    """F(x) = x * x componentwise.  Exact second-order Taylor is exact."""

    max_derivative_order = 2

    def __init__(self, dim: int):
        super().__init__(dim)

    def _eval(self, x):
        return x * x

    def _jvp(self, x, s):
        return 2.0 * x * s

    def _dense_jacobian(self, x):
        return np.diag(2.0 * x)

    def _contraction(self, x, order, h):
        return 2.0 * h * h


class ComponentwiseCubic(Operator):
    """F(x) = x^3 componentwise: monotone, with constant third derivative.

    The second derivative is 6-Lipschitz in operator norm, so the order-2
    smoothness constant is 6.
    """

    max_derivative_order = 2
    L2 = 6.0

    def __init__(self, dim: int):
        super().__init__(dim)

    def _eval(self, x):
        return x**3

    def _jvp(self, x, s):
        return 3.0 * x * x * s

    def _dense_jacobian(self, x):
        return np.diag(3.0 * x * x)

    def _contraction(self, x, order, h):
        return 6.0 * x * h * h


def finite_diff_jacobian(op: Operator, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian, column by column.  Verification oracle."""
    if not h > 0:
        raise ValueError("step h must be positive")
    x = as_point(x)
    d = x.shape[0]
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        J[:, j] = (op(x + e) - op(x - e)) / (2.0 * h)
    return J


def restricted_gap(z, beta: float, prob: CubicBilinearOperator) -> float:
    """Closed-form restricted primal-dual gap of the cubic-bilinear problem.

    gap(z, beta) = rho/6 ||x||^3 + beta ||A x - b|| + (2/3) sqrt(2/rho) ||A'y||^(3/2) + b'y
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    x, y = prob.split(z)
    rho = prob.rho
    return float(
        rho / 6.0 * np.linalg.norm(x) ** 3
        + beta * np.linalg.norm(prob.A @ x - prob.b)
        + (2.0 / 3.0) * np.sqrt(2.0 / rho) * np.linalg.norm(prob.A.T @ y) ** 1.5
        + prob.b @ y
    )


def certify_minty(
    op: Operator,
    dom: Domain,
    x_star,
    grid_per_dim: int = 25,
    tol: float = 1e-10,
) -> bool:
    """Grid-check <F(x), x - x*> >= -tol over the domain (d <= 3 only).

    Used as a gate before running residue-mode experiments on operators that
    are not known to be monotone.
    """
    x_star = as_point(x_star)
    d = getattr(dom, "dim", None) or x_star.shape[0]
    if d > 3:
        raise ValueError("grid certification is only supported for d <= 3")
    if isinstance(dom, Ball):
        lo = dom.center - dom.radius
        hi = dom.center + dom.radius
    else:
        lo, hi = dom.lower, dom.upper
    axes = [np.linspace(lo[i], hi[i], grid_per_dim) for i in range(d)]
    mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    for row in mesh:
        x = project(dom, row)
        if float(op(x) @ (x - x_star)) < -tol:
            return False
    return True
