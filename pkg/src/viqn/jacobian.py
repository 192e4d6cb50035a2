"""Inexact Jacobian providers: limited-memory Broyden updates in factored
low-rank form, with O(r^2 d) shifted solves via the Woodbury identity.

A Jacobian handle passed around the solvers is one of

* ``None``                 -- the zero Jacobian,
* a dense ``(d, d)`` array -- e.g. the exact Jacobian,
* a :class:`LowRankJacobian` -- diag(j0) + sum_i c_i u_i v_i'.

``apply_jacobian`` / ``solve_shifted`` / ``materialize`` / ``norm_bound``
dispatch over the three representations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import as_point
from .errors import IllConditionedJacobianError
from .operators import Operator

__all__ = [
    "LowRankJacobian",
    "PairBuffer",
    "broyden_build",
    "pairs_from_history",
    "pairs_from_jvp",
    "delta_bound",
    "apply_jacobian",
    "solve_shifted",
    "materialize",
    "norm_bound",
]

# Relative residual accepted by the self-check in shifted solves.
_SOLVE_RTOL = 1e-8


@dataclass
class PairBuffer:
    """Secant pairs (s_i, y_i) feeding a quasi-Newton build."""

    pairs: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    strategy: str = "history"

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class LowRankJacobian:
    """Factored approximation diag(j0) + U' C V of a d x d Jacobian.

    ``j0`` is the diagonal of the seed matrix, ``U`` and ``V`` stack the rank-one
    factors row-wise (r x d), ``c`` holds the r scalar coefficients.  ``alpha``
    is the damping denominator of the update that built it (1 = plain Broyden,
    m+1 = damped).  Immutable after construction; safe to share across threads.
    """

    j0: np.ndarray
    U: np.ndarray
    V: np.ndarray
    c: np.ndarray
    alpha: float = 1.0
    damped: bool = False

    def __post_init__(self):
        self.j0 = np.asarray(self.j0, dtype=np.float64)
        self.U = np.asarray(self.U, dtype=np.float64).reshape(-1, self.dim)
        self.V = np.asarray(self.V, dtype=np.float64).reshape(-1, self.dim)
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        if not (self.U.shape[0] == self.V.shape[0] == self.c.shape[0]):
            raise ValueError("inconsistent factor ranks")
        # j0 is constant on the diagonal in the common configuration; a cached
        # V U' Gram matrix then makes every shifted solve O(r^2 + r^3).
        self._j0_scalar = float(self.j0[0]) if self.j0.size and np.ptp(self.j0) == 0.0 else None
        self._gram = None

    @property
    def dim(self) -> int:
        return self.j0.shape[0]

    @property
    def rank(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        """Number of secant pairs absorbed (the memory actually used)."""
        return self.rank

    def apply(self, s) -> np.ndarray:
        """Matrix-vector product in O(r d)."""
        s = as_point(s)
        out = self.j0 * s
        if self.rank:
            out = out + self.U.T @ (self.c * (self.V @ s))
        return out

    def to_dense(self) -> np.ndarray:
        J = np.diag(self.j0)
        if self.rank:
            J = J + self.U.T @ (self.c[:, None] * self.V)
        return J

    def solve_shifted(self, sigma: float, rhs) -> np.ndarray:
        """Solve (diag(j0) + sigma I + U' C V) x = rhs by the Woodbury identity.

        Cost O(r^2 d + r^3); the result is verified against a relative
        residual of 1e-8 and an :class:`IllConditionedJacobianError` is raised
        when the inner r x r system is (numerically) singular.
        """
        rhs = as_point(rhs)
        b = self.j0 + sigma
        if np.min(np.abs(b)) <= 0.0:
            raise IllConditionedJacobianError("shifted seed diagonal is singular")
        if np.any(self.c == 0.0):
            raise IllConditionedJacobianError("zero coefficient in low-rank factor")
        x = rhs / b
        if self.rank:
            if self._j0_scalar is not None:
                if self._gram is None:
                    self._gram = self.V @ self.U.T
                inner = np.diag(1.0 / self.c) + self._gram / b[0]
                bu = None
            else:
                bu = self.U.T / b[:, None]
                inner = np.diag(1.0 / self.c) + self.V @ bu
            try:
                t = np.linalg.solve(inner, self.V @ x)
            except np.linalg.LinAlgError as exc:
                raise IllConditionedJacobianError(f"inner Woodbury system: {exc}") from exc
            x = x - (self.U.T @ t) / b[0] if bu is None else x - bu @ t
        residual = self.apply(x) + sigma * x - rhs
        if np.linalg.norm(residual) > _SOLVE_RTOL * max(np.linalg.norm(rhs), 1e-30):
            raise IllConditionedJacobianError(
                "shifted solve failed its residual check; rebuild the approximation"
            )
        return x


def broyden_build(j0, pairs: PairBuffer, damped: bool = False) -> LowRankJacobian:
    """Fold secant pairs into a factored limited-memory Broyden approximation.

    Plain update:   J_{i+1} = J_i + (y_i - J_i s_i) s_i' / (s_i' s_i)
    Damped update:  the correction scaled by 1/(m+1), m = number of pairs.

    Factors are accumulated through the running low-rank form (O(i d) per
    pair), so the plain update satisfies the secant equation J_{i+1} s_i = y_i
    exactly.  Zero-norm steps are rejected.
    """
    pair_list = pairs.pairs if isinstance(pairs, PairBuffer) else list(pairs)
    m = len(pair_list)
    alpha = float(m + 1) if damped else 1.0
    if np.isscalar(j0):
        dim = pair_list[0][0].shape[0] if m else None
        if dim is None:
            raise ValueError("scalar j0 with no pairs: dimension unknown")
        j0 = np.full(dim, float(j0))
    else:
        j0 = np.asarray(j0, dtype=np.float64)
    d = j0.shape[0]
    U = np.empty((m, d))
    V = np.empty((m, d))
    c = np.empty(m)
    for i, (s, y) in enumerate(pair_list):
        s = as_point(s)
        y = as_point(y)
        ss = float(s @ s)
        if ss == 0.0:
            raise ValueError(f"pair {i}: zero-norm step")
        Jis = j0 * s
        if i:
            Jis = Jis + U[:i].T @ (c[:i] * (V[:i] @ s))
        U[i] = y - Jis
        V[i] = s
        c[i] = 1.0 / (alpha * ss)
    return LowRankJacobian(j0=j0, U=U, V=V, c=c, alpha=alpha, damped=damped)


def pairs_from_history(trajectory, m: int) -> PairBuffer:
    """Differences of the last m+1 trajectory entries (point, F(point)).

    Costs no operator evaluations.  Consecutive duplicates produce a zero
    step and are dropped.
    """
    if m < 0:
        raise ValueError("memory must be nonnegative")
    if m == 0:
        return PairBuffer([], strategy="history")
    if len(trajectory) < m + 1:
        raise ValueError(f"need at least {m + 1} trajectory entries for memory {m}, have {len(trajectory)}")
    window = trajectory[-(m + 1):]
    out = []
    for (z0, f0), (z1, f1) in zip(window, window[1:]):
        s = as_point(z1) - as_point(z0)
        if float(s @ s) == 0.0:
            continue
        out.append((s, as_point(f1) - as_point(f0)))
    return PairBuffer(out, strategy="history")


def pairs_from_jvp(op: Operator, x, m: int, seed) -> PairBuffer:
    """Sample m unit directions and pair them with exact products dF(x)[s].

    Directions are normalized standard Gaussians, deterministic in ``seed``
    (an int or a ``numpy`` Generator).  Makes exactly m jvp calls.
    """
    if not 0 <= m < op.dim:
        raise ValueError(f"memory must satisfy 0 <= m < d = {op.dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = as_point(x)
    out = []
    for _ in range(m):
        s = rng.standard_normal(op.dim)
        s /= np.linalg.norm(s)
        out.append((s, op.jvp(x, s)))
    return PairBuffer(out, strategy="jvp-sampling")


def delta_bound(J: LowRankJacobian, L0: float) -> float:
    """Certified inexactness ||dF - J||: (m+2) L0 for plain, 2 L0 for damped."""
    if not L0 > 0:
        raise ValueError("L0 must be positive")
    if J.damped:
        return 2.0 * L0
    return (J.m + 2) * L0


# -- dispatch over the three Jacobian representations -----------------------

def apply_jacobian(J, s) -> np.ndarray:
    s = as_point(s)
    if J is None:
        return np.zeros_like(s)
    if isinstance(J, LowRankJacobian):
        return J.apply(s)
    return np.asarray(J) @ s


def solve_shifted(J, sigma: float, rhs) -> np.ndarray:
    """Solve (J + sigma I) x = rhs for any Jacobian representation."""
    rhs = as_point(rhs)
    if isinstance(J, LowRankJacobian):
        return J.solve_shifted(sigma, rhs)
    if J is None:
        if sigma == 0.0:
            raise IllConditionedJacobianError("zero Jacobian with zero shift is singular")
        return rhs / sigma
    A = np.asarray(J) + sigma * np.eye(rhs.shape[0])
    try:
        x = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedJacobianError(str(exc)) from exc
    residual = A @ x - rhs
    if np.linalg.norm(residual) > _SOLVE_RTOL * max(np.linalg.norm(rhs), 1e-30):
        raise IllConditionedJacobianError("dense shifted solve failed its residual check")
    return x


def materialize(J, dim: int) -> np.ndarray:
    if J is None:
        return np.zeros((dim, dim))
    if isinstance(J, LowRankJacobian):
        return J.to_dense()
    return np.asarray(J, dtype=np.float64)


def norm_bound(J) -> float:
    """Cheap upper bound on the operator norm of a Jacobian handle."""
    if J is None:
        return 0.0
    if isinstance(J, LowRankJacobian):
        bound = float(np.max(np.abs(J.j0))) if J.j0.size else 0.0
        if J.rank:
            bound += float(
                np.sum(np.abs(J.c) * np.linalg.norm(J.U, axis=1) * np.linalg.norm(J.V, axis=1))
            )
        return bound
    return float(np.linalg.norm(np.asarray(J), 2))
