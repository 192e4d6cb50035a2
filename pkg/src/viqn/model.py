"""The regularized inexact model built around an anchor point.

For order 2 the model of the operator F around anchor v is

    model(x) = F(v) + J (x - v) + eta * delta * (x - v) + 5 L ||x - v|| (x - v)

with J an inexact Jacobian handle satisfying ||dF(v) - J|| <= delta.  The
order-p generalization replaces the linear part with an inexact Taylor
polynomial of degree p - 1 and adds one regularization term per derivative
order.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from .core import as_point
from .errors import CapabilityError
from .jacobian import apply_jacobian, materialize

__all__ = ["ModelParams", "taylor_value", "model_value", "tensor_model_value", "monotonicity_margin"]


@dataclass
class ModelParams:
    """Everything defining the regularized model at one anchor.

    ``jac`` is a Jacobian handle (dense array, LowRankJacobian, or None for
    zero).  For order p >= 3, ``contractions(i, h)`` must return the i-th
    (possibly inexact) derivative at the anchor contracted i times with h,
    for 2 <= i <= p - 1; ``deltas``/``etas`` then hold the per-order
    inexactness levels and regularization weights (index 0 = first order).
    """

    v: np.ndarray
    Fv: np.ndarray
    jac: object
    eta: float
    delta: float
    L: float
    p: int = 2
    deltas: tuple[float, ...] | None = None
    etas: tuple[float, ...] | None = None
    contractions: Callable[[int, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        self.v = as_point(self.v)
        self.Fv = as_point(self.Fv)
        if self.p < 2:
            raise ValueError("model order must be >= 2")
        if self.delta < 0 or self.L < 0:
            raise ValueError("delta and L must be nonnegative")
        if self.eta < 1.0:
            # the monotonicity certificate needs a nonnegative (eta-1) delta margin
            raise ValueError("eta must be >= 1")
        if self.p > 2:
            if self.deltas is None or len(self.deltas) != self.p - 1:
                raise ValueError("order-p model needs p-1 inexactness levels")
            if self.etas is None or len(self.etas) != self.p - 1:
                raise ValueError("order-p model needs p-1 regularization weights")
            if self.contractions is None:
                raise CapabilityError("order-p model needs derivative contractions up to p-1")

    @property
    def dim(self) -> int:
        return self.v.shape[0]


def taylor_value(mp: ModelParams, x) -> np.ndarray:
    """Inexact Taylor approximation of F at x around the anchor."""
    x = as_point(x)
    h = x - mp.v
    out = mp.Fv + apply_jacobian(mp.jac, h)
    for i in range(2, mp.p):
        out = out + mp.contractions(i, h) / factorial(i)
    return out


def model_value(mp: ModelParams, x) -> np.ndarray:
    """Regularized model value; equals F(v) at x = v for any order."""
    x = as_point(x)
    h = x - mp.v
    if mp.p == 2:
        step = float(np.linalg.norm(h))
        return mp.Fv + apply_jacobian(mp.jac, h) + (mp.eta * mp.delta + 5.0 * mp.L * step) * h
    return tensor_model_value(mp, x)


def tensor_model_value(mp: ModelParams, x) -> np.ndarray:
    """Order-p model: inexact Taylor polynomial plus per-order regularizers.

    For p = 2 (with deltas = (delta,), etas = (eta,)) this coincides with
    :func:`model_value` exactly.
    """
    x = as_point(x)
    h = x - mp.v
    step = float(np.linalg.norm(h))
    deltas = mp.deltas if mp.deltas is not None else (mp.delta,)
    etas = mp.etas if mp.etas is not None else (mp.eta,)
    out = taylor_value(mp, x)
    for i in range(1, mp.p):
        out = out + (etas[i - 1] * deltas[i - 1] / factorial(i)) * step ** (i - 1) * h
    out = out + (5.0 * mp.L / factorial(mp.p - 1)) * step ** (mp.p - 1) * h
    return out


def condition_rhs(mp: ModelParams, step: float) -> float:
    """Right-hand side of the inexact acceptance condition at step = ||x - v||.

    Order 2: L/2 step^3 + delta step^2; order p adds one term per derivative.
    """
    if mp.p == 2:
        return 0.5 * mp.L * step**3 + mp.delta * step**2
    rhs = mp.L / factorial(mp.p) * step ** (mp.p + 1)
    for i in range(1, mp.p):
        rhs += mp.deltas[i - 1] / factorial(i) * step ** (i + 1)
    return rhs


def monotonicity_margin(mp: ModelParams, x) -> float:
    """Distance (in smallest eigenvalue) of sym(d model(x)) above its certified
    lower bound  4 L ||h|| I + 5 L h h' / ||h|| + (eta - 1) delta I.

    A nonnegative margin (up to roundoff) certifies the model VI is monotone.
    Verification-only: materializes the Jacobian handle densely.  The rank-one
    term is taken as 0 at x = v (continuous limit).
    """
    if mp.p != 2:
        raise CapabilityError("monotonicity margin is implemented for order 2 only")
    x = as_point(x)
    h = x - mp.v
    step = float(np.linalg.norm(h))
    d = mp.dim
    J = materialize(mp.jac, d)
    grad = J + (mp.eta * mp.delta + 5.0 * mp.L * step) * np.eye(d)
    bound = (4.0 * mp.L * step + (mp.eta - 1.0) * mp.delta) * np.eye(d)
    if step > 0.0:
        rank_one = np.outer(h, h) / step
        grad = grad + 5.0 * mp.L * rank_one
        bound = bound + 5.0 * mp.L * rank_one
    sym = 0.5 * (grad + grad.T)
    return float(np.linalg.eigvalsh(sym - bound)[0])
