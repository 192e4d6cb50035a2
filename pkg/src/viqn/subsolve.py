"""Per-iteration subproblem solvers.

Every solver here is contract-first: it returns a point only after the
point passes the relevant acceptance test, which callers can re-verify
independently.

* bounded domains: projected extragradient on the model VI, stopped by
  :func:`check_condition` (the sup-based inexact acceptance condition);
* any domain: a tau-bisection ray search that reduces the model equation to
  shifted linear solves, used as a fast candidate generator;
* unconstrained min-max: ray search plus fixed-point refinement, stopped by
  the residual-norm criterion :func:`check_minmax_condition`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import factorial

import numpy as np

from .core import Domain, FullSpace, as_point, diameter, is_bounded, linear_sup, project
from .errors import BracketError, SubproblemError, UnboundedDomainError
from .jacobian import norm_bound, solve_shifted
from .model import ModelParams, condition_rhs, model_value

__all__ = [
    "ConditionCheck",
    "check_condition",
    "check_minmax_condition",
    "extragradient_subsolve",
    "RaySearchResult",
    "ray_search_solve",
    "minmax_solve",
]

CONDITION_SLACK = 1e-12


@dataclass(frozen=True)
class ConditionCheck:
    ok: bool
    lhs: float
    rhs: float


def check_condition(mp: ModelParams, dom: Domain, x_next) -> ConditionCheck:
    """Inexact acceptance condition on a bounded domain.

    lhs = sup over the domain of <model(x_next), x_next - x>; rhs is the
    order-p polynomial in ||x_next - v||.
    """
    if not is_bounded(dom):
        raise UnboundedDomainError("the sup-based condition needs a bounded domain")
    x_next = as_point(x_next)
    step = float(np.linalg.norm(x_next - mp.v))
    lhs = linear_sup(dom, model_value(mp, x_next), x_next)
    rhs = condition_rhs(mp, step)
    return ConditionCheck(lhs <= rhs + CONDITION_SLACK, lhs, rhs)


def check_minmax_condition(mp: ModelParams, z, tau_tol: float) -> ConditionCheck:
    """Residual-norm acceptance test for the unconstrained min-max subproblem:

    ||model(z)|| <= tau_tol * min(L/2 ||z-v||^2 + delta ||z-v||, ||F(v)||).
    """
    z = as_point(z)
    step = float(np.linalg.norm(z - mp.v))
    lhs = float(np.linalg.norm(model_value(mp, z)))
    rhs = tau_tol * min(0.5 * mp.L * step**2 + mp.delta * step, float(np.linalg.norm(mp.Fv)))
    return ConditionCheck(lhs <= rhs + CONDITION_SLACK, lhs, rhs)


def _model_lipschitz_bound(mp: ModelParams, tau_max: float) -> float:
    """Crude Lipschitz bound for the model over steps up to tau_max."""
    base = norm_bound(mp.jac)
    if mp.p == 2:
        return base + mp.eta * mp.delta + 10.0 * mp.L * tau_max
    for i in range(1, mp.p):
        base += mp.etas[i - 1] * mp.deltas[i - 1] / factorial(i) * i * tau_max ** (i - 1)
        if i >= 2:
            # probe the i-th derivative along the anchor-unit direction
            u = np.ones(mp.dim) / math.sqrt(mp.dim)
            base += float(np.linalg.norm(mp.contractions(i, u))) * i * tau_max ** (i - 1)
    base += 5.0 * mp.L / factorial(mp.p - 1) * mp.p * tau_max ** (mp.p - 1)
    return base


def extragradient_subsolve(
    mp: ModelParams,
    dom: Domain,
    max_iters: int = 2000,
    step0: float | None = None,
    x0=None,
) -> tuple[np.ndarray, int]:
    """Projected extragradient on the (monotone) model VI with verified stopping.

    Order 2 uses one conservative constant step from the global Lipschitz
    bound.  Higher orders first try steps sized to the warm start's local
    scale (the global bound is loose by a factor ~ D^(p-2) there) and fall
    back to the provably safe step, splitting the iteration budget across
    the ladder.  Returns the first iterate passing :func:`check_condition`
    and the inner-iteration count; raises :class:`SubproblemError` carrying
    the best lhs/rhs ratio when the budget runs out, which usually signals
    a misconfigured smoothness constant or inexactness level.
    """
    tau_max = diameter(dom)
    x = project(dom, mp.v if x0 is None else as_point(x0))
    if step0 is not None:
        ladder = [step0]
    elif mp.p == 2:
        ladder = [1.0 / (2.0 * (_model_lipschitz_bound(mp, tau_max) + 1e-12))]
    else:
        scale = max(2.0 * float(np.linalg.norm(x - mp.v)), 1e-3 * tau_max)
        scales = []
        while scale < tau_max:
            scales.append(scale)
            scale *= 8.0
        scales.append(tau_max)
        ladder = [1.0 / (2.0 * (_model_lipschitz_bound(mp, t) + 1e-12)) for t in scales]
    per_trial = max(1, max_iters // len(ladder))
    best_ratio = math.inf
    spent = 0
    for trial, gamma in enumerate(ladder):
        budget = per_trial if trial < len(ladder) - 1 else max_iters - spent
        for _ in range(budget + 1):
            chk = check_condition(mp, dom, x)
            if chk.ok:
                return x, spent
            best_ratio = min(best_ratio, chk.lhs / max(chk.rhs, 1e-300))
            if spent >= max_iters:
                break
            y = project(dom, x - gamma * model_value(mp, x))
            x = project(dom, x - gamma * model_value(mp, y))
            spent += 1
        if spent >= max_iters:
            break
    raise SubproblemError(
        f"extragradient subsolver exhausted {max_iters} iterations "
        f"(best lhs/rhs ratio {best_ratio:.3g}); check L and delta",
        iterations=max_iters,
        best_ratio=best_ratio,
    )


@dataclass(frozen=True)
class RaySearchResult:
    y: np.ndarray
    tau: float
    upsilon: float
    solve_calls: int


def ray_search_solve(
    g,
    J,
    eta: float,
    delta: float,
    L: float,
    dom: Domain,
    v,
    eps: float | None = None,
    tau_max: float | None = None,
) -> RaySearchResult:
    """Bisection on the step norm tau for the shifted-solve candidate

        y_tau = project(dom, v - (J + (eta delta + 5 L tau) I)^{-1} g),

    accepting tau with |tau - ||y_tau - v||| <= eps.  tau - ||y_tau - v|| is
    <= 0 at tau = 0 and the bracket [0, tau_max] is required to contain a
    sign change; on unbounded domains tau_max doubles up to 8 times before
    :class:`BracketError` is raised.  Total shifted solves stay within
    ceil(log2(tau_max / eps)) + 2.
    """
    g = as_point(g)
    v = as_point(v)
    if tau_max is None:
        tau_max = diameter(dom)  # raises on full space: caller must supply a bound
    if eps is None:
        eps = 1e-9 * max(1.0, tau_max)
    if not eps > 0:
        raise ValueError("eps must be positive")

    if float(np.linalg.norm(g)) == 0.0:
        return RaySearchResult(project(dom, v), 0.0, 0.0, 0)

    calls = 0

    def candidate(tau: float) -> tuple[np.ndarray, float]:
        nonlocal calls
        calls += 1
        y = project(dom, v - solve_shifted(J, eta * delta + 5.0 * L * tau, g))
        return y, tau - float(np.linalg.norm(y - v))

    lo = 0.0  # phi(0) = -||y_0 - v|| <= 0 without evaluating
    hi = float(tau_max)
    y_hi, phi_hi = candidate(hi)
    doubles = 0
    while phi_hi < 0.0:
        if is_bounded(dom) or doubles >= 8:
            raise BracketError(
                f"no sign change on [0, {hi:.3g}] (phi(hi) = {phi_hi:.3g}); tau_max too small"
            )
        lo = hi
        hi *= 2.0
        doubles += 1
        y_hi, phi_hi = candidate(hi)

    if phi_hi <= eps:
        return RaySearchResult(y_hi, hi, abs(phi_hi), calls)

    best = (y_hi, hi, abs(phi_hi))
    budget = math.ceil(math.log2(hi / eps)) + 2
    while calls < budget:
        mid = 0.5 * (lo + hi)
        y_mid, phi_mid = candidate(mid)
        if abs(phi_mid) <= eps:
            return RaySearchResult(y_mid, mid, abs(phi_mid), calls)
        if abs(phi_mid) < best[2]:
            best = (y_mid, mid, abs(phi_mid))
        if phi_mid > 0.0:
            hi = mid
        else:
            lo = mid
    raise SubproblemError(
        f"ray search stalled: best |tau - step| = {best[2]:.3g} > eps = {eps:.3g}",
        iterations=calls,
        best_ratio=best[2] / eps,
    )


def minmax_solve(
    mp: ModelParams,
    tau_tol: float = 0.5,
    refine_budget: int = 60,
    ray_eps: float | None = None,
    tau_max: float | None = None,
) -> tuple[np.ndarray, int]:
    """Solve the unconstrained model equation to the residual-norm criterion.

    Runs the ray search for a first candidate, then iterates the damped
    fixed point

        z <- v - (J + (eta delta + 5 L ||z - v||) I)^{-1} F(v)

    until :func:`check_minmax_condition` passes.  If the refinement stalls
    it re-runs the ray search once at a tighter tolerance.  Returns (z,
    shifted-solve count).
    """
    if not 0.0 < tau_tol < 1.0:
        raise ValueError("tau_tol must lie in (0, 1)")
    g = mp.Fv
    v = mp.v
    if float(np.linalg.norm(g)) == 0.0:
        return v.copy(), 0

    dom = FullSpace(mp.dim)
    sigma0 = mp.eta * mp.delta
    calls = 0
    if tau_max is None:
        if sigma0 > 0.0:
            # psi(0) upper-bounds the fixed-point step when psi is nonincreasing
            calls += 1
            tau_max = float(np.linalg.norm(solve_shifted(mp.jac, sigma0, g))) * (1.0 + 1e-9)
            tau_max = max(tau_max, 1e-12)
        else:
            tau_max = 1.0
    eps0 = ray_eps if ray_eps is not None else 1e-9 * max(1.0, tau_max)

    res = ray_search_solve(g, mp.jac, mp.eta, mp.delta, mp.L, dom, v, eps=eps0, tau_max=tau_max)
    calls += res.solve_calls
    z = res.y
    best_ratio = math.inf
    prev_lhs = math.inf
    retried = False
    for _ in range(refine_budget + 1):
        chk = check_minmax_condition(mp, z, tau_tol)
        if chk.ok:
            return z, calls
        best_ratio = min(best_ratio, chk.lhs / max(chk.rhs, 1e-300))
        if chk.lhs > 0.9 * prev_lhs and not retried:
            # stalled: locate the step norm more precisely before refining on
            retried = True
            res = ray_search_solve(
                g, mp.jac, mp.eta, mp.delta, mp.L, dom, v,
                eps=1e-3 * eps0, tau_max=tau_max,
            )
            calls += res.solve_calls
            z2 = res.y
            mp2_lhs = float(np.linalg.norm(model_value(mp, z2)))
            if mp2_lhs < chk.lhs:  # adopt only if it actually improves
                z = z2
                prev_lhs = math.inf
                continue
        prev_lhs = chk.lhs
        step = float(np.linalg.norm(z - mp.v))
        calls += 1
        z = v - solve_shifted(mp.jac, sigma0 + 5.0 * mp.L * step, g)
    raise SubproblemError(
        f"residual criterion unreachable in {refine_budget} refinements "
        f"(best lhs/rhs {best_ratio:.3g}); check delta and L",
        iterations=refine_budget,
        best_ratio=best_ratio,
    )
