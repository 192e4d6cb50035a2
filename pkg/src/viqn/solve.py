"""Top-level algorithms.

All second-order variants share one dual-extrapolation loop:

    v_{k+1}  = argmax over the domain of <s_k, v - x_0> - ||v - x_0||^2 / 2
    x_{k+1}  = approximate solution of the regularized-model subproblem
    lambda_{k+1} chosen inside a fixed bracket of 1 / (step-dependent scale)
    s_{k+1}  = s_k - lambda_{k+1} F(x_{k+1})

Bounded domains use the sup-based acceptance condition; full space switches
to the residual-norm criterion and drops the projection.  On top of the
loop sit the restarted variant for strongly monotone problems, the tensor
(order-p) variant, a classical extragradient baseline, and a first-order
baseline obtained with the zero Jacobian.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from math import factorial

import numpy as np

from .core import Domain, FullSpace, as_point, diameter, dual_step, is_bounded, project
from .errors import (
    BracketError,
    CapabilityError,
    ConfigError,
    IllConditionedJacobianError,
    InexactnessViolation,
    SubproblemError,
)
from .jacobian import (
    PairBuffer,
    apply_jacobian,
    broyden_build,
    delta_bound,
    materialize,
    pairs_from_history,
    pairs_from_jvp,
)
from .model import ModelParams
from .subsolve import check_condition, extragradient_subsolve, minmax_solve, ray_search_solve

__all__ = [
    "SolverConfig",
    "JacobianSpec",
    "Trace",
    "lambda_select",
    "tensor_bracket",
    "solve_vi",
    "solve_vi_tensor",
    "solve_vi_restarted",
    "solve_minmax",
    "extragradient",
    "first_order_solve",
    "restart_schedule",
    "measured_delta",
    "BRACKET_MAIN",
    "BRACKET_MINMAX",
]

BRACKET_MAIN = (1.0 / 32.0, 1.0 / 22.0)
BRACKET_MINMAX = (1.0 / 16.0, 1.0 / 12.0)


def tensor_bracket(p: int) -> tuple[float, float]:
    return (1.0 / (4.0 * (5 * p - 2)), 1.0 / (2.0 * (5 * p + 1)))


# Fixed interior points: the reciprocal integer nearest the midpoint for the
# two named brackets, the arithmetic midpoint otherwise.
_INTERIOR = {BRACKET_MAIN: 1.0 / 27.0, BRACKET_MINMAX: 1.0 / 14.0}


def lambda_select(
    L: float,
    step_norm: float,
    beta: float,
    bracket: tuple[float, float] = BRACKET_MAIN,
    c: float | None = None,
    step_coeff: float = 0.5,
    denom: float | None = None,
) -> float:
    """Deterministic dual step size with lambda * denom inside the bracket.

    ``denom`` defaults to step_coeff * L * step_norm + beta (step_coeff is
    1/2 for the main bracket, 1 for the min-max bracket).  Raises on a zero
    denominator, which happens only at a stationary anchor with delta = 0;
    the caller then terminates with the current point as the solution.
    """
    if denom is None:
        denom = step_coeff * L * step_norm + beta
    if not denom > 0.0:
        raise ValueError("zero lambda denominator: stationary anchor with delta = 0")
    lo, hi = bracket
    if c is None:
        c = _INTERIOR.get(bracket, 0.5 * (lo + hi))
    if not lo <= c <= hi:
        raise ValueError(f"interior point {c} outside bracket [{lo}, {hi}]")
    lam = c / denom
    assert lo * (1.0 - 1e-12) <= lam * denom <= hi * (1.0 + 1e-12)
    return lam


@dataclass
class SolverConfig:
    """Algorithm parameters shared by the dual-extrapolation variants."""

    T: int
    L: float
    delta: float | None = None         # None: take the Jacobian provider's level
    eta: float = 10.0
    beta_mode: str = "constant-delta"  # or "exact-mode" (verified per iteration)
    opt: int = 0                       # 0 weighted average, 1 last, 2 argmin step
    p: int = 2
    deltas: tuple[float, ...] | None = None
    etas: tuple[float, ...] | None = None
    lambda_c: float | None = None
    subsolve_max_iters: int = 2000
    subsolve_step0: float | None = None
    ray_eps: float | None = None
    tau_tol: float = 0.5
    refine_budget: int = 60
    seed: int = 0
    early_exit_tol: float = 1e-14
    exact_mode_retries: int = 1
    store_points: bool = False
    store_jacobians: bool = False

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("iteration budget must be >= 1", field="T")
        if self.opt not in (0, 1, 2):
            raise ConfigError("opt must be 0, 1 or 2", field="opt")
        if self.beta_mode not in ("constant-delta", "exact-mode"):
            raise ConfigError(f"unknown beta mode {self.beta_mode!r}", field="beta_mode")
        if self.p < 2:
            raise ConfigError("model order must be >= 2", field="p")
        if not 0.0 < self.tau_tol < 1.0:
            raise ConfigError("tau_tol must lie in (0, 1)", field="tau_tol")
        if self.L < 0 or (self.delta is not None and self.delta < 0):
            raise ConfigError("L and delta must be nonnegative", field="L")


@dataclass
class JacobianSpec:
    """How the loop obtains its (inexact) Jacobian at each anchor."""

    kind: str = "exact"  # exact | perturbed | zero | broyden | damped-broyden
    m: int = 20
    j0: float = 0.0
    strategy: str = "history"  # history | jvp-sampling
    delta_mode: str = "certified"  # certified | measured
    L0: float | None = None
    perturb_delta: float = 0.0

    def __post_init__(self):
        kinds = ("exact", "perturbed", "zero", "broyden", "damped-broyden")
        if self.kind not in kinds:
            raise ConfigError(f"unknown Jacobian kind {self.kind!r}", field="kind")
        if self.strategy not in ("history", "jvp-sampling"):
            raise ConfigError(f"unknown pair strategy {self.strategy!r}", field="strategy")
        if self.delta_mode not in ("certified", "measured"):
            raise ConfigError(f"unknown delta mode {self.delta_mode!r}", field="delta_mode")
        if not 0 <= self.m <= 64:
            raise ConfigError("memory must lie in [0, 64]", field="m")
        if self.kind == "zero" and self.L0 is None:
            raise ConfigError("zero Jacobian needs L0 (it doubles as delta)", field="L0")

    @property
    def quasi_newton(self) -> bool:
        return self.kind in ("broyden", "damped-broyden")


class Trace:
    """Per-iteration records of one solver run.

    Scalar columns are always kept; iterates, operator values and Jacobian
    handles are kept only when the config asks for them (verification runs).
    """

    def __init__(self, metric_name: str = "", store_points: bool = False, store_jacobians: bool = False):
        self.metric_name = metric_name
        self.k: list[int] = []
        self.lam: list[float] = []
        self.step_norm: list[float] = []
        self.metric: list[float] = []
        self.op_evals: list[int] = []
        self.jvp_evals: list[int] = []
        self.wall: list[float] = []
        self.points_v: list[np.ndarray] | None = [] if store_points else None
        self.points_x: list[np.ndarray] | None = [] if store_points else None
        self.f_x: list[np.ndarray] | None = [] if store_points else None
        self.jacobians: list | None = [] if store_jacobians else None
        self.deltas: list[float] = []
        self.output: np.ndarray | None = None
        self.mode: int | None = None
        self.early_exit: bool = False
        self.extras: dict = {}

    def append(self, k, lam, step_norm, metric, op_evals, jvp_evals, wall):
        if not lam > 0.0:
            raise ValueError("lambda must be strictly positive")
        if self.op_evals and (op_evals < self.op_evals[-1] or jvp_evals < self.jvp_evals[-1]):
            raise ValueError("evaluation counters must be nondecreasing")
        self.k.append(int(k))
        self.lam.append(float(lam))
        self.step_norm.append(float(step_norm))
        self.metric.append(float(metric))
        self.op_evals.append(int(op_evals))
        self.jvp_evals.append(int(jvp_evals))
        self.wall.append(float(wall))

    def __len__(self) -> int:
        return len(self.k)


def measured_delta(op, v, J) -> float:
    """Spectral norm of dF(v) minus the handle, materialized densely."""
    return float(np.linalg.norm(op.dense_jacobian(v) - materialize(J, op.dim), 2))


def _spectral_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    E = rng.standard_normal((d, d))
    return E / np.linalg.norm(E, 2)


class _JacobianProvider:
    """Builds the per-anchor Jacobian handle and resolves its delta level."""

    def __init__(self, spec: JacobianSpec, op, cfg: SolverConfig, rng: np.random.Generator):
        self.spec = spec
        self.op = op
        self.cfg = cfg
        self.rng = rng
        # one fixed perturbation per run keeps ||dF - J|| = perturb_delta exact
        self._perturbation = (
            spec.perturb_delta * _spectral_unit(rng, op.dim) if spec.kind == "perturbed" else None
        )

    def build(self, v, history):
        spec = self.spec
        if spec.kind == "exact":
            return self.op.dense_jacobian(v), self._delta(v, None, 0.0)
        if spec.kind == "perturbed":
            J = self.op.dense_jacobian(v) + self._perturbation
            return J, self._delta(v, J, spec.perturb_delta)
        if spec.kind == "zero":
            return None, self._delta(v, None, spec.L0)
        if spec.strategy == "jvp-sampling":
            pairs = pairs_from_jvp(self.op, v, spec.m, self.rng)
        else:
            m_eff = max(0, min(spec.m, len(history) - 1))
            pairs = pairs_from_history(history, m_eff) if m_eff else PairBuffer([])
        J = broyden_build(np.full(self.op.dim, spec.j0), pairs, damped=spec.kind == "damped-broyden")
        return J, self._delta(v, J, None)

    def _delta(self, v, J, default):
        if self.cfg.delta is not None:
            return self.cfg.delta
        if default is not None:
            return default
        if self.spec.delta_mode == "measured":
            return measured_delta(self.op, v, J)
        if self.spec.L0 is None:
            raise ConfigError("certified delta needs L0 or an explicit delta", field="L0")
        return delta_bound(J, self.spec.L0)


def _make_model(cfg: SolverConfig, op, v, Fv, J, delta: float) -> ModelParams:
    if cfg.p == 2:
        return ModelParams(v=v, Fv=Fv, jac=J, eta=cfg.eta, delta=delta, L=cfg.L)
    deltas = cfg.deltas if cfg.deltas is not None else (delta,) + (0.0,) * (cfg.p - 2)
    etas = cfg.etas if cfg.etas is not None else (5.0 * cfg.p,) * (cfg.p - 1)
    if op.max_derivative_order < cfg.p - 1:
        raise CapabilityError(
            f"order-{cfg.p} model needs derivatives up to {cfg.p - 1}, "
            f"oracle provides {op.max_derivative_order}"
        )

    def contractions(i, h, _v=v):
        return op.contraction(_v, i, h)

    return ModelParams(
        v=v, Fv=Fv, jac=J, eta=etas[0], delta=deltas[0], L=cfg.L,
        p=cfg.p, deltas=tuple(deltas), etas=tuple(etas), contractions=contractions,
    )


def _tensor_denominator(cfg: SolverConfig, mp: ModelParams, step: float) -> float:
    denom = cfg.L / factorial(cfg.p) * step ** (cfg.p - 1)
    deltas = mp.deltas if mp.deltas is not None else (mp.delta,)
    for i in range(1, cfg.p):
        denom += deltas[i - 1] / factorial(i) * step ** (i - 1)
    return denom


def _bounded_subsolve(mp: ModelParams, dom: Domain, cfg: SolverConfig, warm=None) -> np.ndarray:
    """Ray-search candidate with condition re-verification, extragradient fallback."""
    if mp.p == 2:
        eps = cfg.ray_eps if cfg.ray_eps is not None else 1e-9 * max(1.0, diameter(dom))
        for _ in range(3):
            try:
                res = ray_search_solve(mp.Fv, mp.jac, mp.eta, mp.delta, mp.L, dom, mp.v, eps=eps)
            except (BracketError, SubproblemError, IllConditionedJacobianError):
                break
            if check_condition(mp, dom, res.y).ok:
                return res.y
            eps *= 1e-3
            if eps < 1e-15:
                break
    x, _ = extragradient_subsolve(mp, dom, cfg.subsolve_max_iters, cfg.subsolve_step0, x0=warm)
    return x


def _verify_controlled_inexactness(op, J, v, h, L: float) -> bool:
    """Check ||(dF(v) - J)[h]|| <= (L/2) ||h||^2 with one exact jvp."""
    err = op.jvp(v, h) - apply_jacobian(J, h)
    return float(np.linalg.norm(err)) <= 0.5 * L * float(h @ h) + 1e-12


def _run_loop(op, dom, cfg, jac, x0, metric, metric_name, tensor) -> tuple[np.ndarray, Trace]:
    minmax = not is_bounded(dom)
    if minmax and cfg.p != 2:
        raise ConfigError("the order-p variant needs a bounded domain", field="p")
    rng = np.random.default_rng(cfg.seed)
    provider = _JacobianProvider(jac, op, cfg, rng)
    x0 = project(dom, as_point(x0) if x0 is not None else np.zeros(op.dim))
    trace = Trace(metric_name, cfg.store_points, cfg.store_jacobians)
    trace.mode = cfg.opt

    if tensor:
        bracket = tensor_bracket(cfg.p)
    else:
        bracket = BRACKET_MINMAX if minmax else BRACKET_MAIN

    # rolling (z, F(z)) window of solution iterates feeding history-strategy
    # pairs: s_i = z_{i+1} - z_i, y_i = F(z_{i+1}) - F(z_i)
    history: list = []
    keep_history = jac.quasi_newton and jac.strategy == "history"
    s = np.zeros(op.dim)
    lam_sum = 0.0
    avg = np.zeros(op.dim)
    best_step = math.inf
    best_x = x0
    last_x = x0
    prev_x = None
    t_start = time.perf_counter()

    for k in range(1, cfg.T + 1):
        v = dual_step(dom, x0, s)
        Fv = op(v)
        x = None
        for attempt in range(cfg.exact_mode_retries + 1):
            J, delta_k = provider.build(v, history)
            mp = _make_model(cfg, op, v, Fv, J, delta_k)
            try:
                if minmax:
                    x, _ = minmax_solve(mp, cfg.tau_tol, cfg.refine_budget, cfg.ray_eps)
                else:
                    x = _bounded_subsolve(mp, dom, cfg, warm=prev_x)
            except SubproblemError as exc:
                raise SubproblemError(
                    f"iteration {k}: {exc}", iterations=exc.iterations, best_ratio=exc.best_ratio
                ) from exc
            if cfg.beta_mode != "exact-mode":
                break
            if _verify_controlled_inexactness(op, J, v, x - v, cfg.L):
                break
            if attempt == cfg.exact_mode_retries:
                raise InexactnessViolation(
                    f"iteration {k}: Jacobian error along the step exceeds (L/2)||step||^2",
                    iteration=k,
                )
        Fx = op(x)
        if keep_history:
            history.append((x, Fx))
            if len(history) > jac.m + 2:
                del history[: len(history) - (jac.m + 2)]
        h = x - v
        step = float(np.linalg.norm(h))

        if trace.points_v is not None:
            trace.points_v.append(v.copy())
            trace.points_x.append(x.copy())
            trace.f_x.append(Fx.copy())
        if trace.jacobians is not None:
            trace.jacobians.append(J)
        trace.deltas.append(float(delta_k))

        if float(np.linalg.norm(Fx)) <= cfg.early_exit_tol:
            # exact stationary point: optimal under every output mode
            trace.early_exit = True
            trace.output = x
            return x, trace

        beta = 0.5 * cfg.L * step if cfg.beta_mode == "exact-mode" else delta_k
        if tensor:
            denom = _tensor_denominator(cfg, mp, step)
        elif minmax:
            denom = cfg.L * step + beta
        else:
            denom = 0.5 * cfg.L * step + beta
        if not denom > 0.0:
            trace.early_exit = True
            trace.output = x
            return x, trace
        lam = lambda_select(cfg.L, step, beta, bracket, c=cfg.lambda_c, denom=denom)

        s = s - lam * Fx
        lam_sum += lam
        avg = avg + lam * x
        if step < best_step:
            best_step = step
            best_x = x
        last_x = x
        prev_x = x

        m_val = metric(x) if metric is not None else math.nan
        trace.append(k, lam, step, m_val, op.eval_count, op.jvp_count, time.perf_counter() - t_start)

    if cfg.opt == 0:
        output = avg / lam_sum
    elif cfg.opt == 1:
        output = last_x
    else:
        output = best_x
    trace.output = output
    return output, trace


def solve_vi(op, dom, cfg: SolverConfig, jac: JacobianSpec | None = None, x0=None,
             metric=None, metric_name="") -> tuple[np.ndarray, Trace]:
    """Dual extrapolation with an inexact Jacobian model (order 2).

    Bounded domains use the sup-based acceptance condition; a full-space
    domain switches to the unconstrained min-max specialization.
    """
    if cfg.p != 2:
        raise ConfigError("use solve_vi_tensor for model order > 2", field="p")
    return _run_loop(op, dom, cfg, jac or JacobianSpec(), x0, metric, metric_name, tensor=False)


def solve_vi_tensor(op, dom, cfg: SolverConfig, jac: JacobianSpec | None = None, x0=None,
                    metric=None, metric_name="") -> tuple[np.ndarray, Trace]:
    """Order-p variant: tensor model, per-order regularizers, order-p bracket."""
    return _run_loop(op, dom, cfg, jac or JacobianSpec(), x0, metric, metric_name, tensor=True)


def solve_minmax(op, cfg: SolverConfig, jac: JacobianSpec | None = None, z0=None,
                 metric=None, metric_name="") -> tuple[np.ndarray, Trace]:
    """Unconstrained min-max specialization (residual-criterion subproblem)."""
    return _run_loop(op, FullSpace(op.dim), cfg, jac or JacobianSpec(), z0, metric, metric_name, tensor=False)


def first_order_solve(op, dom, cfg: SolverConfig, L0: float, x0=None,
                      metric=None, metric_name="") -> tuple[np.ndarray, Trace]:
    """First-order baseline: the same loop with the zero Jacobian and delta = L0."""
    jac = JacobianSpec(kind="zero", L0=L0)
    if cfg.delta is None:
        cfg = replace(cfg, delta=L0)
    return _run_loop(op, dom, cfg, jac, x0, metric, metric_name, tensor=False)


def restart_schedule(L: float, mu: float, delta: float, R: float, n: int) -> list[int]:
    """Stage lengths T_i = ceil(max(2^(14/3) (L R_{i-1})^(2/3) / mu^(2/3), 2^7 delta / mu))."""
    out = []
    for i in range(1, n + 1):
        R_prev = R / 2.0 ** (i - 1)
        t_smooth = 2.0 ** (14.0 / 3.0) * (L * R_prev) ** (2.0 / 3.0) / mu ** (2.0 / 3.0)
        t_inexact = 2.0**7 * delta / mu
        out.append(max(1, math.ceil(max(t_smooth, t_inexact))))
    return out


def solve_vi_restarted(op, dom, cfg: SolverConfig, mu: float, target_eps: float | None = None,
                       n_stages: int | None = None, jac: JacobianSpec | None = None, x0=None,
                       metric=None, metric_name="") -> tuple[np.ndarray, Trace]:
    """Restarted runs for strongly monotone problems (linear convergence).

    Each stage runs the averaged-output solver for the scheduled number of
    iterations, halving the distance bound R_i = R / 2^i; stage results are
    recorded in ``trace.extras["stages"]``.  The stage count defaults to
    ceil(log2(R / target_eps)).
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    R = diameter(dom)
    if n_stages is None:
        if target_eps is None or not 0 < target_eps < R:
            raise ValueError("need target_eps in (0, R) or an explicit stage count")
        n_stages = max(1, math.ceil(math.log2(R / target_eps)))
    jac = jac or JacobianSpec()

    if cfg.delta is not None:
        delta = cfg.delta
    elif jac.kind == "exact":
        delta = 0.0
    elif jac.kind == "perturbed":
        delta = jac.perturb_delta
    elif jac.kind == "zero":
        delta = jac.L0
    elif jac.L0 is not None:
        delta = 2.0 * jac.L0 if jac.kind == "damped-broyden" else (jac.m + 2) * jac.L0
    else:
        raise ConfigError("restart schedule needs delta or L0", field="delta")

    schedule = restart_schedule(cfg.L, mu, delta, R, n_stages)
    z = project(dom, as_point(x0) if x0 is not None else np.zeros(op.dim))
    trace = Trace(metric_name, cfg.store_points, cfg.store_jacobians)
    trace.mode = 0
    trace.extras["stages"] = []
    for i, T_i in enumerate(schedule, start=1):
        stage_cfg = replace(cfg, T=T_i, opt=0, beta_mode="constant-delta", seed=cfg.seed + i)
        z, stage = _run_loop(op, dom, stage_cfg, jac, z, metric, metric_name, tensor=False)
        offset = trace.k[-1] if trace.k else 0
        for j in range(len(stage)):
            trace.append(offset + stage.k[j], stage.lam[j], stage.step_norm[j], stage.metric[j],
                         stage.op_evals[j], stage.jvp_evals[j], stage.wall[j])
        trace.extras["stages"].append({"i": i, "T": T_i, "R": R / 2.0**i, "z": z.copy()})
        if stage.early_exit:
            break
    trace.output = z
    return z, trace


def extragradient(op, dom, lr: float, T: int, x0=None, metric=None, metric_name="") -> tuple[np.ndarray, Trace]:
    """Classical two-call extragradient baseline (projects on bounded domains)."""
    if not lr > 0:
        raise ValueError("learning rate must be positive")
    x = project(dom, as_point(x0) if x0 is not None else np.zeros(op.dim))
    trace = Trace(metric_name)
    trace.mode = 1
    t_start = time.perf_counter()
    for k in range(1, T + 1):
        y = project(dom, x - lr * op(x))
        x_new = project(dom, x - lr * op(y))
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        m_val = metric(x) if metric is not None else math.nan
        trace.append(k, lr, step, m_val, op.eval_count, op.jvp_count, time.perf_counter() - t_start)
    trace.output = x
    return x, trace
