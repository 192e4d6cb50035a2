"""Solvers for monotone and Minty variational inequalities with inexact
second-order information, plus a deterministic benchmark harness."""

from .core import Ball, Box, FullSpace, diameter, dual_step, linear_sup, project
from .errors import (
    BracketError,
    CapabilityError,
    ConfigError,
    IllConditionedJacobianError,
    InexactnessViolation,
    SubproblemError,
    UnboundedDomainError,
)
from .jacobian import (
    LowRankJacobian,
    PairBuffer,
    broyden_build,
    delta_bound,
    pairs_from_history,
    pairs_from_jvp,
)
from .metrics import affine_ball_solution, gap_affine_ball, rate_fit, residue
from .model import ModelParams, model_value, monotonicity_margin, taylor_value, tensor_model_value
from .operators import (
    AffineOperator,
    ComponentwiseCubic,
    ComponentwiseQuadratic,
    CubicBilinearOperator,
    Operator,
    certify_minty,
    finite_diff_jacobian,
    make_affine,
    restricted_gap,
)
from .solve import (
    JacobianSpec,
    SolverConfig,
    Trace,
    extragradient,
    first_order_solve,
    lambda_select,
    restart_schedule,
    solve_minmax,
    solve_vi,
    solve_vi_restarted,
    solve_vi_tensor,
)
from .subsolve import (
    check_condition,
    check_minmax_condition,
    extragradient_subsolve,
    minmax_solve,
    ray_search_solve,
)

__version__ = "0.1.0"
