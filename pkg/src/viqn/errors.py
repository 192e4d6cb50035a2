"""Exception types shared across the solver stack."""


class UnboundedDomainError(ValueError):
    """An operation needing a bounded feasible set was called on full space."""


class CapabilityError(RuntimeError):
    """The operator oracle does not provide the requested derivative information."""


class IllConditionedJacobianError(RuntimeError):
    """A shifted low-rank solve hit a (numerically) singular inner system."""


class SubproblemError(RuntimeError):
    """An inner solver exhausted its budget without meeting its acceptance test.

    Carries diagnostics so the caller can tell a misconfigured smoothness
    constant from a genuinely hard instance.
    """

    def __init__(self, message, iterations=None, best_ratio=None):
        super().__init__(message)
        self.iterations = iterations
        self.best_ratio = best_ratio


class BracketError(RuntimeError):
    """Bisection could not bracket a root (search interval too small)."""


class InexactnessViolation(RuntimeError):
    """A per-iteration Jacobian accuracy check failed in exact mode."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ConfigError(ValueError):
    """A run or suite configuration failed validation."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
