"""Exception types raised across the package."""


class AoiSchedError(Exception):
    pass


class ModelValidationError(AoiSchedError, ValueError):
    """A loop model has inconsistent dimensions or invalid parameters."""


class ConfigurationError(AoiSchedError, ValueError):
    """Mismatch between network, loops, policies or experiment settings."""


class PenaltyOverflowError(AoiSchedError, OverflowError):
    def __init__(self, loop_name, delta):
        self.loop_name = loop_name
        self.delta = delta
        super().__init__(f"penalty overflow for loop {loop_name!r} at age {delta}")


class InitializationError(AoiSchedError, RuntimeError):
    """Full-state estimator asked for inputs older than its history."""


class NonConvergenceError(AoiSchedError, RuntimeError):
    def __init__(self, sweeps, residual):
        self.sweeps = sweeps
        self.residual = residual
        super().__init__(f"value iteration did not converge after {sweeps} sweeps (residual {residual:g})")


class NumericError(AoiSchedError, ArithmeticError):
    pass


class PolicyFileError(AoiSchedError, IOError):
    """Malformed or truncated policy file."""
