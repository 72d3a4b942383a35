"""Exception types shared across the package.

Invalid arguments raise plain ``ValueError``; the classes below mark
numerical events that callers may want to catch and handle (excluding a
Monte Carlo realization, aborting a run with a dedicated exit code).
"""


class SpdefemError(Exception):
    """Base class for package-specific runtime failures."""


class ConfigError(SpdefemError):
    """Malformed or inconsistent run configuration."""


class SolverConvergenceError(SpdefemError):
    """Iterative linear solver failed to reach the requested residual.

    Carries the achieved relative residual so callers can report how far
    off the solve ended up.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericalBlowupError(SpdefemError):
    """A time step produced a nonfinite state.

    The failing step index is recorded so realizations can be excluded
    from statistics with a precise diagnostic.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ExperimentFailure(SpdefemError):
    """Too many excluded realizations or an otherwise unusable experiment."""
