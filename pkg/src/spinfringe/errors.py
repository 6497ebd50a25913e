"""Exception types shared across the package."""


class SpinFringeError(Exception):
    """Base class for all package-specific failures."""


class NonConvergedError(SpinFringeError):
    """Pulse-map fixed-point iteration failed to reach tolerance."""


class NoConvergenceError(SpinFringeError):
    """Steady-state relaxation exceeded its integration-time cap."""

    def __init__(self, message: str, tau: float | None = None):
        super().__init__(message)
        self.tau = tau


class BracketEscapeError(SpinFringeError):
    """Relaxation trajectory left the configured search bracket."""

    def __init__(self, message: str, tau: float | None = None):
        super().__init__(message)
        self.tau = tau


class GridTooSmallError(SpinFringeError):
    """Probability density reached the edge of the solver grid."""


class CflViolationError(SpinFringeError):
    """Stable time step for the grid solver fell below the floor."""


class ConfigParseError(SpinFringeError):
    """Malformed configuration text."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ConfigValidationError(SpinFringeError):
    """Structurally valid configuration that violates an invariant."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f" (key '{key}'" + (f", line {line})" if line is not None else ")") if key else ""
        super().__init__(message + where)
        self.key = key
        self.line = line
