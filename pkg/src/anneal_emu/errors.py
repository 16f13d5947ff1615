"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """Raised when a request would exceed a configured size limit (e.g. 2**n state allocation)."""


class GraphParseError(ValueError):
    """Raised on malformed graph files; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateScheduleError(ValueError):
    """Raised when a schedule conversion is ill-posed (e.g. coincident switch times)."""


class DegenerateSpectrumError(ValueError):
    """Raised when a quantity is undefined because all energies coincide."""


class OptimizationError(RuntimeError):
    """Raised when an optimizer aborts (non-finite objective, or every restart failed)."""
