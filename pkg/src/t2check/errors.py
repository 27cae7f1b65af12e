"""Exception types shared across the package."""


class T2CheckError(Exception):
    """Base class for all package errors."""


class ValidationError(T2CheckError):
    """Invalid construction input: geometry, weights, densities."""


class ParameterError(T2CheckError):
    """Out-of-range or inconsistent run parameters."""


class ParseError(T2CheckError):
    """Malformed or unreadable input file."""


class DomainError(T2CheckError):
    """Quantity undefined for the given input (e.g. a ratio at zero entropy)."""


class SolverError(T2CheckError):
    """An iterative solver failed to reach its tolerance.

    Carries the achieved residual so callers can report how far the run got.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
