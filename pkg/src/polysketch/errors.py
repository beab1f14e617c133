"""Exception types shared across the package."""


class PolysketchError(Exception):
    """Base class for all library errors."""


class InvalidDimensionError(PolysketchError):
    """An array has the wrong shape or a non power-of-two length where one is required."""


class InvalidParameterError(PolysketchError):
    """A numeric parameter is outside its admissible range."""


class DomainError(PolysketchError):
    """An input lies outside the mathematical domain of an operation."""


class OracleGuardError(PolysketchError):
    """A brute-force oracle was asked to run beyond its size guard.

    Oracles never silently approximate; they refuse instead.
    """


class ConvergenceError(PolysketchError):
    """An iterative solver hit its iteration cap.

    Carries the last residual so callers can inspect how close the run got.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PreconditionerError(PolysketchError):
    """QR-based preconditioner construction failed (rank-deficient sketch)."""


class UndefinedValueError(PolysketchError):
    """A statistic was requested for an empty range."""


class MatrixParseError(PolysketchError):
    """A matrix file could not be parsed. Carries the 1-based offending line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
