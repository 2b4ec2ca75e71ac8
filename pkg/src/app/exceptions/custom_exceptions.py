from typing import Any, Optional

# ─── Exit Codes ──────────────────────────────────────────────
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3


class StorageValuationException(Exception):
    """
    Base exception for all storage-valuation errors.
    Carries the process exit code the CLI error boundary maps it to.
    """
    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_NUMERIC_FAILURE,
        details: Optional[Any] = None
    ):
        super().__init__(message)
        self.message = message
        self.exit_code = exit_code
        self.details = details

    def to_dict(self) -> dict:
        return {"message": self.message, "details": self.details}


class ConfigException(StorageValuationException):
    """Raised when a run configuration cannot be loaded or parsed."""
    def __init__(self, message: str = "Invalid configuration", details: Any = None):
        super().__init__(message, exit_code=EXIT_CONFIG_ERROR, details=details)


class ParameterDomainException(StorageValuationException):
    """Raised when a model parameter lies outside its admissible domain."""
    def __init__(self, message: str = "Parameter out of domain", details: Any = None):
        super().__init__(message, exit_code=EXIT_CONFIG_ERROR, details=details)


class GridException(StorageValuationException):
    """Raised when an energy level is not a point of the energy grid."""
    def __init__(self, message: str = "Energy level is not on the grid", details: Any = None):
        super().__init__(message, exit_code=EXIT_CONFIG_ERROR, details=details)


class ActionException(StorageValuationException):
    """Raised when an action is not admissible at the given energy level."""
    def __init__(self, message: str = "Action not allowed", details: Any = None):
        super().__init__(message, exit_code=EXIT_CONFIG_ERROR, details=details)


class SpecValidationException(StorageValuationException):
    """Raised when a contract specification violates one or more invariants."""
    def __init__(self, errors: list, details: Any = None):
        joined = "; ".join(f"{err['field']}: {err['message']}" for err in errors)
        super().__init__(
            f"Contract specification is invalid: {joined}",
            exit_code=EXIT_CONFIG_ERROR,
            details=details if details is not None else errors
        )
        self.errors = errors


class StatisticsException(StorageValuationException):
    """Raised when a statistic is requested without enough samples."""
    def __init__(self, message: str = "Not enough samples", details: Any = None):
        super().__init__(message, exit_code=EXIT_CONFIG_ERROR, details=details)


class NumericException(StorageValuationException):
    """Raised for non-finite coefficients or non-converging root finds."""
    def __init__(
        self,
        message: str = "Numeric failure",
        time_index: Optional[int] = None,
        energy_level: Optional[float] = None,
        details: Any = None
    ):
        if time_index is not None:
            message = f"{message} (m={time_index}, e={energy_level})"
        super().__init__(message, exit_code=EXIT_NUMERIC_FAILURE, details=details)
        self.time_index = time_index
        self.energy_level = energy_level


class SingularDerivativeException(NumericException):
    """Raised when dS/dX vanishes where the Greeks chain rule needs its inverse."""
    def __init__(self, message: str = "Map derivative vanishes", details: Any = None):
        super().__init__(message, details=details)


class ResultWriteException(StorageValuationException):
    """Raised when a report file cannot be written."""
    def __init__(self, message: str = "Failed to write results", details: Any = None):
        super().__init__(message, exit_code=EXIT_NUMERIC_FAILURE, details=details)
