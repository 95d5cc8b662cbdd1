# ============================================================================
# FILE: utils/exceptions.py (Exception Hierarchy)
# ============================================================================


class APIError(Exception):
    """Raised by route helpers to return a specific HTTP error through @handle_errors."""

    def __init__(self, message: str, error_code: str = "GENERIC_ERROR", http_status: int = 400) -> None:
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.http_status = http_status


class SimulationError(Exception):
    """Base class for errors raised by the phy package.

    Subclasses fix the error code, the HTTP status used by the REST layer and
    the process exit code used by the CLI.
    """

    error_code = "SIMULATION_ERROR"
    http_status = 500
    exit_code = 3

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class ConfigError(SimulationError):
    """Invalid or inconsistent configuration."""

    error_code = "CONFIG_ERROR"
    http_status = 400
    exit_code = 2


class InputError(SimulationError):
    """Length or dimension mismatch in operation inputs."""

    error_code = "INPUT_ERROR"
    http_status = 400
    exit_code = 2


class DomainError(SimulationError):
    """Argument outside the domain of a function (e.g. non-positive offset)."""

    error_code = "DOMAIN_ERROR"
    http_status = 400
    exit_code = 2


class EstimationError(SimulationError):
    """An estimator cannot produce a result from the data it was given."""

    error_code = "ESTIMATION_ERROR"
    http_status = 422
    exit_code = 3


class AnalysisError(SimulationError):
    """An analysis search found no admissible operating point."""

    error_code = "ANALYSIS_ERROR"
    http_status = 422
    exit_code = 3


class NumericalError(SimulationError):
    """Numerical failure inside a simulation run."""

    error_code = "NUMERICAL_ERROR"
    http_status = 500
    exit_code = 3
