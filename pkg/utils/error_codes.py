# ============================================================================
# FILE: utils/error_codes.py
# ============================================================================

"""
Error classification shared by the REST layer and the CLI.

Every exception that can leave the simulator is mapped to
(http_status, error_code, exit_code).  Exit codes follow the CLI contract:
0 success, 2 configuration error, 3 runtime numerical error.
"""

from typing import Dict, Tuple, Type

import numpy as np
from werkzeug.exceptions import HTTPException

from utils.exceptions import APIError, SimulationError

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

# Third-party exception types that are not SimulationErrors but still have a
# well defined meaning for callers.
_FOREIGN_ERROR_CLASSIFICATION: Dict[Type[BaseException], Tuple[int, str, int]] = {
    np.linalg.LinAlgError: (500, "NUMERICAL_ERROR", EXIT_NUMERICAL_ERROR),
    FloatingPointError: (500, "NUMERICAL_ERROR", EXIT_NUMERICAL_ERROR),
    ZeroDivisionError: (500, "NUMERICAL_ERROR", EXIT_NUMERICAL_ERROR),
    FileNotFoundError: (404, "FILE_NOT_FOUND", EXIT_CONFIG_ERROR),
    PermissionError: (403, "PERMISSION_DENIED", EXIT_CONFIG_ERROR),
}


def classify_error(exc: BaseException) -> Tuple[int, str, int]:
    """Map an exception to (http_status, error_code, exit_code).

    Returns a default 500 / INTERNAL_ERROR / exit 3 classification for
    unrecognized exceptions.
    """
    if isinstance(exc, SimulationError):
        return exc.http_status, exc.error_code, exc.exit_code
    if isinstance(exc, APIError):
        return exc.http_status, exc.error_code, EXIT_CONFIG_ERROR
    if isinstance(exc, HTTPException):
        return exc.code or 500, "HTTP_ERROR", EXIT_NUMERICAL_ERROR
    for exc_type, classification in _FOREIGN_ERROR_CLASSIFICATION.items():
        if isinstance(exc, exc_type):
            return classification
    return 500, "INTERNAL_ERROR", EXIT_NUMERICAL_ERROR


def exit_code_for(exc: BaseException) -> int:
    """Exit code the CLI returns for an exception."""
    return classify_error(exc)[2]
