# ============================================================================
# FILE: utils/decorators.py (Error Handling Decorators)
# ============================================================================

"""
Decorators for error handling in route functions
"""

import functools
import logging
from typing import Any, Callable

from flask import jsonify
from werkzeug.exceptions import HTTPException

from utils.error_codes import classify_error
from utils.exceptions import APIError, SimulationError
from utils.response_helpers import error_response

logger = logging.getLogger(__name__)


def handle_errors(func: Callable) -> Callable:
    """
    Decorator to handle simulator errors and general exceptions

    Catches exceptions raised by route bodies and formats them into standardized
    API responses.  Status codes come from utils.error_codes.classify_error().
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)

        except HTTPException:
            # Re-raise HTTP errors (e.g. 413 Request Entity Too Large) so
            # Flask handles them instead of swallowing them as 500s.
            raise

        except APIError as e:
            logger.error(f"API error in {func.__name__}: {e.message}")
            return jsonify(error_response(e.message, e.error_code)), e.http_status

        except SimulationError as e:
            logger.error(f"Simulation error in {func.__name__}: {e.error_code} - {e.message}")
            return jsonify(error_response(e.message, e.error_code, details={"type": type(e).__name__})), e.http_status

        except Exception as e:
            http_status, error_code, _ = classify_error(e)
            logger.exception(f"Error in {func.__name__}: {e}")
            if error_code == "INTERNAL_ERROR":
                return jsonify(error_response(f"Internal server error: {e}", error_code)), http_status
            return jsonify(error_response(str(e), error_code, details={"type": type(e).__name__})), http_status

    return wrapper
