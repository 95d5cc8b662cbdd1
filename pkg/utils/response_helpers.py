# ============================================================================
# FILE: utils/response_helpers.py (Response Formatting Utilities)
# ============================================================================

"""
Response formatting utilities for consistent API responses
"""

import dataclasses
import enum
import math
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import numpy as np


def to_jsonable(value: Any) -> Any:
    """Convert simulator results (dataclasses, enums, numpy values) into JSON-safe structures.

    NaN and Inf become None so that responses stay valid JSON.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, complex):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return None
        return value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def success_response(data: Any = None, message: str = "Operation completed successfully") -> Dict:
    """
    Create standardized success response

    Args:
        data: Response data payload (converted with to_jsonable)
        message: Success message

    Returns:
        Dict: Standardized success response
    """
    response = {"success": True, "message": message, "timestamp": datetime.now(timezone.utc).isoformat()}

    if data is not None:
        response["data"] = to_jsonable(data)

    return response


def error_response(message: str, error_code: str = "GENERIC_ERROR", details: Optional[Dict] = None) -> Dict:
    """
    Create standardized error response

    Args:
        message: Error message
        error_code: Error code identifier
        details: Additional error details

    Returns:
        Dict: Standardized error response
    """
    error: Dict[str, Any] = {"code": error_code, "message": message}

    if details:
        error["details"] = to_jsonable(details)

    return {
        "success": False,
        "error": error,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
