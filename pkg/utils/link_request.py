# ============================================================================
# FILE: utils/link_request.py (Link Config Request Parsing)
# ============================================================================

"""
Helpers that turn REST request bodies into validated LinkConfig objects

A body may carry any of:
    "config":      TOML-shaped JSON object ({"waveform": {"rank": 2}, ...})
    "config_file": name of a TOML file below CONFIG_FOLDER
    "overrides":   list of "section.key=value" strings, applied last
"""

import logging
from functools import wraps
from typing import Any, Callable, Dict, Optional

from flask import current_app, request

from phy.linkconfig import LinkConfig, load_config, resolve_config
from utils.exceptions import APIError
from utils.path_validator import resolve_config_path

logger = logging.getLogger(__name__)


def get_json_body() -> Dict[str, Any]:
    """Parsed JSON object of the request; an empty body counts as {}."""
    if not request.get_data():
        return {}
    body = request.get_json(silent=True)
    if not isinstance(body, dict):
        raise APIError("Request body must be a JSON object", "INVALID_JSON")
    return body


def link_config_from_body(body: Dict[str, Any]) -> LinkConfig:
    overrides = body.get("overrides") or []
    if not isinstance(overrides, list) or not all(isinstance(o, str) for o in overrides):
        raise APIError("'overrides' must be a list of 'section.key=value' strings", "INVALID_PARAMETER")

    if body.get("config_file"):
        if body.get("config"):
            raise APIError("Give either 'config' or 'config_file', not both", "INVALID_PARAMETER")
        path = resolve_config_path(str(body["config_file"]))
        logger.debug(f"Loading link config from {path}")
        return load_config(path, overrides)

    raw = body.get("config") or {}
    if not isinstance(raw, dict):
        raise APIError("'config' must be a JSON object of config sections", "INVALID_PARAMETER")
    return resolve_config(raw, overrides)


def with_link_config(func: Callable) -> Callable:
    """
    Decorator that provides the request's LinkConfig and JSON body to route functions

    Errors propagate to @handle_errors.
    """

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        body = get_json_body()
        cfg = link_config_from_body(body)
        return func(cfg, body, *args, **kwargs)

    return wrapper


def get_number(source: Dict[str, Any], name: str, default: Optional[float] = None, cast: type = float) -> Any:
    """Read a numeric parameter from a body or query dict; missing and no default raises APIError."""
    value = source.get(name, default)
    if value is None:
        raise APIError(f"Missing required parameter: {name}", "MISSING_PARAMETER")
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise APIError(f"Parameter '{name}' must be a number, got {value!r}", "INVALID_PARAMETER")


def sim_threads() -> int:
    return max(1, int(current_app.config.get("SIM_THREADS", 1)))
