# ============================================================================
# FILE: app.py (Main Application)
# ============================================================================

"""
sublink Flask REST API - Main Application

HTTP front end for the link-level simulator. The same operations are
available offline through cli.py; ``python app.py`` is ``sublink serve``.
"""

import hmac
import logging
import sys
from datetime import datetime, timezone
from typing import Any, List, Optional

from flask import Flask, Response, jsonify
from flask import request as flask_request
from flask.json.provider import DefaultJSONProvider
from flask_cors import CORS
from werkzeug.exceptions import HTTPException

logger = logging.getLogger(__name__)

from config import _DEV_SECRET_KEY, _PLACEHOLDER_API_KEY, Config
from routes import analysis_bp, link_bp, numerology_bp
from utils.executor import reset_executor
from utils.logging_setup import configure_logging
from utils.response_helpers import error_response, to_jsonable

API_PREFIX = "/api/v1"

MODULES = {
    "numerology": "Subcarrier spacing, PRB limits, FFT size and cyclic prefix",
    "link": "Config validation, single drops, BLER sweeps and waveform/PTRS comparison",
    "analysis": "PAPR CCDF, PA back-off search and phase-noise PSD",
}

# First path segment after the prefix that needs no API key
PUBLIC_RESOURCES = frozenset({"health", "docs"})

_RED = "\033[91m{}\033[0m"


class _NaNSafeJSONProvider(DefaultJSONProvider):
    """JSON provider that converts NaN and Inf floats (and numpy values) to JSON-safe values."""

    def dumps(self, obj: Any, **kwargs: Any) -> str:
        return super().dumps(to_jsonable(obj), **kwargs)


def _warn_insecure_settings(app: Flask, config_class) -> None:
    for warning in config_class.validate_paths():
        logger.warning(_RED.format(warning))
    if app.config.get("SECRET_KEY") == _DEV_SECRET_KEY:
        logger.warning(_RED.format("SECRET_KEY is the development default. Set a secure value in .env before deploying."))
    api_key = app.config.get("API_KEY", "")
    if not api_key:
        logger.warning(_RED.format("API_KEY is not set; every endpoint is open."))
    elif api_key == _PLACEHOLDER_API_KEY:
        logger.warning(_RED.format("Using the placeholder API key. Replace it with a strong, unique key."))


def _install_api_key_check(app: Flask, api_key: str) -> None:
    """Require ``Authorization: Bearer <API_KEY>`` on everything but health, docs and preflight."""

    @app.before_request
    def require_api_key() -> Optional[Response]:
        if flask_request.method == "OPTIONS":
            return None
        # ['', 'api', 'v1', '<resource>', ...]
        parts = flask_request.path.rstrip("/").split("/")
        if len(parts) > 3 and parts[3] in PUBLIC_RESOURCES:
            return None
        auth = flask_request.headers.get("Authorization", "")
        token = auth.removeprefix("Bearer ")
        if hmac.compare_digest(token, api_key):
            return None
        body = error_response("Valid API key required in Authorization header", "UNAUTHORIZED")
        return jsonify(body), 401


def _api_endpoints(app: Flask) -> List[str]:
    endpoints = []
    for rule in app.url_map.iter_rules():
        if not rule.rule.startswith(API_PREFIX) or "/docs" in rule.rule or rule.rule.endswith("/health"):
            continue
        for method in sorted(rule.methods - {"HEAD", "OPTIONS"}):
            endpoints.append(f"{method} {rule.rule}")
    return sorted(endpoints, key=lambda e: e.split(" ", 1)[1])


def create_app(config_class=Config) -> Flask:
    """Application factory"""

    app = Flask(__name__)
    app.json = _NaNSafeJSONProvider(app)
    app.config.from_object(config_class)

    CORS(
        app,
        resources={
            rf"{API_PREFIX}/*": {
                "origins": app.config.get("CORS_ORIGINS", "*"),
                "methods": ["GET", "POST", "OPTIONS"],
                "allow_headers": ["Content-Type", "Authorization"],
            }
        },
    )

    configure_logging(
        app.config["SUBLINK_LOG_DIR"],
        app.config.get("LOG_LEVEL", "INFO"),
        app.config["SUBLINK_LOG_MAX_BYTES"],
        app.config["SUBLINK_LOG_BACKUP_COUNT"],
    )
    _warn_insecure_settings(app, config_class)

    api_key = app.config.get("API_KEY", "")
    if api_key:
        _install_api_key_check(app, api_key)

    for blueprint in (numerology_bp, link_bp, analysis_bp):
        app.register_blueprint(blueprint, url_prefix=API_PREFIX)

    @app.route(f"{API_PREFIX}/health", methods=["GET"])
    def health_check() -> Response:
        return jsonify(
            {
                "success": True,
                "message": "sublink API is running",
                "version": app.config.get("API_VERSION", "0.0.0"),
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "sim_threads": app.config.get("SIM_THREADS", 1),
                "rest_max_blocks": app.config.get("REST_MAX_BLOCKS"),
                "modules": list(MODULES),
                "endpoints": _api_endpoints(app),
            }
        )

    @app.route(f"{API_PREFIX}/docs", methods=["GET"])
    def api_documentation() -> Response:
        """Get API documentation index"""
        base = flask_request.host_url.rstrip("/") + API_PREFIX
        return jsonify(
            {
                "title": "sublink REST API - Sub-THz Link-Level Simulator",
                "version": app.config.get("API_VERSION", "0.0.0"),
                "description": "BLER sweeps and waveform analyses for 90 GHz OFDM and SC-FDMA links",
                "base_url": base,
                "authentication": "Authorization: Bearer <API_KEY>, except health and docs",
                "config_format": "Request bodies carry link configs as TOML-shaped JSON under 'config'",
                "modules": MODULES,
                "module_docs": {name: f"{base}/docs/{name}" for name in MODULES},
            }
        )

    @app.errorhandler(HTTPException)
    def http_error(error: HTTPException) -> Response:
        details = None
        message = error.description or error.name
        if error.code == 404:
            message = "The requested API endpoint does not exist"
            details = {"available_docs": f"{API_PREFIX}/docs"}
        elif error.code == 413:
            max_kb = (app.config.get("MAX_CONTENT_LENGTH") or 0) // 1024
            message = f"Request body exceeds the {max_kb}KB limit"
        elif error.code == 500:
            logger.error(f"Unhandled error: {getattr(error, 'original_exception', None)!r}")
            message = "An unexpected error occurred"
        code = error.name.upper().replace(" ", "_")
        return jsonify(error_response(message, code, details)), error.code

    return app


def serve(host: str = "127.0.0.1", port: int = 5000, debug: bool = False) -> None:
    """Run the API with Waitress, or the Flask development server when debug is set."""
    # create_app() reads Config class attributes, so debug settings go there first.
    if debug:
        Config.DEBUG = True
        Config.LOG_LEVEL = "DEBUG"
    else:
        Config.validate_production()

    app = create_app()
    logger.info(f"Starting sublink API server on {host}:{port}")
    logger.info(f"API documentation: http://{host}:{port}{API_PREFIX}/docs")

    try:
        if debug:
            app.run(host=host, port=port, debug=True, threaded=False)
        else:
            from waitress import serve as waitress_serve  # type: ignore[import-untyped]

            waitress_serve(app, host=host, port=port, threads=4)
    except KeyboardInterrupt:
        logger.info("Ctrl+C received.")
    finally:
        reset_executor()
        logger.info("Shutdown complete.")


if __name__ == "__main__":
    from cli import main

    sys.exit(main(["serve", *sys.argv[1:]]))
