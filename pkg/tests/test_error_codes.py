# ============================================================================
# FILE: tests/test_error_codes.py (Error Classification Tests)
# ============================================================================

"""
Test cases for error classification and the handle_errors decorator's
integration with utils.error_codes.
"""

import numpy as np
import pytest
from werkzeug.exceptions import NotFound

from utils.decorators import handle_errors
from utils.error_codes import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, classify_error, exit_code_for
from utils.exceptions import (
    AnalysisError,
    APIError,
    ConfigError,
    DomainError,
    EstimationError,
    InputError,
    NumericalError,
)

pytestmark = pytest.mark.unit


class TestClassifyError:
    """classify_error returns (http_status, error_code, exit_code)"""

    @pytest.mark.parametrize(
        "exc, expected",
        [
            # configuration and input problems exit 2
            (ConfigError("x"), (400, "CONFIG_ERROR", EXIT_CONFIG_ERROR)),
            (InputError("x"), (400, "INPUT_ERROR", EXIT_CONFIG_ERROR)),
            (DomainError("x"), (400, "DOMAIN_ERROR", EXIT_CONFIG_ERROR)),
            (APIError("x", "INVALID_PARAMETER"), (400, "INVALID_PARAMETER", EXIT_CONFIG_ERROR)),
            (FileNotFoundError("x"), (404, "FILE_NOT_FOUND", EXIT_CONFIG_ERROR)),
            (PermissionError("x"), (403, "PERMISSION_DENIED", EXIT_CONFIG_ERROR)),
            # runtime numerical failures exit 3
            (EstimationError("x"), (422, "ESTIMATION_ERROR", EXIT_NUMERICAL_ERROR)),
            (AnalysisError("x"), (422, "ANALYSIS_ERROR", EXIT_NUMERICAL_ERROR)),
            (NumericalError("x"), (500, "NUMERICAL_ERROR", EXIT_NUMERICAL_ERROR)),
            (np.linalg.LinAlgError("singular"), (500, "NUMERICAL_ERROR", EXIT_NUMERICAL_ERROR)),
            (FloatingPointError("overflow"), (500, "NUMERICAL_ERROR", EXIT_NUMERICAL_ERROR)),
            (ZeroDivisionError(), (500, "NUMERICAL_ERROR", EXIT_NUMERICAL_ERROR)),
        ],
    )
    def test_known_errors(self, exc, expected):
        assert classify_error(exc) == expected
        assert exit_code_for(exc) == expected[2]

    def test_http_exception(self):
        assert classify_error(NotFound())[:2] == (404, "HTTP_ERROR")

    def test_unknown_exception_returns_500(self):
        assert classify_error(RuntimeError("boom")) == (500, "INTERNAL_ERROR", EXIT_NUMERICAL_ERROR)

    def test_api_error_status(self):
        assert classify_error(APIError("x", "PATH_NOT_ALLOWED", 403))[0] == 403


class TestHandleErrorsDecorator:
    """handle_errors maps exceptions to JSON error responses"""

    def _call(self, app, exc):
        @handle_errors
        def route():
            raise exc

        with app.test_request_context():
            response, status = route()
            return response.get_json(), status

    def test_config_error_returns_400(self, app):
        data, status = self._call(app, ConfigError("rank must be 1 or 2"))
        assert status == 400
        assert data["error"]["code"] == "CONFIG_ERROR"
        assert data["error"]["message"] == "rank must be 1 or 2"
        assert data["error"]["details"] == {"type": "ConfigError"}

    def test_estimation_error_returns_422(self, app):
        _, status = self._call(app, EstimationError("no pilot energy"))
        assert status == 422

    def test_api_error_has_no_details(self, app):
        data, status = self._call(app, APIError("Missing required parameter: snr_db", "MISSING_PARAMETER"))
        assert status == 400
        assert "details" not in data["error"]

    def test_linalg_error_returns_500_with_type(self, app):
        data, status = self._call(app, np.linalg.LinAlgError("singular"))
        assert status == 500
        assert data["error"]["code"] == "NUMERICAL_ERROR"
        assert data["error"]["details"]["type"] == "LinAlgError"

    def test_unknown_exception_returns_500(self, app):
        data, status = self._call(app, RuntimeError("boom"))
        assert status == 500
        assert data["error"]["code"] == "INTERNAL_ERROR"
        assert data["error"]["message"] == "Internal server error: boom"

    def test_http_exception_propagates(self, app):
        with pytest.raises(NotFound):
            self._call(app, NotFound())

    def test_success_passes_through(self, app):
        @handle_errors
        def route():
            return "ok"

        assert route() == "ok"
