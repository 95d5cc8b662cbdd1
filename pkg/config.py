# ============================================================================
# FILE: config.py (Configuration Settings)
# ============================================================================

"""
Service settings for the sublink API and CLI

Link parameters (numerology, waveform, channel, ...) are not read from the
environment; they come from TOML link configuration files, see
phy/linkconfig.py.
"""

import os
from typing import List

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

_DEV_SECRET_KEY = "dev-secret-key-change-in-production"
_PLACEHOLDER_API_KEY = "replace-with-generated-key"


class Config:
    """Application configuration"""

    # API Settings
    API_VERSION = os.environ.get("API_VERSION") or "0.3.0"
    SECRET_KEY = os.environ.get("SECRET_KEY") or _DEV_SECRET_KEY

    # API Key Authentication
    # Generate a key with: python -c "import secrets; print(secrets.token_hex(32))"
    API_KEY = os.environ.get("API_KEY") or ""

    # CORS Settings: browser origins allowed to make cross-origin requests
    CORS_ORIGINS = os.environ.get("CORS_ORIGINS") or "http://127.0.0.1"

    # Link configs posted as JSON are small; sweeps never upload data.
    MAX_CONTENT_LENGTH = int(os.environ.get("MAX_CONTENT_LENGTH") or 1024 * 1024)

    # Logging. SUBLINK_LOG_DIR is resolved to an absolute path so logs land in
    # one place regardless of the working directory.
    LOG_LEVEL = os.environ.get("LOG_LEVEL") or "INFO"
    SUBLINK_LOG_DIR = os.path.abspath(os.environ.get("SUBLINK_LOG_DIR") or "logs")
    SUBLINK_LOG_MAX_BYTES = int(os.environ.get("SUBLINK_LOG_MAX_BYTES") or 5 * 1024 * 1024)
    SUBLINK_LOG_BACKUP_COUNT = int(os.environ.get("SUBLINK_LOG_BACKUP_COUNT") or 5)

    # Folders the REST surface may read link configs from and write results to
    RESULTS_FOLDER = os.path.abspath(os.environ.get("RESULTS_FOLDER") or "results")
    CONFIG_FOLDER = os.path.abspath(os.environ.get("CONFIG_FOLDER") or "experiments")

    # Simulation
    SIM_THREADS = int(os.environ.get("SIM_THREADS") or os.cpu_count() or 1)
    REST_MAX_BLOCKS = int(os.environ.get("REST_MAX_BLOCKS") or 2000)

    # Flask Settings
    TESTING = False
    DEBUG = False

    @classmethod
    def validate_production(cls) -> None:
        """Reject insecure defaults that must be overridden before production use."""
        if cls.SECRET_KEY == _DEV_SECRET_KEY:
            raise RuntimeError(
                "SECRET_KEY is still set to the development default. "
                "Set a secure value in your .env file before running in production. "
                'Generate one with: python -c "import secrets; print(secrets.token_hex(32))"'
            )
        if cls.API_KEY == _PLACEHOLDER_API_KEY:
            raise RuntimeError(
                "API_KEY is still the placeholder value. "
                "Set a strong, unique API_KEY in your .env file before running in production."
            )

    @classmethod
    def validate_paths(cls) -> List[str]:
        """Check that configured folders exist. Returns list of warning strings."""
        warnings = []
        for name in ("RESULTS_FOLDER", "CONFIG_FOLDER"):
            path = getattr(cls, name)
            if not os.path.isdir(path):
                warnings.append(f"{name} not found: {path}")
        if cls.SIM_THREADS < 1:
            warnings.append(f"SIM_THREADS must be positive, got {cls.SIM_THREADS}; using 1")
        return warnings


class TestingConfig(Config):
    """Testing configuration"""

    TESTING = True
    DEBUG = True
    LOG_LEVEL = "DEBUG"
    SIM_THREADS = 1
    REST_MAX_BLOCKS = 50
    API_KEY = ""  # Disable auth; must be set before create_app() registers the before_request hook
