# ============================================================================
# FILE: utils/logging_setup.py (Logging Configuration)
# ============================================================================

"""
Root logger setup shared by the Flask app factory and the CLI
"""

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

LOG_FORMAT = "%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]"
LOG_FILE_NAME = "sublink.log"


def configure_logging(
    log_dir: Optional[str],
    level: str = "INFO",
    max_bytes: int = 5 * 1024 * 1024,
    backup_count: int = 5,
) -> Optional[str]:
    """Install a rotating file handler in log_dir plus a console handler on the root logger.

    Returns the log file path, or None when log_dir is empty or cannot be
    created, in which case only the console handler is installed.
    """
    handlers: list = [logging.StreamHandler()]
    log_file = None
    failed = False
    if log_dir:
        try:
            os.makedirs(log_dir, exist_ok=True)
            log_file = os.path.join(log_dir, LOG_FILE_NAME)
            handlers.insert(0, RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backup_count))
        except OSError:
            log_file = None
            failed = True

    # Clear any existing handlers to ensure basicConfig takes effect
    logging.root.handlers = []
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT, handlers=handlers)
    if failed:
        logging.getLogger(__name__).warning(f"Log directory {log_dir} is not writable; logging to console only")
    return log_file
