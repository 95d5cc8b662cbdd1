# ============================================================================
# FILE: utils/path_validator.py (Path Validation Utilities)
# ============================================================================

"""
Path validation for REST requests that read link configs or persist results
Paths are restricted to CONFIG_FOLDER and RESULTS_FOLDER
"""

from pathlib import Path
from typing import List, Union

from config import Config
from utils.exceptions import APIError


class PathValidationError(APIError):
    """Raised when a path validation check fails"""

    def __init__(self, message: str):
        super().__init__(message, error_code="PATH_NOT_ALLOWED", http_status=403)


def get_authorized_directories() -> List[str]:
    """
    Get list of authorized directories from configuration

    Returns:
        List of authorized directory paths
    """
    return [d for d in (Config.CONFIG_FOLDER, Config.RESULTS_FOLDER) if d]


def normalize_path(path: Union[str, Path]) -> Path:
    return Path(path).resolve()


def _reject_traversal(name: str) -> None:
    if not name:
        raise PathValidationError("Empty path not allowed")
    if ".." in Path(name).parts or Path(name).is_absolute() or ":" in name:
        raise PathValidationError(f"Path traversal detected in path: {name}")


def secure_path_join(base_dir: Union[str, Path], *paths: Union[str, Path]) -> str:
    """
    Securely join paths ensuring the result stays within the base directory

    Raises:
        PathValidationError: If resulting path would escape base directory
    """
    base_normalized = normalize_path(base_dir)
    joined_path = base_normalized
    for path_component in paths:
        joined_path = joined_path / path_component
    final_path = normalize_path(joined_path)

    try:
        final_path.relative_to(base_normalized)
    except ValueError:
        raise PathValidationError(f"Path '{final_path}' would escape base directory '{base_normalized}'")

    return str(final_path)


def resolve_config_path(name: str) -> str:
    """Resolve a link config name, relative to CONFIG_FOLDER."""
    _reject_traversal(name)
    path = secure_path_join(Config.CONFIG_FOLDER, name)
    if not Path(path).is_file():
        raise PathValidationError(f"Config '{name}' not found in {Config.CONFIG_FOLDER}")
    return path


def resolve_results_dir(name: str) -> str:
    """Resolve (and create) an output directory below RESULTS_FOLDER."""
    _reject_traversal(name)
    path = secure_path_join(Config.RESULTS_FOLDER, name)
    Path(path).mkdir(parents=True, exist_ok=True)
    return path
