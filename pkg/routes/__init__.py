# ============================================================================
# FILE: routes/__init__.py (Package Initialization)
# ============================================================================

"""
Routes package for the sublink API

This package contains the route modules organized by functionality.
"""

# Import all blueprints for easy access
from .analysis import analysis_bp
from .link import link_bp
from .numerology import numerology_bp

__all__ = [
    "numerology_bp",
    "link_bp",
    "analysis_bp",
]
