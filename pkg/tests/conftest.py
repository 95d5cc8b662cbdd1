# ============================================================================
# FILE: tests/conftest.py
# ============================================================================

"""
Pytest configuration and shared fixtures for sublink tests
"""

import os
import sys

import numpy as np
import pytest

# Add the project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app import create_app
from config import Config, TestingConfig
from phy.linkconfig import LinkConfig
from phy.numerology import Numerology, derive_numerology
from tests.link_configs import small_config
from utils.executor import reset_executor

# ----------------------------------------------------------------------------
# Fixtures
# ----------------------------------------------------------------------------


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def num_small() -> Numerology:
    return derive_numerology(960e3, 8)


@pytest.fixture
def num_960() -> Numerology:
    return derive_numerology(960e3, 180)


@pytest.fixture
def link_config() -> LinkConfig:
    return small_config()


@pytest.fixture
def sc_link_config() -> LinkConfig:
    """SC-FDMA with enhanced TD PTRS over a short CDL-E channel with phase noise."""
    return small_config(
        waveform={"waveform": "sc-fdma"},
        channel={"channel": "cdl-e", "rms_ds_ns": 2.0},
        pn={"enabled": True},
        ptrs={"scheme": "td-enhanced", "groups": 12},
    )


@pytest.fixture
def results_folder(tmp_path, monkeypatch):
    """Point RESULTS_FOLDER and CONFIG_FOLDER at temporary directories."""
    results = tmp_path / "results"
    configs = tmp_path / "experiments"
    results.mkdir()
    configs.mkdir()
    monkeypatch.setattr(Config, "RESULTS_FOLDER", str(results))
    monkeypatch.setattr(Config, "CONFIG_FOLDER", str(configs))
    return results


@pytest.fixture
def app(tmp_path):
    """Create and configure a test app"""

    class _Config(TestingConfig):
        SUBLINK_LOG_DIR = str(tmp_path / "logs")

    # API_KEY is empty in TestingConfig; it must be configured before
    # create_app() because before_request hooks capture it at registration time.
    app = create_app(_Config)
    app.config["TESTING"] = True

    yield app

    reset_executor()


@pytest.fixture
def client(app):
    """Create a test client"""
    return app.test_client()
