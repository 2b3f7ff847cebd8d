"""
Shared fixtures for the drift-estimation tests
"""
import numpy as np
import pytest

from app.config import settings
from app.models import CovarianceModel

MODEL_STRINGS = [
    "wiener",
    "fbm:0.3",
    "fbm:0.7",
    "fbm:0.9",
    "fbm:0.7+wiener",
    "fbm:0.3+fbm:0.8",
]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo or large-grid test (deselect with -m 'not slow')")


@pytest.fixture(params=MODEL_STRINGS)
def model(request) -> CovarianceModel:
    return CovarianceModel.parse(request.param)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture(autouse=True)
def isolated_cache(monkeypatch, tmp_path):
    """Keep the weight cache off by default and out of the working tree"""
    monkeypatch.setattr(settings, "enable_cache", False)
    monkeypatch.setattr(settings, "cache_dir", tmp_path / "cache")
