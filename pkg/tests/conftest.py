import os
import sys
from pathlib import Path

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

import numpy as np
import pytest

from swingcert.src.core import settings as settings_module

CASES = Path(_ROOT) / "swingcert" / "data" / "cases"


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    """Each test sees default settings, untouched by the caller's environment."""
    for key in settings_module._ENV_KEYS.values():
        monkeypatch.delenv(key, raising=False)
    monkeypatch.setattr(settings_module, "load_dotenv", lambda *a, **k: False)
    settings_module.reset_settings()
    yield
    settings_module.reset_settings()


@pytest.fixture
def cases_dir() -> Path:
    return CASES


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
