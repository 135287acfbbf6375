"""
Shared fixtures and hypothesis profiles.

Select a profile with HYPOTHESIS_PROFILE=ci|dev (default dev).
"""

import json
import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings as hypothesis_settings

from wienervar.core.config import settings
from wienervar.models.grid import TimeGrid

hypothesis_settings.register_profile(
    "dev",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
hypothesis_settings.register_profile("ci", max_examples=150, deadline=None)
hypothesis_settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))

ACCEPTANCE_DIR = Path(__file__).resolve().parents[1] / "acceptance"


@pytest.fixture
def grid8() -> TimeGrid:
    return TimeGrid.uniform(8)


@pytest.fixture
def grid16() -> TimeGrid:
    return TimeGrid.uniform(16)


@pytest.fixture
def grid32() -> TimeGrid:
    return TimeGrid.uniform(32)


@pytest.fixture
def single_thread(monkeypatch):
    monkeypatch.setattr(settings, "THREADS", 1)


@pytest.fixture
def write_config(tmp_path):
    """Write a descriptor dict to <tmp>/configs/<name>.json and return the path."""
    folder = tmp_path / "configs"
    folder.mkdir(exist_ok=True)

    def write(data: dict, name: str = None) -> Path:
        path = folder / f"{name or data['experiment_id']}.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write


@pytest.fixture
def out_dir(tmp_path) -> Path:
    return tmp_path / "runs"
