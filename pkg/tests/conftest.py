"""Shared fixtures for co2monitor tests."""

import os
from pathlib import Path

import pytest

from co2monitor.flux_data import FIRST_YEAR

from .helpers import vintage_csv

DATA_DIR = Path(__file__).parent / "data"
GCB2020 = DATA_DIR / "gcb2020.csv"


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Keep settings and cache files out of the real home and working directory."""
    home = tmp_path / "home"
    home.mkdir()
    monkeypatch.setenv("HOME", str(home))
    monkeypatch.chdir(tmp_path)
    return home


@pytest.fixture
def write_vintage(tmp_path):
    """Write a vintage file for a given imbalance series and return its path."""

    def _write(name: str, imbalance, first_year: int = FIRST_YEAR) -> Path:
        path = tmp_path / name
        path.write_text(vintage_csv(imbalance, first_year), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def gcb2020_path():
    """Path of the pinned 2020 release.

    ``CO2MONITOR_GCB2020`` names the file explicitly and then it must exist;
    otherwise tests needing it skip when ``tests/data/gcb2020.csv`` is absent.
    """
    override = os.environ.get("CO2MONITOR_GCB2020")
    if override:
        path = Path(override)
        if not path.is_file():
            pytest.fail(f"CO2MONITOR_GCB2020={override} does not name a file")
        return path
    if not GCB2020.exists():
        pytest.skip("tests/data/gcb2020.csv not present (pinned 2020 global carbon budget release)")
    return GCB2020
