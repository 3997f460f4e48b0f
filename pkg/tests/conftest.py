import importlib.resources
from pathlib import Path

import pytest

from vibrofem.config import load_config


@pytest.fixture(scope="session")
def bench_path() -> Path:
    return Path(importlib.resources.files("vibrofem") / "data"
                / "fuselage_slice.cfg")


@pytest.fixture(scope="session")
def bench(bench_path):
    return load_config(bench_path)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"
