# tests/conftest.py
from pathlib import Path

import numpy as np
import pytest

from app.utils.fixtures import FIXTURES

PROBLEMS_DIR = Path(__file__).resolve().parent.parent / "problems"


@pytest.fixture
def problems():
    return {name: fixture.build() for name, fixture in FIXTURES.items()}


@pytest.fixture
def problem_path():
    return lambda name: str(PROBLEMS_DIR / f"{name}.json")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
