from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=100)
settings.load_profile("suite")

HELPERS_DIR = Path(__file__).parent / "helpers"
FIXTURES_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def helper_path(name: str) -> Path:
    return HELPERS_DIR / name
