from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(4180229)


@pytest.fixture
def fixtures_dir():
    return FIXTURES
