import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from stainkit import RgbImage

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def random_tile(rng, height=16, width=16):
    """A random image on the 8-bit grid with no fully dark pixels."""
    return RgbImage(rng.integers(1, 256, size=(height, width, 3)) / 255.0)
