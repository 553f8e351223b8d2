import numpy as np
import pytest

from ofdmsync import SystemConfig


@pytest.fixture
def cfg512():
    """Default full-scale system: 512 tones, 64 guard, 10 blocks, 4 regions."""
    return SystemConfig()


@pytest.fixture
def cfg8():
    """Toy system small enough for exhaustive checks."""
    return SystemConfig(n=8, n_g=2, m=2, q=2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
