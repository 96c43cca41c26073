import numpy as np
import pytest

from ensk.core import EnergyModel

from helpers import make_pool


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def stuck_pool():
    return make_pool([0.510] + [0.505] * 4)


@pytest.fixture
def od_weights():
    return (0.0, 0.11, 0.70, 0.93, 0.99, 1.0, 1.0, 1.0, 1.0)


@pytest.fixture
def plain():
    return EnergyModel.plain()
