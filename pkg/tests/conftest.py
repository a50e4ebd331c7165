import numpy as np
import pytest

from ris_locate.channel import ScenarioConfig
from ris_locate.geometry import RisDescriptor

LAMBDA = ScenarioConfig().wavelength

WALLS = [
    ([0.0, 5.0, 7.0], 0.0),
    ([5.0, 0.0, 1.0], np.pi / 2),
    ([10.0, 6.0, 8.0], np.pi),
    ([4.0, 10.0, 6.0], 3 * np.pi / 2),
]
USER = np.array([4.0, 8.0, 2.0])


def wall_ris(count=3, rows=8, cols=8):
    return [RisDescriptor(p, b, rows, cols, LAMBDA) for p, b in WALLS[:count]]


@pytest.fixture
def scenario():
    return ScenarioConfig()


@pytest.fixture
def three_ris():
    return wall_ris(3)


@pytest.fixture
def four_ris():
    return wall_ris(4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
