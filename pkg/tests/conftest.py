import os

import numpy as np
import pytest

from vlc_beacon.coding import design_frozen_set
from vlc_beacon.models import NetworkConfig, PolarCodeConfig, RllScheme

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

PAIRS = [(16, 32), (32, 64), (64, 128), (128, 256)]
SCHEMES = [RllScheme.MANCHESTER, RllScheme.FOUR_B_SIX_B]


def polar_config(ml: int, cl: int) -> PolarCodeConfig:
    n = cl.bit_length() - 1
    return PolarCodeConfig(n, design_frozen_set(n, ml))


@pytest.fixture
def fixture_path():
    def _path(name: str) -> str:
        return os.path.join(FIXTURES, name)

    return _path


@pytest.fixture
def rng():
    return np.random.default_rng(2018)


@pytest.fixture
def full_code():
    """ML = 128, CL = 256"""
    return polar_config(128, 256)


@pytest.fixture
def small_network():
    """A fast network: 8 anchors, ML = 16 and 5 sys ticks per shift"""
    return NetworkConfig(
        front_ends=8, ml=16, cl=32, scheme=RllScheme.FOUR_B_SIX_B, sr_hz=10_000_000
    )
