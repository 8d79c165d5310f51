import numpy as np
import pytest

from fhmimo import make_radar_params


@pytest.fixture(scope="session")
def fig5_params():
    """10-antenna, 20-sub-band radar sampled at twice the bandwidth (40/hop)."""
    return make_radar_params(10, 20, 10, 1e8, 2e-7, 5e-9, prf=1e5)


@pytest.fixture(scope="session")
def fig3_params():
    """Same radar sampled at ten times the bandwidth (200 samples/hop)."""
    return make_radar_params(10, 20, 10, 1e8, 2e-7, 1e-9, prf=1e5)


@pytest.fixture(scope="session")
def toy_params():
    """Smallest admissible configuration: 2 antennas, 4 sub-bands."""
    return make_radar_params(2, 4, 1, 4, 1, 0.25, prf=1)


@pytest.fixture(scope="session")
def toy_params_2hop():
    """Two-hop toy configuration with 8 samples per hop."""
    return make_radar_params(2, 4, 2, 4, 1, 0.125, prf=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
