import pytest

from src.config.models import CgConfig
from src.data.synthetic import (
    corridor_network, diamond_network, halting_network, line_network, merge_network, two_station_network,
)
from src.solver.backends import BundledBackend


@pytest.fixture
def line():
    return line_network()


@pytest.fixture
def diamond():
    return diamond_network()


@pytest.fixture
def two_station():
    return two_station_network()


@pytest.fixture
def merge():
    return merge_network()


@pytest.fixture
def halting():
    return halting_network()


@pytest.fixture
def corridor():
    return corridor_network()


@pytest.fixture
def backend():
    return BundledBackend(check_duality=True)


@pytest.fixture
def small_config():
    """Short horizon so the exhaustive oracles stay cheap"""
    return CgConfig(horizon=240, threads=1, time_limit=None, pricing_time_limit=None)
