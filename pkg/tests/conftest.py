import numpy as np
import pytest

from pcfield import presets


@pytest.fixture(scope="session")
def stationary():
    return presets.stationary()


@pytest.fixture(scope="session")
def strong():
    return presets.strong()


@pytest.fixture(scope="session")
def weak():
    return presets.weak()


@pytest.fixture(scope="session")
def ampl2():
    return presets.ampl2()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
