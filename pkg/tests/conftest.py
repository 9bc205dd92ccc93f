import numpy as np
import pytest

from cdii import cases


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def spd2():
    return cases.get_case("constant-spd-2d")


@pytest.fixture(scope="session")
def odd3():
    return cases.get_case("odd-3d-t623")
