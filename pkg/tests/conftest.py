import numpy as np
import pytest

from comanip.sim import ParamBundle


@pytest.fixture
def bundle():
    return ParamBundle()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
