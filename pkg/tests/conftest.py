import numpy as np
import pytest
from hypothesis import settings

from sdnbgp import topology as topo

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def path3():
    return topo.AsGraph(3, [(0, 1), (1, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
