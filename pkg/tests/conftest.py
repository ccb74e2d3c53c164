import numpy as np
import pytest

from gen_scenarios import S1


@pytest.fixture
def s1():
    return S1()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
