import numpy as np
import pytest

from pcpsketch import synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def diag21():
    return np.diag([2.0, 1.0])


@pytest.fixture(scope="session")
def powerlaw_300x40():
    return synthetic.powerlaw(300, 40, alpha=1.0, seed=1)
