import numpy as np
import pytest

from wpcopula import Dataset, SimSpec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_linear(n=80, d=1, a=0.0, seed=0):
    """Small linear-model dataset for pipeline tests."""
    return generate(SimSpec(model="linear", n=n, d=d, a=a, seed=seed))


def make_tiny():
    """The 3-point dataset used by several neighbor examples."""
    return Dataset(np.array([[0.0], [1.0], [2.0]]),
                   np.array([5.0, 10.0, 15.0]),
                   np.array([15.0, 10.0, 5.0]))
