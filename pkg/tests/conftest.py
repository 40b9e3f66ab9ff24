import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polymerlab.disorder import gaussian, solve_beta

settings.register_profile("default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def window():
    """Gaussian critical window at theta = 0, cached by horizon."""
    cache = {}

    def make(N, theta=0.0):
        key = (N, theta)
        if key not in cache:
            cache[key] = solve_beta(gaussian(), N, theta)
        return cache[key]

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
