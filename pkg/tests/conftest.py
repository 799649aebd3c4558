import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from lossyvl.model import hamming, make_instance

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=200, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def binary():
    """P = (0.7, 0.3), Hamming, D = 0, eps = delta = 1/5, exact."""
    return make_instance(["7/10", "3/10"], hamming(2), 0, "1/5", "1/5")


@pytest.fixture
def binary_float():
    return make_instance([0.7, 0.3], hamming(2), 0, 0.2, 0.2)
