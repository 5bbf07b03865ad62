import numpy as np
import pytest

from airy_defects.core import DiskDomain, ElasticConstants


@pytest.fixture(scope="session")
def elastic():
    return ElasticConstants(1.0, 0.3)


@pytest.fixture(scope="session")
def unit_disk():
    return DiskDomain((0.0, 0.0), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
