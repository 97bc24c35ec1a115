import numpy as np
import pytest

from caplight import geometry as geo
from caplight import quadrature as quad


@pytest.fixture(scope="session")
def ctx2():
    return geo.SphereContext(2, 1.0)


@pytest.fixture(scope="session")
def ctx3():
    return geo.SphereContext(3, 1.0)


@pytest.fixture(scope="session")
def north3():
    return np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def rule3_16(ctx3):
    return quad.sphere_rule(ctx3, 16)


@pytest.fixture(scope="session")
def rule3_48(ctx3):
    return quad.sphere_rule(ctx3, 48)


@pytest.fixture(scope="session")
def rule2_64(ctx2):
    return quad.sphere_rule(ctx2, 64)
